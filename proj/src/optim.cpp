// SPDX-License-Identifier: Apache-2.0
//
// starsim: link-level simulation and beamforming for simultaneously
// transmitting and reflecting reconfigurable surfaces.

#include "starsim/optim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace starsim {

namespace {

using C = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

constexpr double kPi = std::numbers::pi;
constexpr double kArmijoSlope = 1e-4;
constexpr double kArmijoShrink = 0.5;
constexpr double kThetaMax = kPi / 2;
constexpr int kCoeffStepsPerInner = 5;
constexpr int kBlockSubIters = 100;
constexpr int kPhaseGridPoints = 64;
constexpr int kAmplitudeGridPoints = 17;

double sign_or_one(double x) { return x >= 0.0 ? 1.0 : -1.0; }

// Chordal penalty of one phase difference: min over both admissible targets
// of |e^{j delta} - e^{j target}|^2, which reduces to 2 - 2|sin delta|.
double chordal_penalty(double delta) { return 2.0 - 2.0 * std::abs(std::sin(delta)); }

double chordal_penalty_ddelta(double delta) {
    return -2.0 * sign_or_one(std::sin(delta)) * std::cos(delta);
}

// Internal solver state: beta_t = sin^2(theta), beta_r = cos^2(theta), so the
// passive lossless energy constraint holds unconditionally along gradient
// trajectories.
struct CoeffState {
    VectorXd theta;
    VectorXd phi_t;
    VectorXd phi_r;

    [[nodiscard]] int size() const { return static_cast<int>(theta.size()); }
};

std::vector<TrCoefficients> to_coefficients(const CoeffState& s) {
    std::vector<TrCoefficients> out;
    out.reserve(static_cast<std::size_t>(s.size()));
    for (int m = 0; m < s.size(); ++m) {
        const double st = std::sin(s.theta(m));
        const double ct = std::cos(s.theta(m));
        out.push_back(make_coefficients(st * st, ct * ct, wrap_two_pi(s.phi_t(m)),
                                        wrap_two_pi(s.phi_r(m))));
    }
    return out;
}

CoeffState from_coefficients(std::span<const TrCoefficients> coeffs) {
    CoeffState s;
    const int m_count = static_cast<int>(coeffs.size());
    s.theta.resize(m_count);
    s.phi_t.resize(m_count);
    s.phi_r.resize(m_count);
    for (int m = 0; m < m_count; ++m) {
        const auto& c = coeffs[static_cast<std::size_t>(m)];
        s.theta(m) = std::atan2(std::sqrt(c.beta_t), std::sqrt(c.beta_r));
        s.phi_t(m) = c.phi_t;
        s.phi_r(m) = c.phi_r;
    }
    return s;
}

double penalty_sum(const CoeffState& s) {
    double acc = 0.0;
    for (int m = 0; m < s.size(); ++m) acc += chordal_penalty(s.phi_r(m) - s.phi_t(m));
    return acc;
}

void project_state_coupled(CoeffState& s) {
    const auto coeffs = to_coefficients(s);
    for (int m = 0; m < s.size(); ++m) {
        const auto p = project_coupled(coeffs[static_cast<std::size_t>(m)]);
        s.phi_t(m) = p.phi_t;
        s.phi_r(m) = p.phi_r;
    }
}

// ---------------------------------------------------------------------------
// Sum-SE machinery
// ---------------------------------------------------------------------------

class SeEngine {
  public:
    SeEngine(const ChannelRealization& ch, double noise_power, double budget,
             VectorXd weights)
        : ch_(ch),
          sigma2_(noise_power),
          budget_(budget),
          weights_(std::move(weights)),
          m_(ch.elements()),
          n_(ch.antennas()),
          k_(ch.users()) {}

    [[nodiscard]] int users() const { return k_; }
    [[nodiscard]] double budget() const { return budget_; }

    [[nodiscard]] MatrixXcd effective_rows(const CoeffState& s) const {
        MatrixXcd f(k_, n_);
        VectorXcd weighted(m_);
        for (int k = 0; k < k_; ++k) {
            const Side side = ch_.sides[static_cast<std::size_t>(k)];
            for (int ml = 0; ml < m_; ++ml) {
                const C coeff = side == Side::Transmission
                                    ? std::polar(std::sin(s.theta(ml)), s.phi_t(ml))
                                    : std::polar(std::cos(s.theta(ml)), s.phi_r(ml));
                weighted(ml) = ch_.surface_to_user(ml, k) * coeff;
            }
            f.row(k) = (ch_.bs_to_surface.transpose() * weighted).transpose() +
                       ch_.direct.col(k).transpose();
        }
        return f;
    }

    [[nodiscard]] double sum_se(const MatrixXcd& f, const MatrixXcd& w) const {
        const MatrixXcd z = f * w;
        double se = 0.0;
        for (int k = 0; k < k_; ++k) {
            const double total = sigma2_ + z.row(k).squaredNorm();
            const double interf = total - std::norm(z(k, k));
            se += weights_(k) * std::log2(total / interf);
        }
        return se;
    }

    // One weighted-MMSE block update with the transmit power pinned to the
    // budget by exact bisection on the dual variable.
    [[nodiscard]] MatrixXcd wmmse_round(const MatrixXcd& f, const MatrixXcd& w) const {
        const MatrixXcd z = f * w;
        VectorXd vu2(k_);
        VectorXcd vu(k_);
        for (int k = 0; k < k_; ++k) {
            const double total = sigma2_ + z.row(k).squaredNorm();
            const C u = z(k, k) / total;
            const double mse = 1.0 - std::norm(z(k, k)) / total;
            const double v = weights_(k) / mse;
            vu2(k) = v * std::norm(u);
            vu(k) = v * u;
        }
        const MatrixXcd gram = f.adjoint() * vu2.asDiagonal() * f;
        const MatrixXcd rhs = f.adjoint() * vu.asDiagonal();

        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(gram);
        const VectorXd lam = es.eigenvalues().cwiseMax(0.0);
        const MatrixXcd t = es.eigenvectors().adjoint() * rhs;
        VectorXd coef(n_);
        for (int j = 0; j < n_; ++j) coef(j) = t.row(j).squaredNorm();

        const auto power_at = [&](double mu) {
            double p = 0.0;
            for (int j = 0; j < n_; ++j) {
                const double d = lam(j) + mu;
                if (coef(j) <= 1e-24 * std::max(1.0, coef.maxCoeff())) continue;
                if (d <= 0.0) return std::numeric_limits<double>::infinity();
                p += coef(j) / (d * d);
            }
            return p;
        };

        double mu = 0.0;
        if (power_at(0.0) > budget_) {
            double hi = 1e-12;
            while (power_at(hi) > budget_ && hi < 1e30) hi *= 2.0;
            double lo = 0.0;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (power_at(mid) > budget_ ? lo : hi) = mid;
            }
            mu = hi;
        }

        VectorXd inv(n_);
        for (int j = 0; j < n_; ++j) {
            const double d = lam(j) + mu;
            inv(j) = d > 1e-300 ? 1.0 / d : 0.0;
        }
        return es.eigenvectors() * inv.asDiagonal() * t;
    }

    // Matched-filter start scaled to the full budget.
    [[nodiscard]] MatrixXcd matched_filter(const MatrixXcd& f) const {
        MatrixXcd w = MatrixXcd::Zero(n_, k_);
        if (budget_ <= 0.0) return w;
        for (int k = 0; k < k_; ++k) {
            const double nrm = f.row(k).norm();
            if (nrm > 1e-30) {
                w.col(k) = f.row(k).conjugate().transpose() / nrm *
                           std::sqrt(budget_ / static_cast<double>(k_));
            }
        }
        return w;
    }

    [[nodiscard]] double penalized(const CoeffState& s, const MatrixXcd& w,
                                   double rho) const {
        return sum_se(effective_rows(s), w) - rho * penalty_sum(s);
    }

    // Gradient of sum_se - rho * penalty with respect to (theta, phi_t, phi_r).
    [[nodiscard]] CoeffState gradient(const CoeffState& s, const MatrixXcd& w,
                                      double rho) const {
        const MatrixXcd f = effective_rows(s);
        const MatrixXcd z = f * w;
        const MatrixXcd gw = ch_.bs_to_surface * w;  // M x K

        VectorXcd e_t = VectorXcd::Zero(m_);
        VectorXcd e_r = VectorXcd::Zero(m_);
        VectorXcd zeta(k_);
        for (int k = 0; k < k_; ++k) {
            const double total = sigma2_ + z.row(k).squaredNorm();
            const double interf = total - std::norm(z(k, k));
            const double coef_total = weights_(k) / (std::numbers::ln2 * total);
            const double coef_interf = weights_(k) / (std::numbers::ln2 * interf);
            for (int i = 0; i < k_; ++i) {
                const double wt = coef_total - (i != k ? coef_interf : 0.0);
                zeta(i) = wt * std::conj(z(k, i));
            }
            const VectorXcd gwz = gw * zeta;
            if (ch_.sides[static_cast<std::size_t>(k)] == Side::Transmission) {
                e_t += ch_.surface_to_user.col(k).cwiseProduct(gwz);
            } else {
                e_r += ch_.surface_to_user.col(k).cwiseProduct(gwz);
            }
        }

        CoeffState g;
        g.theta.resize(m_);
        g.phi_t.resize(m_);
        g.phi_r.resize(m_);
        for (int ml = 0; ml < m_; ++ml) {
            const double st = std::sin(s.theta(ml));
            const double ct = std::cos(s.theta(ml));
            const C ph_t = std::polar(1.0, s.phi_t(ml));
            const C ph_r = std::polar(1.0, s.phi_r(ml));
            g.phi_t(ml) = -2.0 * std::imag(st * ph_t * e_t(ml));
            g.phi_r(ml) = -2.0 * std::imag(ct * ph_r * e_r(ml));
            g.theta(ml) = 2.0 * std::real(ct * ph_t * e_t(ml)) -
                          2.0 * std::real(st * ph_r * e_r(ml));
            if (rho > 0.0) {
                const double dpen = chordal_penalty_ddelta(s.phi_r(ml) - s.phi_t(ml));
                g.phi_r(ml) -= rho * dpen;
                g.phi_t(ml) += rho * dpen;
            }
        }
        return g;
    }

  private:
    const ChannelRealization& ch_;
    double sigma2_;
    double budget_;
    VectorXd weights_;
    int m_, n_, k_;
};

// ---------------------------------------------------------------------------
// Two-user single-antenna power machinery
// ---------------------------------------------------------------------------

class PowerEngine {
  public:
    PowerEngine(const ChannelRealization& ch, double noise_power,
                std::span<const double> targets)
        : sigma2_(noise_power), m_(ch.elements()) {
        for (int k = 0; k < ch.users(); ++k) {
            if (ch.sides[static_cast<std::size_t>(k)] == Side::Transmission) {
                user_t_ = k;
            } else {
                user_r_ = k;
            }
        }
        gamma_t_ = targets[static_cast<std::size_t>(user_t_)];
        gamma_r_ = targets[static_cast<std::size_t>(user_r_)];
        cascade_t_ = ch.surface_to_user.col(user_t_).cwiseProduct(ch.bs_to_surface.col(0));
        cascade_r_ = ch.surface_to_user.col(user_r_).cwiseProduct(ch.bs_to_surface.col(0));
        direct_t_ = ch.direct(0, user_t_);
        direct_r_ = ch.direct(0, user_r_);
    }

    [[nodiscard]] int transmit_user() const { return user_t_; }
    [[nodiscard]] int reflect_user() const { return user_r_; }
    [[nodiscard]] const VectorXcd& cascade_t() const { return cascade_t_; }
    [[nodiscard]] const VectorXcd& cascade_r() const { return cascade_r_; }
    [[nodiscard]] C direct_t() const { return direct_t_; }
    [[nodiscard]] C direct_r() const { return direct_r_; }

    [[nodiscard]] std::pair<C, C> fields(const CoeffState& s) const {
        C f_t = direct_t_;
        C f_r = direct_r_;
        for (int ml = 0; ml < m_; ++ml) {
            f_t += std::polar(std::sin(s.theta(ml)), s.phi_t(ml)) * cascade_t_(ml);
            f_r += std::polar(std::cos(s.theta(ml)), s.phi_r(ml)) * cascade_r_(ml);
        }
        return {f_t, f_r};
    }

    [[nodiscard]] double required_power(C f_t, C f_r) const {
        const double p_t = gamma_t_ * sigma2_ / std::max(std::norm(f_t), 1e-300);
        const double p_r = gamma_r_ * sigma2_ / std::max(std::norm(f_r), 1e-300);
        return std::max(p_t, p_r);
    }

    [[nodiscard]] double required_power(const CoeffState& s) const {
        const auto [f_t, f_r] = fields(s);
        return required_power(f_t, f_r);
    }

    // Ascent objective: negative required power minus the phase penalty.
    [[nodiscard]] double penalized(const CoeffState& s, double rho) const {
        return -required_power(s) - rho * penalty_sum(s);
    }

    [[nodiscard]] CoeffState gradient(const CoeffState& s, double rho) const {
        const auto [f_t, f_r] = fields(s);
        const double p_t = gamma_t_ * sigma2_ / std::max(std::norm(f_t), 1e-300);
        const double p_r = gamma_r_ * sigma2_ / std::max(std::norm(f_r), 1e-300);
        // Subgradient of the max: differentiate the active branch.
        const bool t_active = p_t >= p_r;
        const double p = t_active ? p_t : p_r;
        const C f = t_active ? f_t : f_r;
        const VectorXcd& cascade = t_active ? cascade_t_ : cascade_r_;

        CoeffState g;
        g.theta = VectorXd::Zero(m_);
        g.phi_t = VectorXd::Zero(m_);
        g.phi_r = VectorXd::Zero(m_);
        const double scale = 2.0 * p / std::max(std::norm(f), 1e-300);
        for (int ml = 0; ml < m_; ++ml) {
            const double st = std::sin(s.theta(ml));
            const double ct = std::cos(s.theta(ml));
            // d(-p)/dx = p * d|f|^2/dx / |f|^2.
            if (t_active) {
                const C ph = std::polar(1.0, s.phi_t(ml));
                g.phi_t(ml) = scale * std::real(std::conj(f) * C(0, 1) * st * ph * cascade(ml));
                g.theta(ml) = scale * std::real(std::conj(f) * ct * ph * cascade(ml));
            } else {
                const C ph = std::polar(1.0, s.phi_r(ml));
                g.phi_r(ml) = scale * std::real(std::conj(f) * C(0, 1) * ct * ph * cascade(ml));
                g.theta(ml) = scale * std::real(std::conj(f) * (-st) * ph * cascade(ml));
            }
            if (rho > 0.0) {
                const double dpen = chordal_penalty_ddelta(s.phi_r(ml) - s.phi_t(ml));
                g.phi_r(ml) -= rho * dpen;
                g.phi_t(ml) += rho * dpen;
            }
        }
        return g;
    }

  private:
    double sigma2_;
    int m_;
    int user_t_ = -1, user_r_ = -1;
    double gamma_t_ = 1.0, gamma_r_ = 1.0;
    VectorXcd cascade_t_, cascade_r_;
    C direct_t_{}, direct_r_{};
};

// ---------------------------------------------------------------------------
// Projected-gradient ascent with Armijo backtracking
// ---------------------------------------------------------------------------

template <typename ObjectiveFn, typename GradientFn>
bool armijo_step(CoeffState& x, double& value, double& step_hint, ObjectiveFn&& objective,
                 GradientFn&& gradient, bool fix_amplitudes) {
    CoeffState g = gradient(x);
    if (fix_amplitudes) g.theta.setZero();
    const double gnorm2 = g.theta.squaredNorm() + g.phi_t.squaredNorm() + g.phi_r.squaredNorm();
    if (gnorm2 < 1e-30) return false;

    double alpha = step_hint;
    while (alpha > 1e-16) {
        CoeffState cand;
        cand.theta = (x.theta + alpha * g.theta).cwiseMax(0.0).cwiseMin(kThetaMax);
        cand.phi_t = x.phi_t + alpha * g.phi_t;
        cand.phi_r = x.phi_r + alpha * g.phi_r;
        const double ascent = g.theta.dot(cand.theta - x.theta) +
                              g.phi_t.dot(cand.phi_t - x.phi_t) +
                              g.phi_r.dot(cand.phi_r - x.phi_r);
        const double cand_value = objective(cand);
        if (cand_value >= value + kArmijoSlope * ascent && ascent > 0.0) {
            x = std::move(cand);
            value = cand_value;
            step_hint = std::min(alpha * 2.0, 1e6);
            return true;
        }
        alpha *= kArmijoShrink;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Starting points
// ---------------------------------------------------------------------------

struct Start {
    CoeffState state;
    MatrixXcd precoders;  // empty when the solver should derive its own
};

CoeffState random_state(int m_count, PhaseShiftKind kind, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(0.0, 2 * kPi);
    std::bernoulli_distribution bit(0.5);
    CoeffState s;
    s.theta = VectorXd::Constant(m_count, kPi / 4);
    s.phi_t.resize(m_count);
    s.phi_r.resize(m_count);
    for (int ml = 0; ml < m_count; ++ml) {
        s.phi_t(ml) = angle(rng);
        if (kind == PhaseShiftKind::Coupled) {
            s.phi_r(ml) = wrap_two_pi(s.phi_t(ml) +
                                      (bit(rng) ? kCoupledTargetHigh : kCoupledTargetLow));
        } else {
            s.phi_r(ml) = angle(rng);
        }
    }
    return s;
}

// Phase of the strongest cascade toward the first user on `side`, or zero.
VectorXd cophase_profile(const ChannelRealization& ch, Side side) {
    VectorXd phases = VectorXd::Zero(ch.elements());
    for (int k = 0; k < ch.users(); ++k) {
        if (ch.sides[static_cast<std::size_t>(k)] != side) continue;
        for (int ml = 0; ml < ch.elements(); ++ml) {
            const C cascade = ch.surface_to_user(ml, k) * ch.bs_to_surface.row(ml).sum();
            phases(ml) = wrap_two_pi(-std::arg(cascade));
        }
        break;
    }
    return phases;
}

CoeffState cophase_state(const ChannelRealization& ch, PhaseShiftKind kind, double theta) {
    CoeffState s;
    const int m_count = ch.elements();
    s.theta = VectorXd::Constant(m_count, theta);
    s.phi_t = cophase_profile(ch, Side::Transmission);
    const VectorXd want_r = cophase_profile(ch, Side::Reflection);
    s.phi_r.resize(m_count);
    for (int ml = 0; ml < m_count; ++ml) {
        if (kind == PhaseShiftKind::Coupled) {
            // Choose the admissible offset nearer the reflection co-phase.
            const double lo = wrap_two_pi(s.phi_t(ml) + kCoupledTargetLow);
            const double hi = wrap_two_pi(s.phi_t(ml) + kCoupledTargetHigh);
            s.phi_r(ml) = angular_distance(lo, want_r(ml)) <= angular_distance(hi, want_r(ml))
                              ? lo
                              : hi;
        } else {
            s.phi_r(ml) = want_r(ml);
        }
    }
    return s;
}

std::vector<Start> default_starts(const BeamformingProblem& prob, std::uint64_t seed,
                                  bool single_mode_extremes) {
    std::mt19937_64 rng(seed);
    std::vector<Start> starts;
    starts.push_back({random_state(prob.elements(), prob.model.kind, rng), {}});
    starts.push_back({cophase_state(prob.channels, prob.model.kind, kPi / 4), {}});
    if (single_mode_extremes) {
        starts.push_back({cophase_state(prob.channels, prob.model.kind, kThetaMax), {}});
        starts.push_back({cophase_state(prob.channels, prob.model.kind, 0.0), {}});
    }
    return starts;
}

VectorXd resolve_weights(const BeamformingProblem& prob) {
    if (prob.rate_weights.empty()) return VectorXd::Ones(prob.users());
    return Eigen::Map<const VectorXd>(prob.rate_weights.data(),
                                      static_cast<Eigen::Index>(prob.rate_weights.size()));
}

void refit_precoders(const SeEngine& eng, const CoeffState& s, MatrixXcd& w) {
    const MatrixXcd f = eng.effective_rows(s);
    if (w.size() == 0) w = eng.matched_filter(f);
    double se = eng.sum_se(f, w);
    for (int it = 0; it < 200; ++it) {
        const MatrixXcd next = eng.wmmse_round(f, w);
        const double se_next = eng.sum_se(f, next);
        if (se_next >= se) w = next;
        if (std::abs(se_next - se) <= 1e-9 * std::max(1.0, std::abs(se))) break;
        se = std::max(se, se_next);
    }
}

struct Candidate {
    CoeffState state;
    MatrixXcd precoders;
    double objective = -std::numeric_limits<double>::infinity();
    double converged_violation = 0.0;
};

// ---------------------------------------------------------------------------
// Energy-splitting sum-SE cores
// ---------------------------------------------------------------------------

Solution finish_se_solution(const BeamformingProblem& prob, Candidate best,
                            std::vector<TraceEntry> trace, int last_outer, int last_inner) {
    Solution sol;
    sol.coeffs = to_coefficients(best.state);
    sol.precoders = best.precoders;
    sol.objective_value = best.objective;
    sol.converged_violation = best.converged_violation;
    sol.final_violation =
        prob.model.kind == PhaseShiftKind::Coupled ? phase_violation(sol.coeffs) : 0.0;
    trace.push_back({last_outer, last_inner + 1, best.objective, sol.final_violation});
    sol.trace = std::move(trace);
    return sol;
}

// Penalty-framework solve from one start. For independent instances the
// penalty weight stays zero and a single outer pass runs.
Solution penalty_core(const BeamformingProblem& prob, const PenaltyConfig& cfg,
                      const SeEngine& eng, Start start, bool fix_amplitudes) {
    const bool coupled = prob.model.kind == PhaseShiftKind::Coupled;
    CoeffState x = std::move(start.state);
    MatrixXcd w = start.precoders;
    {
        const MatrixXcd f = eng.effective_rows(x);
        if (w.size() == 0) w = eng.matched_filter(f);
    }

    std::vector<TraceEntry> trace;
    Candidate best;
    double rho = coupled ? cfg.rho0 : 0.0;
    const int outer_limit = coupled ? cfg.max_outer : 1;
    double step_hint = 1.0;
    int outer = 1, inner = 0;

    for (outer = 1; outer <= outer_limit; ++outer) {
        double prev = eng.penalized(x, w, rho);
        for (inner = 1; inner <= cfg.max_inner; ++inner) {
            w = eng.wmmse_round(eng.effective_rows(x), w);
            double value = eng.penalized(x, w, rho);
            for (int s = 0; s < kCoeffStepsPerInner; ++s) {
                if (!armijo_step(
                        x, value, step_hint,
                        [&](const CoeffState& c) { return eng.penalized(c, w, rho); },
                        [&](const CoeffState& c) { return eng.gradient(c, w, rho); },
                        fix_amplitudes)) {
                    break;
                }
            }
            const auto coeffs = to_coefficients(x);
            trace.push_back({outer, inner, eng.sum_se(eng.effective_rows(x), w),
                             phase_violation(coeffs)});
            if (std::abs(value - prev) <= cfg.inner_tol * std::max(1.0, std::abs(prev))) {
                prev = value;
                break;
            }
            prev = value;
        }

        const double violation = phase_violation(to_coefficients(x));
        // Projected-and-refitted candidate for this outer iterate.
        CoeffState feas = x;
        if (coupled) project_state_coupled(feas);
        MatrixXcd w_feas = w;
        refit_precoders(eng, feas, w_feas);
        const double se_feas = eng.sum_se(eng.effective_rows(feas), w_feas);
        if (se_feas > best.objective) {
            best = {feas, w_feas, se_feas, violation};
        }

        if (!coupled || violation < cfg.violation_tol) break;
        rho *= cfg.growth;
    }

    return finish_se_solution(prob, std::move(best), std::move(trace),
                              std::min(outer, outer_limit), inner);
}

// Alternating-optimization solve from one start: a full precoder block and a
// full coefficient block per round, with an exact projection after each
// coefficient block on coupled instances.
Solution alternating_core(const BeamformingProblem& prob, const PenaltyConfig& cfg,
                          const SeEngine& eng, Start start, bool fix_amplitudes) {
    const bool coupled = prob.model.kind == PhaseShiftKind::Coupled;
    CoeffState x = std::move(start.state);
    MatrixXcd w = start.precoders;
    {
        const MatrixXcd f = eng.effective_rows(x);
        if (w.size() == 0) w = eng.matched_filter(f);
    }

    std::vector<TraceEntry> trace;
    double step_hint = 1.0;
    double round_obj = eng.sum_se(eng.effective_rows(x), w);
    int round = 1;
    for (round = 1; round <= cfg.max_inner; ++round) {
        // Precoder block at fixed coefficients.
        {
            const MatrixXcd f = eng.effective_rows(x);
            double se = eng.sum_se(f, w);
            for (int it = 0; it < kBlockSubIters; ++it) {
                const MatrixXcd next = eng.wmmse_round(f, w);
                const double se_next = eng.sum_se(f, next);
                const double delta = se_next - se;
                if (se_next >= se) w = next;
                se = std::max(se, se_next);
                if (std::abs(delta) <= cfg.inner_tol * std::max(1.0, std::abs(se))) break;
            }
            trace.push_back({round, 0, se, phase_violation(to_coefficients(x))});
        }
        // Coefficient block at fixed precoders, unconstrained by the coupling.
        {
            double value = eng.penalized(x, w, 0.0);
            for (int it = 0; it < kBlockSubIters; ++it) {
                const double before = value;
                if (!armijo_step(
                        x, value, step_hint,
                        [&](const CoeffState& c) { return eng.penalized(c, w, 0.0); },
                        [&](const CoeffState& c) { return eng.gradient(c, w, 0.0); },
                        fix_amplitudes)) {
                    break;
                }
                if (value - before <= cfg.inner_tol * std::max(1.0, std::abs(before))) break;
            }
            trace.push_back({round, 1, value, phase_violation(to_coefficients(x))});
        }
        if (coupled) {
            project_state_coupled(x);
            trace.push_back({round, 2, eng.sum_se(eng.effective_rows(x), w), 0.0});
        }
        const double obj = eng.sum_se(eng.effective_rows(x), w);
        if (std::abs(obj - round_obj) <= cfg.inner_tol * std::max(1.0, std::abs(round_obj))) {
            round_obj = obj;
            break;
        }
        round_obj = obj;
    }

    refit_precoders(eng, x, w);
    Candidate best{x, w, eng.sum_se(eng.effective_rows(x), w),
                   coupled ? 0.0 : phase_violation(to_coefficients(x))};
    return finish_se_solution(prob, std::move(best), std::move(trace),
                              std::min(round, cfg.max_inner), 2);
}

enum class Algo { Penalty, Alternating };

Solution solve_es_se(const BeamformingProblem& prob, const PenaltyConfig& cfg,
                     std::uint64_t seed, Algo algo, std::span<const Solution> warm_starts,
                     bool fix_amplitudes = false, std::span<const Start> extra_starts = {},
                     bool use_default_starts = true) {
    const SeEngine eng(prob.channels, prob.noise_power, prob.power_budget,
                       resolve_weights(prob));

    if (prob.power_budget <= 0.0) {
        std::mt19937_64 rng(seed);
        Solution sol;
        sol.coeffs = to_coefficients(random_state(prob.elements(), prob.model.kind, rng));
        sol.precoders = MatrixXcd::Zero(prob.antennas(), prob.users());
        sol.objective_value = 0.0;
        sol.trace.push_back({1, 1, 0.0, 0.0});
        return sol;
    }

    std::vector<Start> starts;
    if (use_default_starts || extra_starts.empty()) {
        starts = default_starts(
            prob, seed, prob.protocol.kind == ProtocolKind::EnergySplitting && !fix_amplitudes);
    }
    for (const auto& s : extra_starts) starts.push_back(s);
    for (const auto& ws : warm_starts) {
        if (static_cast<int>(ws.coeffs.size()) != prob.elements()) continue;
        Start st{from_coefficients(ws.coeffs), {}};
        if (ws.precoders.rows() == prob.antennas() && ws.precoders.cols() == prob.users()) {
            st.precoders = ws.precoders;
        }
        starts.push_back(std::move(st));
    }

    Solution best;
    best.objective_value = -std::numeric_limits<double>::infinity();
    for (auto& start : starts) {
        Solution sol = algo == Algo::Penalty
                           ? penalty_core(prob, cfg, eng, std::move(start), fix_amplitudes)
                           : alternating_core(prob, cfg, eng, std::move(start), fix_amplitudes);
        if (sol.objective_value > best.objective_value) best = std::move(sol);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Mode-switching and time-switching wrappers
// ---------------------------------------------------------------------------

TrCoefficients round_to_single_mode(const TrCoefficients& c) {
    TrCoefficients out = c;
    if (c.beta_t > c.beta_r) {
        out.beta_t = 1.0;
        out.beta_r = 0.0;
    } else {
        out.beta_t = 0.0;
        out.beta_r = 1.0;
    }
    return out;
}

Solution solve_ms_se(const BeamformingProblem& prob, const PenaltyConfig& cfg,
                     std::uint64_t seed, Algo algo, std::span<const Solution> warm_starts) {
    BeamformingProblem relaxed = prob;
    relaxed.protocol.kind = ProtocolKind::EnergySplitting;
    // The binary working mode makes the coupled constraint a dummy: one mode
    // of every element is dark, so solve the relaxed problem independently.
    relaxed.model.kind = PhaseShiftKind::Independent;
    Solution es = solve_es_se(relaxed, cfg, seed, algo, warm_starts);

    std::vector<TrCoefficients> rounded;
    rounded.reserve(es.coeffs.size());
    for (const auto& c : es.coeffs) rounded.push_back(round_to_single_mode(c));

    // Re-optimize phases with the binary amplitudes pinned.
    const Start start{from_coefficients(rounded), es.precoders};
    Solution sol = solve_es_se(relaxed, cfg, seed, algo, {}, /*fix_amplitudes=*/true,
                               std::span<const Start>(&start, 1),
                               /*use_default_starts=*/false);
    for (auto& c : sol.coeffs) c = round_to_single_mode(c);

    if (prob.model.kind == PhaseShiftKind::Coupled) {
        // Pin the dark mode's phase onto an admissible difference.
        for (auto& c : sol.coeffs) {
            if (c.beta_t >= c.beta_r) {
                c.phi_r = wrap_two_pi(c.phi_t + kCoupledTargetLow);
            } else {
                c.phi_t = wrap_two_pi(c.phi_r - kCoupledTargetLow);
            }
        }
    }
    sol.final_violation = phase_violation(sol.coeffs);
    sol.converged_violation = sol.final_violation;
    return sol;
}

ChannelRealization filter_users(const ChannelRealization& ch, Side side,
                                std::vector<int>& index_map) {
    ChannelRealization out;
    out.bs_to_surface = ch.bs_to_surface;
    index_map.clear();
    for (int k = 0; k < ch.users(); ++k) {
        if (ch.sides[static_cast<std::size_t>(k)] == side) index_map.push_back(k);
    }
    out.surface_to_user.resize(ch.elements(), static_cast<Eigen::Index>(index_map.size()));
    out.direct.resize(ch.antennas(), static_cast<Eigen::Index>(index_map.size()));
    for (std::size_t j = 0; j < index_map.size(); ++j) {
        out.surface_to_user.col(static_cast<Eigen::Index>(j)) =
            ch.surface_to_user.col(index_map[j]);
        out.direct.col(static_cast<Eigen::Index>(j)) = ch.direct.col(index_map[j]);
        out.sides.push_back(side);
    }
    return out;
}

Solution solve_ts_se(const BeamformingProblem& prob, const PenaltyConfig& cfg,
                     std::uint64_t seed, Algo algo) {
    // One single-mode sub-problem per side; the coupled constraint vanishes.
    struct Slot {
        Solution sol;
        double se = 0.0;
        std::vector<int> index_map;
        Side side = Side::Transmission;
    };
    std::array<Slot, 2> slots;
    slots[0].side = Side::Transmission;
    slots[1].side = Side::Reflection;
    for (auto& slot : slots) {
        BeamformingProblem sub = prob;
        sub.protocol.kind = ProtocolKind::EnergySplitting;
        sub.model.kind = PhaseShiftKind::Independent;
        sub.channels = filter_users(prob.channels, slot.side, slot.index_map);
        sub.rate_weights.clear();
        if (!prob.rate_weights.empty()) {
            for (int idx : slot.index_map) {
                sub.rate_weights.push_back(prob.rate_weights[static_cast<std::size_t>(idx)]);
            }
        }
        if (slot.index_map.empty()) {
            slot.se = 0.0;
            continue;
        }
        const double theta = slot.side == Side::Transmission ? kThetaMax : 0.0;
        std::mt19937_64 slot_rng(seed ^ (slot.side == Side::Transmission ? 0x9e3779b9ull
                                                                         : 0x7f4a7c15ull));
        std::array<Start, 2> slot_starts = {
            Start{cophase_state(sub.channels, PhaseShiftKind::Independent, theta), {}},
            Start{random_state(sub.channels.elements(), PhaseShiftKind::Independent, slot_rng),
                  {}}};
        slot_starts[1].state.theta.setConstant(theta);
        slot.sol = solve_es_se(sub, cfg, seed, algo, {}, /*fix_amplitudes=*/true,
                               slot_starts, /*use_default_starts=*/false);
        slot.se = slot.sol.objective_value;
    }

    TimeFractions fractions{0.5, 0.5};
    if (prob.protocol.ts_fractions) {
        fractions = *prob.protocol.ts_fractions;
    } else {
        // SE is affine in the slot share; a golden-section scan over the
        // share keeps the interface uniform with non-affine slot objectives,
        // and the exact endpoints are checked afterwards.
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double lo = 0.0, hi = 1.0;
        const auto value = [&](double t) {
            return t * slots[0].se + (1.0 - t) * slots[1].se;
        };
        double a = hi - inv_phi * (hi - lo), b = lo + inv_phi * (hi - lo);
        for (int it = 0; it < 80; ++it) {
            if (value(a) < value(b)) {
                lo = a;
                a = b;
                b = lo + inv_phi * (hi - lo);
            } else {
                hi = b;
                b = a;
                a = hi - inv_phi * (hi - lo);
            }
        }
        double t_best = 0.5 * (lo + hi);
        for (const double cand : {0.0, 1.0}) {
            if (value(cand) >= value(t_best)) t_best = cand;
        }
        fractions = {t_best, 1.0 - t_best};
    }

    Solution sol;
    const int m_count = prob.elements();
    sol.coeffs.assign(static_cast<std::size_t>(m_count),
                      make_coefficients(1.0, 0.0, 0.0, kCoupledTargetLow));
    sol.coeffs_reflect_slot.assign(static_cast<std::size_t>(m_count),
                                   make_coefficients(0.0, 1.0, 0.0, kCoupledTargetLow));
    sol.precoders = MatrixXcd::Zero(prob.antennas(), prob.users());
    sol.precoders_reflect_slot = MatrixXcd::Zero(prob.antennas(), prob.users());
    for (std::size_t j = 0; j < slots[0].index_map.size(); ++j) {
        sol.precoders.col(slots[0].index_map[j]) =
            slots[0].sol.precoders.col(static_cast<Eigen::Index>(j));
    }
    for (std::size_t j = 0; j < slots[1].index_map.size(); ++j) {
        sol.precoders_reflect_slot.col(slots[1].index_map[j]) =
            slots[1].sol.precoders.col(static_cast<Eigen::Index>(j));
    }
    if (!slots[0].sol.coeffs.empty()) {
        for (int ml = 0; ml < m_count; ++ml) {
            sol.coeffs[static_cast<std::size_t>(ml)].phi_t =
                slots[0].sol.coeffs[static_cast<std::size_t>(ml)].phi_t;
            sol.coeffs[static_cast<std::size_t>(ml)].phi_r = wrap_two_pi(
                slots[0].sol.coeffs[static_cast<std::size_t>(ml)].phi_t + kCoupledTargetLow);
        }
    }
    if (!slots[1].sol.coeffs.empty()) {
        for (int ml = 0; ml < m_count; ++ml) {
            sol.coeffs_reflect_slot[static_cast<std::size_t>(ml)].phi_r =
                slots[1].sol.coeffs[static_cast<std::size_t>(ml)].phi_r;
            sol.coeffs_reflect_slot[static_cast<std::size_t>(ml)].phi_t = wrap_two_pi(
                slots[1].sol.coeffs[static_cast<std::size_t>(ml)].phi_r - kCoupledTargetLow);
        }
    }
    sol.ts_fractions = fractions;
    sol.objective_value = fractions.transmit * slots[0].se + fractions.reflect * slots[1].se;
    sol.trace.push_back({1, 1, sol.objective_value, 0.0});
    return sol;
}

// ---------------------------------------------------------------------------
// Two-user single-antenna power minimization (penalty / AO)
// ---------------------------------------------------------------------------

void check_power_scenario(const BeamformingProblem& prob) {
    if (prob.antennas() != 1) {
        throw ScenarioMismatch("power minimization here requires a single-antenna BS");
    }
    if (prob.users() != 2 || prob.channels.sides[0] == prob.channels.sides[1]) {
        throw ScenarioMismatch("power minimization requires two users on opposite sides");
    }
    if (prob.protocol.kind != ProtocolKind::EnergySplitting) {
        throw ScenarioMismatch("power minimization supports the energy-splitting protocol");
    }
}

Solution finish_power_solution(const PowerEngine& eng, const BeamformingProblem& prob,
                               const PenaltyConfig& cfg, CoeffState x,
                               std::vector<TraceEntry> trace, int outer, int inner) {
    if (prob.model.kind == PhaseShiftKind::Coupled) project_state_coupled(x);
    const double power = eng.required_power(x);
    if (!(power <= cfg.power_cap)) {
        throw InfeasibleTargets("required transmit power exceeds the configured cap");
    }
    Solution sol;
    sol.coeffs = to_coefficients(x);
    sol.precoders = MatrixXcd::Constant(1, 2, C(std::sqrt(power), 0.0));
    sol.objective_value = power;
    sol.final_violation = phase_violation(sol.coeffs);
    sol.converged_violation = sol.final_violation;
    trace.push_back({outer, inner + 1, power, sol.final_violation});
    sol.trace = std::move(trace);
    return sol;
}

Solution solve_power(const BeamformingProblem& prob, const PenaltyConfig& cfg,
                     std::uint64_t seed, Algo algo, std::span<const Solution> warm_starts) {
    check_power_scenario(prob);
    const PowerEngine eng(prob.channels, prob.noise_power, prob.sinr_targets);
    const bool coupled = prob.model.kind == PhaseShiftKind::Coupled;

    std::vector<Start> starts = default_starts(prob, seed, false);
    for (const auto& ws : warm_starts) {
        if (static_cast<int>(ws.coeffs.size()) == prob.elements()) {
            starts.push_back({from_coefficients(ws.coeffs), {}});
        }
    }

    Solution best;
    best.objective_value = std::numeric_limits<double>::infinity();
    for (auto& start : starts) {
        CoeffState x = std::move(start.state);
        std::vector<TraceEntry> trace;
        double rho = coupled && algo == Algo::Penalty ? cfg.rho0 : 0.0;
        double step_hint = 1.0;
        const int outer_limit = coupled && algo == Algo::Penalty ? cfg.max_outer : 1;
        int outer = 1, inner = 0;
        for (outer = 1; outer <= outer_limit; ++outer) {
            double value = eng.penalized(x, rho);
            for (inner = 1; inner <= cfg.max_inner; ++inner) {
                const double before = value;
                bool moved = false;
                for (int s = 0; s < kCoeffStepsPerInner; ++s) {
                    moved =
                        armijo_step(
                            x, value, step_hint,
                            [&](const CoeffState& c) { return eng.penalized(c, rho); },
                            [&](const CoeffState& c) { return eng.gradient(c, rho); },
                            false) ||
                        moved;
                }
                if (algo == Algo::Alternating && coupled) {
                    project_state_coupled(x);
                    value = eng.penalized(x, rho);
                }
                trace.push_back({outer, inner, eng.required_power(x),
                                 phase_violation(to_coefficients(x))});
                if (!moved ||
                    std::abs(value - before) <= cfg.inner_tol * std::max(1.0, std::abs(before))) {
                    break;
                }
            }
            if (!coupled || algo != Algo::Penalty) break;
            if (phase_violation(to_coefficients(x)) < cfg.violation_tol) break;
            rho *= cfg.growth;
        }
        Solution sol = finish_power_solution(eng, prob, cfg, std::move(x), std::move(trace),
                                             std::min(outer, outer_limit), inner);
        if (sol.objective_value < best.objective_value) best = std::move(sol);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Duality-based multi-user power minimization (precoder block)
// ---------------------------------------------------------------------------

MatrixXcd duality_power_min(const MatrixXcd& f, std::span<const double> targets,
                            double sigma2, double cap) {
    const int k_count = static_cast<int>(f.rows());
    const int n_count = static_cast<int>(f.cols());
    const MatrixXcd h = f.conjugate().transpose();  // N x K, columns conj(f_k)

    VectorXd q = VectorXd::Constant(k_count, sigma2);
    for (int it = 0; it < 500; ++it) {
        double delta = 0.0;
        for (int k = 0; k < k_count; ++k) {
            MatrixXcd cov = sigma2 * MatrixXcd::Identity(n_count, n_count);
            for (int i = 0; i < k_count; ++i) {
                if (i != k) cov += q(i) * h.col(i) * h.col(i).adjoint();
            }
            const VectorXcd sol = cov.ldlt().solve(h.col(k));
            const double gain = std::real(h.col(k).dot(sol));
            if (gain <= 0.0) throw InfeasibleTargets("duality fixed point degenerated");
            const double next = targets[static_cast<std::size_t>(k)] / gain;
            delta = std::max(delta, std::abs(next - q(k)) / std::max(1e-300, next));
            q(k) = next;
        }
        if (q.sum() > cap) {
            throw InfeasibleTargets("uplink powers exceeded the cap; targets infeasible");
        }
        if (delta < 1e-12) break;
    }

    MatrixXcd dirs(n_count, k_count);
    for (int k = 0; k < k_count; ++k) {
        MatrixXcd cov = sigma2 * MatrixXcd::Identity(n_count, n_count);
        for (int i = 0; i < k_count; ++i) {
            if (i != k) cov += q(i) * h.col(i) * h.col(i).adjoint();
        }
        const VectorXcd d = cov.ldlt().solve(h.col(k));
        dirs.col(k) = d / d.norm();
    }

    // Downlink powers from the target equations.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k_count, k_count);
    for (int k = 0; k < k_count; ++k) {
        for (int i = 0; i < k_count; ++i) {
            const double gain = std::norm((f.row(k) * dirs.col(i))(0, 0));
            a(k, i) = i == k ? gain / targets[static_cast<std::size_t>(k)] : -gain;
        }
    }
    const Eigen::VectorXd p = a.partialPivLu().solve(Eigen::VectorXd::Constant(k_count, sigma2));
    if (!p.allFinite() || (p.array() < 0.0).any() || p.sum() > cap) {
        throw InfeasibleTargets("downlink power solution infeasible");
    }
    MatrixXcd w(n_count, k_count);
    for (int k = 0; k < k_count; ++k) w.col(k) = std::sqrt(p(k)) * dirs.col(k);
    return w;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public surface
// ---------------------------------------------------------------------------

void BeamformingProblem::validate() const {
    if (noise_power <= 0.0) throw ValidationError("noise_power must be positive");
    if (channels.surface_to_user.rows() != channels.bs_to_surface.rows()) {
        throw ValidationError("channel matrices disagree on the element count");
    }
    if (static_cast<int>(channels.sides.size()) != users()) {
        throw ValidationError("user side list does not match the channel column count");
    }
    if (objective == Objective::SumSpectralEfficiency) {
        if (!sinr_targets.empty()) {
            throw ValidationError("sum-SE objective takes a power budget, not SINR targets");
        }
        if (power_budget < 0.0) throw ValidationError("power_budget must be nonnegative");
    } else {
        if (static_cast<int>(sinr_targets.size()) != users()) {
            throw ValidationError("power objective needs one SINR target per user");
        }
        for (double t : sinr_targets) {
            if (t <= 0.0) throw ValidationError("SINR targets must be positive");
        }
    }
    if (!rate_weights.empty() && static_cast<int>(rate_weights.size()) != users()) {
        throw ValidationError("rate weight count does not match the user count");
    }
    if (protocol.kind == ProtocolKind::TimeSwitching && protocol.ts_fractions) {
        const auto& ts = *protocol.ts_fractions;
        if (ts.transmit < 0.0 || ts.reflect < 0.0 || ts.transmit + ts.reflect > 1.0 + 1e-12) {
            throw ValidationError("time-switching fractions must be nonnegative, sum <= 1");
        }
    }
}

double phase_violation(std::span<const TrCoefficients> coeffs) {
    double worst = 0.0;
    for (const auto& c : coeffs) worst = std::max(worst, coupled_phase_distance(c));
    return worst;
}

double evaluate_objective(const BeamformingProblem& prob, const Solution& sol) {
    if (static_cast<int>(sol.coeffs.size()) != prob.elements()) {
        throw LengthMismatch("evaluate_objective: coefficient count != element count");
    }
    if (prob.objective == Objective::TransmitPower) {
        double total = 0.0, worst = 0.0;
        for (int k = 0; k < sol.precoders.cols(); ++k) {
            const double p = sol.precoders.col(k).squaredNorm();
            total += p;
            worst = std::max(worst, p);
        }
        // One antenna serves the users one at a time, so the requirement is
        // the worst per-user power; antenna arrays transmit simultaneously.
        return prob.antennas() == 1 ? worst : total;
    }

    if (sol.precoders.rows() != prob.antennas()) {
        throw LengthMismatch("evaluate_objective: precoder rows != antenna count");
    }
    const SeEngine eng(prob.channels, prob.noise_power, prob.power_budget,
                       resolve_weights(prob));
    if (sol.ts_fractions && !sol.coeffs_reflect_slot.empty()) {
        const double se_t =
            eng.sum_se(eng.effective_rows(from_coefficients(sol.coeffs)), sol.precoders);
        const double se_r = eng.sum_se(
            eng.effective_rows(from_coefficients(sol.coeffs_reflect_slot)),
            sol.precoders_reflect_slot);
        return sol.ts_fractions->transmit * se_t + sol.ts_fractions->reflect * se_r;
    }
    return eng.sum_se(eng.effective_rows(from_coefficients(sol.coeffs)), sol.precoders);
}

Eigen::MatrixXcd precoder_update(const BeamformingProblem& prob,
                                 std::span<const TrCoefficients> coeffs,
                                 const Eigen::MatrixXcd& current, const PenaltyConfig& cfg) {
    if (static_cast<int>(coeffs.size()) != prob.elements()) {
        throw LengthMismatch("precoder_update: coefficient count != element count");
    }
    const SeEngine eng(prob.channels, prob.noise_power, prob.power_budget,
                       resolve_weights(prob));
    const MatrixXcd f = eng.effective_rows(from_coefficients(coeffs));

    if (prob.objective == Objective::SumSpectralEfficiency) {
        const MatrixXcd w0 = current.size() != 0 ? current : eng.matched_filter(f);
        return eng.wmmse_round(f, w0);
    }

    const int k_count = prob.users();
    if (k_count == 1) {
        // Exact-target maximum-ratio transmission.
        const double nrm2 = f.row(0).squaredNorm();
        if (nrm2 < 1e-300) throw InfeasibleTargets("single-user channel is zero");
        const double p = prob.sinr_targets[0] * prob.noise_power / nrm2;
        if (p > cfg.power_cap) throw InfeasibleTargets("single-user target beyond power cap");
        return std::sqrt(p) * f.row(0).conjugate().transpose() / f.row(0).norm();
    }
    if (prob.antennas() == 1) {
        MatrixXcd w(1, k_count);
        for (int k = 0; k < k_count; ++k) {
            const double nrm2 = std::norm(f(k, 0));
            if (nrm2 < 1e-300) throw InfeasibleTargets("a user channel is zero");
            const double p = prob.sinr_targets[static_cast<std::size_t>(k)] *
                             prob.noise_power / nrm2;
            if (p > cfg.power_cap) throw InfeasibleTargets("target beyond power cap");
            w(0, k) = std::sqrt(p) * std::conj(f(k, 0)) / std::abs(f(k, 0));
        }
        return w;
    }
    return duality_power_min(f, prob.sinr_targets, prob.noise_power, cfg.power_cap);
}

Solution penalty_optimize(const BeamformingProblem& prob, const PenaltyConfig& cfg,
                          std::uint64_t seed, std::span<const Solution> warm_starts) {
    prob.validate();
    if (prob.objective == Objective::TransmitPower) {
        return solve_power(prob, cfg, seed, Algo::Penalty, warm_starts);
    }
    switch (prob.protocol.kind) {
        case ProtocolKind::ModeSwitching:
            return solve_ms_se(prob, cfg, seed, Algo::Penalty, warm_starts);
        case ProtocolKind::TimeSwitching:
            return solve_ts_se(prob, cfg, seed, Algo::Penalty);
        case ProtocolKind::EnergySplitting:
        default:
            return solve_es_se(prob, cfg, seed, Algo::Penalty, warm_starts);
    }
}

Solution alternating_optimize(const BeamformingProblem& prob, const PenaltyConfig& cfg,
                              std::uint64_t seed, std::span<const Solution> warm_starts) {
    prob.validate();
    if (prob.objective == Objective::TransmitPower) {
        return solve_power(prob, cfg, seed, Algo::Alternating, warm_starts);
    }
    switch (prob.protocol.kind) {
        case ProtocolKind::ModeSwitching:
            return solve_ms_se(prob, cfg, seed, Algo::Alternating, warm_starts);
        case ProtocolKind::TimeSwitching:
            return solve_ts_se(prob, cfg, seed, Algo::Alternating);
        case ProtocolKind::EnergySplitting:
        default:
            return solve_es_se(prob, cfg, seed, Algo::Alternating, warm_starts);
    }
}

Solution element_wise_optimize(const BeamformingProblem& prob, const PenaltyConfig& cfg,
                               std::uint64_t seed) {
    prob.validate();
    if (prob.objective != Objective::TransmitPower) {
        throw ScenarioMismatch("element-wise solver minimizes transmit power only");
    }
    if (prob.model.kind != PhaseShiftKind::Coupled) {
        throw ScenarioMismatch("element-wise solver targets the coupled phase-shift model");
    }
    check_power_scenario(prob);
    const PowerEngine eng(prob.channels, prob.noise_power, prob.sinr_targets);
    const int m_count = prob.elements();

    std::mt19937_64 rng(seed);
    CoeffState x = random_state(m_count, PhaseShiftKind::Coupled, rng);

    const auto golden_min = [](auto&& fn, double lo, double hi) {
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = hi - inv_phi * (hi - lo), b = lo + inv_phi * (hi - lo);
        double fa = fn(a), fb = fn(b);
        for (int it = 0; it < 60; ++it) {
            if (fa <= fb) {
                hi = b;
                b = a;
                fb = fa;
                a = hi - inv_phi * (hi - lo);
                fa = fn(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + inv_phi * (hi - lo);
                fb = fn(b);
            }
        }
        return 0.5 * (lo + hi);
    };

    std::vector<TraceEntry> trace;
    auto [f_t, f_r] = eng.fields(x);
    double power = eng.required_power(f_t, f_r);
    int sweep = 1;
    for (sweep = 1; sweep <= cfg.max_inner; ++sweep) {
        const double sweep_start = power;
        // Refresh the running sums once per sweep to cap drift.
        std::tie(f_t, f_r) = eng.fields(x);
        power = eng.required_power(f_t, f_r);

        for (int ml = 0; ml < m_count; ++ml) {
            const C base_t = f_t - std::polar(std::sin(x.theta(ml)), x.phi_t(ml)) *
                                       eng.cascade_t()(ml);
            const C base_r = f_r - std::polar(std::cos(x.theta(ml)), x.phi_r(ml)) *
                                       eng.cascade_r()(ml);
            const auto probe = [&](double theta, double phi, int bit) {
                const double phi_r =
                    phi + (bit == 0 ? kCoupledTargetLow : kCoupledTargetHigh);
                const C cand_t = base_t + std::polar(std::sin(theta), phi) * eng.cascade_t()(ml);
                const C cand_r = base_r + std::polar(std::cos(theta), phi_r) * eng.cascade_r()(ml);
                return eng.required_power(cand_t, cand_r);
            };

            double best_power = power;
            double best_theta = x.theta(ml);
            double best_phi = x.phi_t(ml);
            int best_bit = angular_distance(x.phi_r(ml) - x.phi_t(ml), kCoupledTargetLow) <=
                                   angular_distance(x.phi_r(ml) - x.phi_t(ml),
                                                    kCoupledTargetHigh)
                               ? 0
                               : 1;
            const double phi_step = 2 * kPi / kPhaseGridPoints;
            const double theta_step = kThetaMax / (kAmplitudeGridPoints - 1);
            for (int bit = 0; bit < 2; ++bit) {
                for (int pi_idx = 0; pi_idx < kPhaseGridPoints; ++pi_idx) {
                    const double phi = pi_idx * phi_step;
                    for (int ti = 0; ti < kAmplitudeGridPoints; ++ti) {
                        const double theta = ti * theta_step;
                        const double cand = probe(theta, phi, bit);
                        if (cand < best_power) {
                            best_power = cand;
                            best_theta = theta;
                            best_phi = phi;
                            best_bit = bit;
                        }
                    }
                }
            }
            // Local refinement around the best grid point.
            for (int pass = 0; pass < 2; ++pass) {
                best_phi = golden_min(
                    [&](double phi) { return probe(best_theta, phi, best_bit); },
                    best_phi - phi_step, best_phi + phi_step);
                best_theta = golden_min(
                    [&](double theta) {
                        return probe(std::clamp(theta, 0.0, kThetaMax), best_phi, best_bit);
                    },
                    std::max(0.0, best_theta - theta_step),
                    std::min(kThetaMax, best_theta + theta_step));
                best_power = probe(best_theta, best_phi, best_bit);
            }

            if (best_power < power) {
                x.theta(ml) = best_theta;
                x.phi_t(ml) = wrap_two_pi(best_phi);
                x.phi_r(ml) = wrap_two_pi(
                    best_phi + (best_bit == 0 ? kCoupledTargetLow : kCoupledTargetHigh));
                f_t = base_t + std::polar(std::sin(best_theta), x.phi_t(ml)) *
                                   eng.cascade_t()(ml);
                f_r = base_r + std::polar(std::cos(best_theta), x.phi_r(ml)) *
                                   eng.cascade_r()(ml);
                power = best_power;
            }
            trace.push_back({sweep, ml, power, 0.0});
        }
        if (sweep_start - power <= cfg.inner_tol * std::max(1.0, power)) break;
    }

    return finish_power_solution(eng, prob, cfg, std::move(x), std::move(trace),
                                 std::min(sweep, cfg.max_inner), m_count);
}

}  // namespace starsim
