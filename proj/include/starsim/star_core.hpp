// SPDX-License-Identifier: Apache-2.0
//
// starsim: link-level simulation and beamforming for simultaneously
// transmitting and reflecting reconfigurable surfaces.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "starsim/errors.hpp"

namespace starsim {

/// Impedance of free space in ohms.
inline constexpr double kFreeSpaceImpedance = 376.730;

/// Amplitudes below this floor carry no meaningful phase; phase-constraint
/// checks skip such elements.
inline constexpr double kAmplitudeFloor = 1e-12;

/// Default tolerance for structural equalities (unitarity, energy sums).
inline constexpr double kStructuralTol = 1e-9;

/// Default tolerance for phase-constraint satisfaction, radians.
inline constexpr double kPhaseTol = 1e-6;

// ---------------------------------------------------------------------------
// Angle helpers. Phases are stored canonically in [0, 2*pi); comparisons act
// on the unit circle so wrap-around cannot bite.
// ---------------------------------------------------------------------------

template <typename Scalar>
[[nodiscard]] Scalar wrap_two_pi(Scalar phase) {
    constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
    Scalar w = std::fmod(phase, two_pi);
    if (w < Scalar(0)) w += two_pi;
    if (w >= two_pi) w = Scalar(0);
    return w;
}

/// Absolute distance between two angles on the unit circle, in [0, pi].
template <typename Scalar>
[[nodiscard]] Scalar angular_distance(Scalar a, Scalar b) {
    constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
    return std::abs(std::remainder(a - b, two_pi));
}

// ---------------------------------------------------------------------------
// Hardware model
// ---------------------------------------------------------------------------

/// Lumped electric admittance and magnetic impedance of one element.
template <typename Scalar = double>
struct ImpedancePairT {
    std::complex<Scalar> y{};                   ///< electric admittance, siemens
    std::complex<Scalar> z{};                   ///< magnetic impedance, ohms
    Scalar eta0 = Scalar(kFreeSpaceImpedance);  ///< free-space impedance, ohms
};

using ImpedancePair = ImpedancePairT<double>;

/// True when both impedances are purely imaginary, i.e. the element is
/// realizable with passive lossless materials.
template <typename Scalar>
[[nodiscard]] bool passive_lossless_realizable(const ImpedancePairT<Scalar>& p,
                                               Scalar tol = Scalar(1e-12)) {
    return std::abs(p.y.real()) <= tol && std::abs(p.z.real()) <= tol;
}

/// Complex transmission and reflection coefficients (t, r) of an element
/// driven by its load impedances.
///
/// Throws SingularImpedance when either denominator has magnitude < 1e-12.
template <typename Scalar>
[[nodiscard]] std::pair<std::complex<Scalar>, std::complex<Scalar>>
coeffs_from_impedance(const ImpedancePairT<Scalar>& p) {
    using C = std::complex<Scalar>;
    const C den_y = Scalar(2) + p.eta0 * p.y;
    const C den_z = Scalar(2) * p.eta0 + p.z;
    if (std::abs(den_y) < Scalar(1e-12) || std::abs(den_z) < Scalar(1e-12)) {
        throw SingularImpedance("coeffs_from_impedance: singular denominator");
    }
    const C r = -(Scalar(2) * (p.eta0 * p.eta0 * p.y - p.z)) / (den_y * den_z);
    const C t = (Scalar(2) - p.eta0 * p.y) / den_y - r;
    return {t, r};
}

// ---------------------------------------------------------------------------
// T&R coefficients
// ---------------------------------------------------------------------------

/// Per-element transmission/reflection response: power fractions beta and
/// phase shifts phi, so the applied coefficients are sqrt(beta)*exp(j*phi).
template <typename Scalar = double>
struct TrCoefficientsT {
    Scalar beta_t{0};  ///< transmitted power fraction, >= 0
    Scalar beta_r{0};  ///< reflected power fraction, >= 0
    Scalar phi_t{0};   ///< transmission phase, [0, 2*pi)
    Scalar phi_r{0};   ///< reflection phase, [0, 2*pi)

    [[nodiscard]] std::complex<Scalar> transmit_coefficient() const {
        return std::polar(std::sqrt(beta_t), phi_t);
    }
    [[nodiscard]] std::complex<Scalar> reflect_coefficient() const {
        return std::polar(std::sqrt(beta_r), phi_r);
    }
};

using TrCoefficients = TrCoefficientsT<double>;

/// Builds coefficients with phases canonicalized to [0, 2*pi).
/// Throws ValidationError on negative power fractions.
template <typename Scalar>
[[nodiscard]] TrCoefficientsT<Scalar> make_coefficients(Scalar beta_t, Scalar beta_r,
                                                        Scalar phi_t, Scalar phi_r) {
    if (beta_t < Scalar(0) || beta_r < Scalar(0)) {
        throw ValidationError("TrCoefficients: power fractions must be nonnegative");
    }
    return {beta_t, beta_r, wrap_two_pi(phi_t), wrap_two_pi(phi_r)};
}

template <typename Scalar>
[[nodiscard]] bool is_passive(const TrCoefficientsT<Scalar>& c,
                              Scalar tol = Scalar(kStructuralTol)) {
    return c.beta_t <= Scalar(1) + tol && c.beta_r <= Scalar(1) + tol &&
           c.beta_t + c.beta_r <= Scalar(1) + tol;
}

template <typename Scalar>
[[nodiscard]] bool is_passive_lossless(const TrCoefficientsT<Scalar>& c,
                                       Scalar tol = Scalar(kStructuralTol)) {
    return is_passive(c, tol) && std::abs(c.beta_t + c.beta_r - Scalar(1)) <= tol;
}

/// Splits an incident signal into its transmitted and reflected parts.
template <typename Scalar>
[[nodiscard]] std::pair<std::complex<Scalar>, std::complex<Scalar>>
split_signal(const TrCoefficientsT<Scalar>& c, std::complex<Scalar> s) {
    return {c.transmit_coefficient() * s, c.reflect_coefficient() * s};
}

/// Decomposes raw complex (t, r) coefficients into amplitude/phase form,
/// beta = |.|^2 and phi = arg(.) canonicalized to [0, 2*pi).
template <typename Scalar>
[[nodiscard]] TrCoefficientsT<Scalar> decompose_coefficients(std::complex<Scalar> t,
                                                             std::complex<Scalar> r) {
    return {std::norm(t), std::norm(r), wrap_two_pi(std::arg(t)), wrap_two_pi(std::arg(r))};
}

// ---------------------------------------------------------------------------
// Dual-sided T&R matrix
// ---------------------------------------------------------------------------

/// 2x2 map from the signals incident on faces (A, B) to the outgoing signals
/// on those faces. Layout: (R_A, T_AB; T_BA, R_B).
template <typename Scalar = double>
using TrMatrixT = Eigen::Matrix<std::complex<Scalar>, 2, 2>;

using TrMatrix = TrMatrixT<double>;

template <typename Scalar>
[[nodiscard]] TrMatrixT<Scalar> make_tr_matrix(std::complex<Scalar> r_a,
                                               std::complex<Scalar> t_ab,
                                               std::complex<Scalar> t_ba,
                                               std::complex<Scalar> r_b) {
    TrMatrixT<Scalar> xi;
    xi << r_a, t_ab, t_ba, r_b;
    return xi;
}

/// Output signals (y_a, y_b) for incident signals (s_a, s_b).
template <typename Scalar>
[[nodiscard]] std::pair<std::complex<Scalar>, std::complex<Scalar>>
apply_dual_sided(const TrMatrixT<Scalar>& xi, std::complex<Scalar> s_a,
                 std::complex<Scalar> s_b) {
    Eigen::Vector2<std::complex<Scalar>> s;
    s << s_a, s_b;
    const Eigen::Vector2<std::complex<Scalar>> y = xi * s;
    return {y(0), y(1)};
}

enum class ElementClass {
    PassiveLossless,  ///< xi^H xi == I
    PassiveLossy,     ///< xi^H xi strictly below I
    Active,           ///< xi^H xi strictly above I
    Indefinite,       ///< gain on one input direction, loss on the other
};

/// Energy classification of a dual-sided element via the spectrum of the
/// Gram matrix xi^H xi. Invariant under unit-modulus scaling of xi.
template <typename Scalar>
[[nodiscard]] ElementClass classify(const TrMatrixT<Scalar>& xi,
                                    Scalar tol = Scalar(kStructuralTol)) {
    using Gram = Eigen::Matrix<std::complex<Scalar>, 2, 2>;
    const Gram gram = xi.adjoint() * xi;
    Eigen::SelfAdjointEigenSolver<Gram> es(gram, Eigen::EigenvaluesOnly);
    const Scalar lo = es.eigenvalues()(0) - Scalar(1);
    const Scalar hi = es.eigenvalues()(1) - Scalar(1);
    if (std::max(std::abs(lo), std::abs(hi)) <= tol) return ElementClass::PassiveLossless;
    if (hi < -tol) return ElementClass::PassiveLossy;
    if (lo > tol) return ElementClass::Active;
    return ElementClass::Indefinite;
}

/// Reciprocal elements have equal cross-face transmission coefficients.
template <typename Scalar>
[[nodiscard]] bool is_reciprocal(const TrMatrixT<Scalar>& xi,
                                 Scalar tol = Scalar(kStructuralTol)) {
    return std::abs(xi(0, 1) - xi(1, 0)) <= tol;
}

// ---------------------------------------------------------------------------
// Phase-shift model and coupled-phase projection
// ---------------------------------------------------------------------------

enum class PhaseShiftKind { Independent, Coupled };

struct PhaseShiftModel {
    PhaseShiftKind kind = PhaseShiftKind::Independent;
    double tolerance_rad = kPhaseTol;
};

/// Admissible phase differences phi_r - phi_t for passive lossless elements.
inline constexpr double kCoupledTargetLow = std::numbers::pi / 2;
inline constexpr double kCoupledTargetHigh = 3 * std::numbers::pi / 2;

/// Selector between the two admissible phase differences: 0 for pi/2,
/// 1 for 3*pi/2 (nearest wins, ties to 0).
template <typename Scalar>
[[nodiscard]] int auxiliary_bit(const TrCoefficientsT<Scalar>& c) {
    const Scalar diff = c.phi_r - c.phi_t;
    const Scalar d_low = angular_distance(diff, Scalar(kCoupledTargetLow));
    const Scalar d_high = angular_distance(diff, Scalar(kCoupledTargetHigh));
    return d_low <= d_high ? 0 : 1;
}

/// Moves a coefficient pair onto the nearer admissible phase difference,
/// splitting the angular correction equally between phi_t and phi_r.
/// Amplitudes are untouched; the map is idempotent.
template <typename Scalar>
[[nodiscard]] TrCoefficientsT<Scalar> project_coupled(const TrCoefficientsT<Scalar>& c) {
    constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
    const Scalar diff = c.phi_r - c.phi_t;
    const Scalar excess_low = std::remainder(diff - Scalar(kCoupledTargetLow), two_pi);
    const Scalar excess_high = std::remainder(diff - Scalar(kCoupledTargetHigh), two_pi);
    const Scalar correction =
        std::abs(excess_low) <= std::abs(excess_high) ? -excess_low : -excess_high;
    TrCoefficientsT<Scalar> out = c;
    out.phi_t = wrap_two_pi(c.phi_t - correction / Scalar(2));
    out.phi_r = wrap_two_pi(c.phi_r + correction / Scalar(2));
    return out;
}

/// Distance from the element's phase difference to the nearer admissible
/// coupled target, in radians. Zero-amplitude elements are skipped.
template <typename Scalar>
[[nodiscard]] Scalar coupled_phase_distance(const TrCoefficientsT<Scalar>& c) {
    if (c.beta_t < Scalar(kAmplitudeFloor) || c.beta_r < Scalar(kAmplitudeFloor)) {
        return Scalar(0);
    }
    const Scalar diff = c.phi_r - c.phi_t;
    return std::min(angular_distance(diff, Scalar(kCoupledTargetLow)),
                    angular_distance(diff, Scalar(kCoupledTargetHigh)));
}

// ---------------------------------------------------------------------------
// Operating protocols and surface configuration
// ---------------------------------------------------------------------------

enum class ProtocolKind { EnergySplitting, ModeSwitching, TimeSwitching };

/// Slot-time fractions for the time-switching protocol.
struct TimeFractions {
    double transmit = 0.5;
    double reflect = 0.5;
};

struct OperatingProtocol {
    ProtocolKind kind = ProtocolKind::EnergySplitting;
    std::optional<TimeFractions> ts_fractions{};  ///< TimeSwitching only
};

/// Which half-space a point occupies relative to the surface plane.
enum class Side { Transmission, Reflection };

struct SurfaceConfig {
    std::vector<Eigen::Vector3d> positions;              ///< element centers, meters
    Eigen::Vector3d normal = Eigen::Vector3d::UnitY();   ///< points into transmission space
    PhaseShiftModel model{};
    OperatingProtocol protocol{};

    [[nodiscard]] int element_count() const { return static_cast<int>(positions.size()); }
    [[nodiscard]] Eigen::Vector3d center() const;
    /// Largest pairwise element distance, meters.
    [[nodiscard]] double largest_dimension() const;
};

/// Uniform nx-by-ny grid in the plane orthogonal to +Y, centered at `center`.
[[nodiscard]] SurfaceConfig make_planar_surface(int nx, int ny, double spacing_m,
                                                const Eigen::Vector3d& center =
                                                    Eigen::Vector3d::Zero());

/// Planar surface with `m` elements, factored as close to square as possible.
[[nodiscard]] SurfaceConfig make_planar_surface_for_count(int m, double spacing_m,
                                                          const Eigen::Vector3d& center =
                                                              Eigen::Vector3d::Zero());

/// Side of the surface a point lies on.
[[nodiscard]] Side side_of(const SurfaceConfig& surface, const Eigen::Vector3d& point);

/// Result of applying an operating protocol to a coefficient vector.
/// EnergySplitting and ModeSwitching fill only `coeffs`; TimeSwitching fills
/// `coeffs` with the transmission-slot vector, `reflect_slot` with the
/// reflection-slot vector, and echoes the slot fractions.
struct EnforcedCoefficients {
    std::vector<TrCoefficients> coeffs;
    std::vector<TrCoefficients> reflect_slot;
    std::optional<TimeFractions> fractions;
};

/// Forces a coefficient vector to be feasible under the surface's protocol.
/// ModeSwitching rounds each element to the nearer single mode, ties to
/// reflection. Throws ProtocolMismatch on an infeasible energy-splitting
/// vector or a time-switching config without fractions; LengthMismatch when
/// sizes disagree.
[[nodiscard]] EnforcedCoefficients enforce_protocol(const SurfaceConfig& cfg,
                                                    std::span<const TrCoefficients> coeffs);

/// Cross-validates the hardware model against the coupled phase-shift law:
/// purely imaginary impedances must give |t|^2 + |r|^2 == 1 with the phase
/// difference at an admissible target. Degenerate (zero) coefficients pass
/// vacuously. Throws NotRealizable on inputs with resistive parts.
[[nodiscard]] bool coupled_consistency_check(const ImpedancePair& p,
                                             double tol = kStructuralTol);

}  // namespace starsim
