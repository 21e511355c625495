// SPDX-License-Identifier: Apache-2.0
//
// starsim: link-level simulation and beamforming for simultaneously
// transmitting and reflecting reconfigurable surfaces.

#include "starsim/star_core.hpp"

#include <algorithm>
#include <string>

namespace starsim {

Eigen::Vector3d SurfaceConfig::center() const {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto& p : positions) c += p;
    if (!positions.empty()) c /= static_cast<double>(positions.size());
    return c;
}

double SurfaceConfig::largest_dimension() const {
    double best = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (std::size_t j = i + 1; j < positions.size(); ++j) {
            best = std::max(best, (positions[i] - positions[j]).norm());
        }
    }
    return best;
}

SurfaceConfig make_planar_surface(int nx, int ny, double spacing_m,
                                  const Eigen::Vector3d& center) {
    if (nx <= 0 || ny <= 0) throw ValidationError("surface grid dimensions must be positive");
    if (spacing_m <= 0.0) throw ValidationError("element spacing must be positive");
    SurfaceConfig cfg;
    cfg.positions.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double x = (i - (nx - 1) / 2.0) * spacing_m;
            const double z = (j - (ny - 1) / 2.0) * spacing_m;
            cfg.positions.push_back(center + Eigen::Vector3d(x, 0.0, z));
        }
    }
    return cfg;
}

SurfaceConfig make_planar_surface_for_count(int m, double spacing_m,
                                            const Eigen::Vector3d& center) {
    if (m <= 0) throw ValidationError("element count must be positive");
    int nx = static_cast<int>(std::floor(std::sqrt(static_cast<double>(m))));
    while (nx > 1 && m % nx != 0) --nx;
    return make_planar_surface(nx, m / nx, spacing_m, center);
}

Side side_of(const SurfaceConfig& surface, const Eigen::Vector3d& point) {
    const double s = (point - surface.center()).dot(surface.normal);
    return s > 0.0 ? Side::Transmission : Side::Reflection;
}

EnforcedCoefficients enforce_protocol(const SurfaceConfig& cfg,
                                      std::span<const TrCoefficients> coeffs) {
    if (static_cast<int>(coeffs.size()) != cfg.element_count()) {
        throw LengthMismatch("enforce_protocol: coefficient count != element count");
    }
    EnforcedCoefficients out;
    out.coeffs.assign(coeffs.begin(), coeffs.end());
    switch (cfg.protocol.kind) {
        case ProtocolKind::EnergySplitting:
            for (std::size_t m = 0; m < out.coeffs.size(); ++m) {
                if (!is_passive(out.coeffs[m])) {
                    throw ProtocolMismatch("energy splitting: element " + std::to_string(m) +
                                           " exceeds the passive amplitude budget");
                }
            }
            break;
        case ProtocolKind::ModeSwitching:
            for (auto& c : out.coeffs) {
                // Nearer single mode wins, ties go to reflection-only.
                if (c.beta_t > c.beta_r) {
                    c.beta_t = 1.0;
                    c.beta_r = 0.0;
                } else {
                    c.beta_t = 0.0;
                    c.beta_r = 1.0;
                }
            }
            break;
        case ProtocolKind::TimeSwitching: {
            if (!cfg.protocol.ts_fractions) {
                throw ProtocolMismatch("time switching requires slot fractions");
            }
            out.reflect_slot = out.coeffs;
            for (auto& c : out.coeffs) {
                c.beta_t = 1.0;
                c.beta_r = 0.0;
            }
            for (auto& c : out.reflect_slot) {
                c.beta_t = 0.0;
                c.beta_r = 1.0;
            }
            out.fractions = cfg.protocol.ts_fractions;
            break;
        }
    }
    return out;
}

bool coupled_consistency_check(const ImpedancePair& p, double tol) {
    if (!passive_lossless_realizable(p)) {
        throw NotRealizable("coupled_consistency_check: impedances must be purely imaginary");
    }
    const auto [t, r] = coeffs_from_impedance(p);
    const double power = std::norm(t) + std::norm(r);
    if (std::abs(power - 1.0) > tol) return false;
    if (std::norm(t) < kAmplitudeFloor || std::norm(r) < kAmplitudeFloor) return true;
    const double diff = std::arg(r) - std::arg(t);
    const double dist = std::min(angular_distance(diff, kCoupledTargetLow),
                                 angular_distance(diff, kCoupledTargetHigh));
    return dist <= tol;
}

}  // namespace starsim
