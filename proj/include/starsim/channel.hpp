// SPDX-License-Identifier: Apache-2.0
//
// starsim: link-level simulation and beamforming for simultaneously
// transmitting and reflecting reconfigurable surfaces.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "starsim/star_core.hpp"

namespace starsim {

/// Small-scale and large-scale fading parameters. All quantities linear.
struct FadingParams {
    /// LOS-to-scatter power ratio. 0 degenerates to Rayleigh fading and
    /// +infinity is the pure line-of-sight sentinel.
    double rician_k = 3.0;
    double pathloss_exponent_bs = 2.0;    ///< base-station-side hop
    double pathloss_exponent_user = 2.0;  ///< user-side hop
    double reference_gain = 1e-3;         ///< power gain at 1 m
    double carrier_wavelength = 0.0857;   ///< meters
};

/// Transmit array: uniform linear, half-wavelength spacing along global X.
struct BsConfig {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    int antennas = 1;
};

/// One receiver and the half-space it occupies.
struct UserConfig {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Side side = Side::Transmission;
};

/// End-to-end geometry of one user link.
struct LinkGeometry {
    Eigen::Vector3d bs_position;
    Eigen::Vector3d user_position;
    Side side;
};

/// Checks that a link's declared side matches the sign of the user's
/// coordinate along the surface normal and that the base station sits in the
/// reflection half-space. Throws ValidationError otherwise.
void validate_link_geometry(const SurfaceConfig& surface, const LinkGeometry& link);

/// One draw of all links in a scenario. Rows index surface elements.
struct ChannelRealization {
    Eigen::MatrixXcd bs_to_surface;    ///< M x N
    Eigen::MatrixXcd surface_to_user;  ///< M x K, one column per user
    Eigen::MatrixXcd direct;           ///< N x K, zero when the direct path is blocked
    std::vector<Side> sides;           ///< K

    [[nodiscard]] int elements() const { return static_cast<int>(bs_to_surface.rows()); }
    [[nodiscard]] int antennas() const { return static_cast<int>(bs_to_surface.cols()); }
    [[nodiscard]] int users() const { return static_cast<int>(surface_to_user.cols()); }
};

/// Near/far boundary 2 L^2 / lambda of an aperture with largest dimension L.
/// Throws InvalidWavelength when lambda <= 0.
[[nodiscard]] double rayleigh_distance(double largest_dimension_m, double wavelength_m);

/// Far-field draw: per-hop amplitudes follow sqrt(gain) * d^(-exponent/2)
/// from the center distances, line-of-sight phases use the first-order
/// plane-wave expansion around the array centers, and an independent Rician
/// factor is applied per link. Emits a warning (stderr) when a center
/// distance is inside the Rayleigh boundary. Deterministic in (inputs, seed).
[[nodiscard]] ChannelRealization far_field_links(const SurfaceConfig& surface,
                                                 const BsConfig& bs,
                                                 std::span<const UserConfig> users,
                                                 const FadingParams& fading,
                                                 std::uint64_t seed,
                                                 bool direct_link = false);

/// Near-field draw: every element uses its own exact link distance for both
/// amplitude and phase. No plane-wave approximation.
[[nodiscard]] ChannelRealization near_field_links(const SurfaceConfig& surface,
                                                  const BsConfig& bs,
                                                  std::span<const UserConfig> users,
                                                  const FadingParams& fading,
                                                  std::uint64_t seed,
                                                  bool direct_link = false);

/// Coefficient applied by an element toward one side.
[[nodiscard]] inline std::complex<double> side_coefficient(const TrCoefficients& c,
                                                           Side side) {
    return side == Side::Transmission ? c.transmit_coefficient() : c.reflect_coefficient();
}

/// Effective base-station-to-user channel for one user:
/// f = G^T (h .* theta) + d, one entry per transmit antenna.
/// Throws LengthMismatch when dimensions disagree.
[[nodiscard]] Eigen::VectorXcd effective_channel(const ChannelRealization& real,
                                                 std::span<const TrCoefficients> coeffs,
                                                 int user);

/// Scalar effective channel d + sum_m h_m sqrt(beta) e^{j phi} g_m for the
/// single user on `side` of a single-antenna scenario.
/// Throws ScenarioMismatch unless exactly one user occupies that side and the
/// base station has one antenna.
[[nodiscard]] std::complex<double> effective_channel(const ChannelRealization& real,
                                                     std::span<const TrCoefficients> coeffs,
                                                     Side side);

}  // namespace starsim
