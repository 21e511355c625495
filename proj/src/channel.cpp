// SPDX-License-Identifier: Apache-2.0
//
// starsim: link-level simulation and beamforming for simultaneously
// transmitting and reflecting reconfigurable surfaces.

#include "starsim/channel.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>

namespace starsim {

namespace {

using C = std::complex<double>;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Per-element Rician mixer with a shared generator. Scattered components are
/// drawn in call order, so two models driven by the same seed and geometry
/// share their small-scale realization.
class RicianMixer {
  public:
    RicianMixer(double k_factor, double wavelength, std::uint64_t seed)
        : k_(k_factor), wavelength_(wavelength), rng_(seed) {
        if (k_ < 0.0) throw ValidationError("rician_k must be nonnegative");
    }

    C operator()(double amplitude, double phase_distance) {
        const C los = std::polar(1.0, -kTwoPi * phase_distance / wavelength_);
        if (std::isinf(k_)) return amplitude * los;
        const double los_w = std::sqrt(k_ / (k_ + 1.0));
        const double scatter_w = std::sqrt(1.0 / (k_ + 1.0));
        const double re = gauss_(rng_);
        const double im = gauss_(rng_);
        const C scatter = C(re, im) / std::numbers::sqrt2;
        return amplitude * (los_w * los + scatter_w * scatter);
    }

  private:
    double k_;
    double wavelength_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> gauss_{0.0, 1.0};
};

double hop_amplitude(double gain, double distance, double exponent) {
    return std::sqrt(gain) * std::pow(distance, -exponent / 2.0);
}

Eigen::Vector3d antenna_position(const BsConfig& bs, double wavelength, int n) {
    const double offset = (n - (bs.antennas - 1) / 2.0) * wavelength / 2.0;
    return bs.position + Eigen::Vector3d(offset, 0.0, 0.0);
}

ChannelRealization generate_links(const SurfaceConfig& surface, const BsConfig& bs,
                                  std::span<const UserConfig> users,
                                  const FadingParams& fading, std::uint64_t seed,
                                  bool near_field, bool direct_link) {
    if (fading.carrier_wavelength <= 0.0) {
        throw InvalidWavelength("carrier wavelength must be positive");
    }
    if (bs.antennas <= 0) throw ValidationError("antenna count must be positive");
    const int m_count = surface.element_count();
    const int n_count = bs.antennas;
    const int k_count = static_cast<int>(users.size());
    const double lambda = fading.carrier_wavelength;

    ChannelRealization real;
    real.bs_to_surface.resize(m_count, n_count);
    real.surface_to_user.resize(m_count, k_count);
    real.direct = Eigen::MatrixXcd::Zero(n_count, k_count);
    real.sides.reserve(users.size());
    for (const auto& u : users) real.sides.push_back(u.side);

    RicianMixer mix(fading.rician_k, lambda, seed);
    const Eigen::Vector3d center = surface.center();

    // Base station to surface.
    const double d_bs = (center - bs.position).norm();
    const Eigen::Vector3d u_bs = (center - bs.position) / d_bs;
    const double amp_bs_far = hop_amplitude(fading.reference_gain, d_bs,
                                            fading.pathloss_exponent_bs);
    for (int m = 0; m < m_count; ++m) {
        for (int n = 0; n < n_count; ++n) {
            const Eigen::Vector3d q_n = antenna_position(bs, lambda, n);
            if (near_field) {
                const double d = (surface.positions[m] - q_n).norm();
                real.bs_to_surface(m, n) =
                    mix(hop_amplitude(fading.reference_gain, d, fading.pathloss_exponent_bs), d);
            } else {
                const double d = d_bs + u_bs.dot(surface.positions[m] - center) -
                                 u_bs.dot(q_n - bs.position);
                real.bs_to_surface(m, n) = mix(amp_bs_far, d);
            }
        }
    }

    // Surface to users.
    for (int k = 0; k < k_count; ++k) {
        const Eigen::Vector3d& pos = users[k].position;
        const double d_user = (pos - center).norm();
        const Eigen::Vector3d u_dir = (pos - center) / d_user;
        const double amp_far = hop_amplitude(fading.reference_gain, d_user,
                                             fading.pathloss_exponent_user);
        for (int m = 0; m < m_count; ++m) {
            if (near_field) {
                const double d = (pos - surface.positions[m]).norm();
                real.surface_to_user(m, k) = mix(
                    hop_amplitude(fading.reference_gain, d, fading.pathloss_exponent_user), d);
            } else {
                const double d = d_user - u_dir.dot(surface.positions[m] - center);
                real.surface_to_user(m, k) = mix(amp_far, d);
            }
        }
    }

    // Optional direct base-station-to-user path; exact per-antenna distances.
    if (direct_link) {
        for (int k = 0; k < k_count; ++k) {
            for (int n = 0; n < n_count; ++n) {
                const double d = (users[k].position - antenna_position(bs, lambda, n)).norm();
                real.direct(n, k) = mix(
                    hop_amplitude(fading.reference_gain, d, fading.pathloss_exponent_user), d);
            }
        }
    }

    return real;
}

}  // namespace

void validate_link_geometry(const SurfaceConfig& surface, const LinkGeometry& link) {
    if (side_of(surface, link.user_position) != link.side) {
        throw ValidationError("user side does not match its position along the surface normal");
    }
    if (side_of(surface, link.bs_position) != Side::Reflection) {
        throw ValidationError("base station must sit in the reflection half-space");
    }
}

double rayleigh_distance(double largest_dimension_m, double wavelength_m) {
    if (wavelength_m <= 0.0) throw InvalidWavelength("rayleigh_distance: wavelength <= 0");
    if (largest_dimension_m < 0.0) throw ValidationError("rayleigh_distance: negative dimension");
    return 2.0 * largest_dimension_m * largest_dimension_m / wavelength_m;
}

ChannelRealization far_field_links(const SurfaceConfig& surface, const BsConfig& bs,
                                   std::span<const UserConfig> users,
                                   const FadingParams& fading, std::uint64_t seed,
                                   bool direct_link) {
    const double boundary = rayleigh_distance(surface.largest_dimension(),
                                              fading.carrier_wavelength);
    const Eigen::Vector3d center = surface.center();
    double nearest = (bs.position - center).norm();
    for (const auto& u : users) nearest = std::min(nearest, (u.position - center).norm());
    if (nearest < boundary) {
        std::cerr << "starsim: warning: far-field model used at " << nearest
                  << " m, inside the Rayleigh boundary of " << boundary << " m\n";
    }
    return generate_links(surface, bs, users, fading, seed, /*near_field=*/false, direct_link);
}

ChannelRealization near_field_links(const SurfaceConfig& surface, const BsConfig& bs,
                                    std::span<const UserConfig> users,
                                    const FadingParams& fading, std::uint64_t seed,
                                    bool direct_link) {
    return generate_links(surface, bs, users, fading, seed, /*near_field=*/true, direct_link);
}

Eigen::VectorXcd effective_channel(const ChannelRealization& real,
                                   std::span<const TrCoefficients> coeffs, int user) {
    if (static_cast<int>(coeffs.size()) != real.elements()) {
        throw LengthMismatch("effective_channel: coefficient count != element count");
    }
    if (user < 0 || user >= real.users()) {
        throw LengthMismatch("effective_channel: user index out of range");
    }
    const Side side = real.sides[static_cast<std::size_t>(user)];
    Eigen::VectorXcd weighted(real.elements());
    for (int m = 0; m < real.elements(); ++m) {
        weighted(m) = real.surface_to_user(m, user) * side_coefficient(coeffs[m], side);
    }
    return real.bs_to_surface.transpose() * weighted + real.direct.col(user);
}

std::complex<double> effective_channel(const ChannelRealization& real,
                                       std::span<const TrCoefficients> coeffs, Side side) {
    if (real.antennas() != 1) {
        throw ScenarioMismatch("scalar effective_channel requires a single-antenna BS");
    }
    int user = -1;
    for (int k = 0; k < real.users(); ++k) {
        if (real.sides[static_cast<std::size_t>(k)] == side) {
            if (user >= 0) throw ScenarioMismatch("more than one user on the requested side");
            user = k;
        }
    }
    if (user < 0) throw ScenarioMismatch("no user on the requested side");
    return effective_channel(real, coeffs, user)(0);
}

}  // namespace starsim
