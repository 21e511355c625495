// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "starsim/channel.hpp"

using namespace starsim;
using std::numbers::pi;
using C = std::complex<double>;

namespace {

constexpr double kSpeedOfLight = 299792458.0;

std::vector<TrCoefficients> uniform_coefficients(int m, double beta_t, double beta_r,
                                                 double phi_t = 0.0, double phi_r = 0.0) {
    return std::vector<TrCoefficients>(static_cast<std::size_t>(m),
                                       make_coefficients(beta_t, beta_r, phi_t, phi_r));
}

}  // namespace

TEST_CASE("rayleigh_distance: reference cases") {
    const double lambda60 = kSpeedOfLight / 60e9;
    CHECK(std::abs(rayleigh_distance(0.5, lambda60) - 100.0) < 0.5);
    CHECK(rayleigh_distance(0.0, 0.01) == 0.0);
    CHECK(rayleigh_distance(0.1, 0.01) == doctest::Approx(2.0));
    CHECK_THROWS_AS((void)rayleigh_distance(0.5, 0.0), InvalidWavelength);
    CHECK_THROWS_AS((void)rayleigh_distance(0.5, -1.0), InvalidWavelength);
}

TEST_CASE("link geometry validation") {
    const SurfaceConfig surface = make_planar_surface(2, 2, 0.05);
    validate_link_geometry(surface, {{0, -10, 0}, {0, 10, 0}, Side::Transmission});
    validate_link_geometry(surface, {{0, -10, 0}, {3, -5, 0}, Side::Reflection});
    CHECK_THROWS_AS(
        validate_link_geometry(surface, {{0, -10, 0}, {0, 10, 0}, Side::Reflection}),
        ValidationError);
    CHECK_THROWS_AS(
        validate_link_geometry(surface, {{0, 10, 0}, {0, -10, 0}, Side::Reflection}),
        ValidationError);
}

TEST_CASE("far_field_links: deterministic in the seed") {
    const SurfaceConfig surface = make_planar_surface(4, 4, 0.0429);
    const BsConfig bs{{0, -30, 0}, 4};
    const std::vector<UserConfig> users = {{{0, 25, 5}, Side::Transmission},
                                           {{4, -25, -3}, Side::Reflection}};
    FadingParams fading;
    const auto a = far_field_links(surface, bs, users, fading, 42);
    const auto b = far_field_links(surface, bs, users, fading, 42);
    CHECK(a.bs_to_surface == b.bs_to_surface);
    CHECK(a.surface_to_user == b.surface_to_user);
    CHECK(a.direct == b.direct);

    const auto c = far_field_links(surface, bs, users, fading, 43);
    CHECK(a.bs_to_surface != c.bs_to_surface);
}

TEST_CASE("far_field_links: pure LOS sentinel removes all randomness") {
    const SurfaceConfig surface = make_planar_surface(4, 2, 0.0429);
    const BsConfig bs{{0, -30, 0}, 2};
    const std::vector<UserConfig> users = {{{0, 25, 0}, Side::Transmission}};
    FadingParams fading;
    fading.rician_k = std::numeric_limits<double>::infinity();
    const auto a = far_field_links(surface, bs, users, fading, 1);
    const auto b = far_field_links(surface, bs, users, fading, 99);
    CHECK(a.bs_to_surface == b.bs_to_surface);
    CHECK(a.surface_to_user == b.surface_to_user);
    for (int m = 0; m < a.elements(); ++m) {
        CHECK(std::abs(a.surface_to_user(m, 0)) > 0.0);
    }
}

TEST_CASE("far_field_links: doubling the BS hop distance quarters the power") {
    const SurfaceConfig surface = make_planar_surface(4, 4, 0.0429);
    const std::vector<UserConfig> users = {{{0, 25, 0}, Side::Transmission}};
    FadingParams fading;
    fading.rician_k = std::numeric_limits<double>::infinity();
    const auto near_bs = far_field_links(surface, BsConfig{{0, -20, 0}, 1}, users, fading, 5);
    const auto far_bs = far_field_links(surface, BsConfig{{0, -40, 0}, 1}, users, fading, 5);
    const double p_near = near_bs.bs_to_surface.squaredNorm();
    const double p_far = far_bs.bs_to_surface.squaredNorm();
    CHECK(p_far / p_near == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("far_field_links: Rician power decomposes into LOS and scatter parts") {
    // Boresight geometry so every element shares the same LOS phase: the
    // sample mean then estimates the LOS component directly.
    const SurfaceConfig surface = make_planar_surface(40, 25, 0.0429);
    const BsConfig bs{{0, -300, 0}, 1};
    const std::vector<UserConfig> users = {{{0, 300, 0}, Side::Transmission}};
    FadingParams fading;
    fading.rician_k = 3.0;

    const int n_seeds = 100;
    double power_sum = 0.0;
    C mean_sum = 0.0;
    std::size_t count = 0;
    double amp = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
        const auto real = far_field_links(surface, bs, users, fading,
                                          1000 + static_cast<std::uint64_t>(s));
        for (int m = 0; m < real.elements(); ++m) {
            const C h = real.surface_to_user(m, 0);
            power_sum += std::norm(h);
            mean_sum += h;
            ++count;
        }
        if (s == 0) {
            FadingParams los_only = fading;
            los_only.rician_k = std::numeric_limits<double>::infinity();
            const auto det = far_field_links(surface, bs, users, los_only, 0);
            amp = std::abs(det.surface_to_user(0, 0));
        }
    }
    const double mean_power = power_sum / static_cast<double>(count);
    const double los_power = std::norm(mean_sum / static_cast<double>(count));
    // E|h|^2 = amp^2, |E h|^2 = amp^2 * K/(K+1), scatter rest = amp^2 / (K+1).
    CHECK(mean_power == doctest::Approx(amp * amp).epsilon(0.02));
    CHECK(los_power == doctest::Approx(amp * amp * 0.75).epsilon(0.02));
    CHECK(mean_power - los_power == doctest::Approx(amp * amp * 0.25).epsilon(0.05));
}

TEST_CASE("near_field_links: degenerates to far field for a single element") {
    const SurfaceConfig surface = make_planar_surface(1, 1, 0.0429);
    const BsConfig bs{{0, -30, 0}, 1};
    const std::vector<UserConfig> users = {{{2, 25, 1}, Side::Transmission}};
    FadingParams fading;
    const auto nf = near_field_links(surface, bs, users, fading, 7);
    const auto ff = far_field_links(surface, bs, users, fading, 7);
    CHECK(nf.bs_to_surface == ff.bs_to_surface);
    CHECK(nf.surface_to_user == ff.surface_to_user);
}

TEST_CASE("near_field_links: boresight symmetry equalizes element phases") {
    const SurfaceConfig surface = make_planar_surface(2, 1, 0.05);
    const BsConfig bs{{0, -10, 0}, 1};
    const std::vector<UserConfig> users = {{{0, 10, 0}, Side::Transmission}};
    FadingParams fading;
    fading.rician_k = std::numeric_limits<double>::infinity();
    const auto real = near_field_links(surface, bs, users, fading, 3);
    CHECK(std::arg(real.surface_to_user(0, 0)) ==
          doctest::Approx(std::arg(real.surface_to_user(1, 0))));
}

TEST_CASE("near and far field disagree well inside the Rayleigh region") {
    // 16-element linear aperture, user on boresight at 0.1x the Rayleigh
    // distance; coefficients steered for the far-field (uniform phase).
    const double lambda = 0.01;
    const SurfaceConfig surface = make_planar_surface(16, 1, lambda / 2);
    const double boundary = rayleigh_distance(surface.largest_dimension(), lambda);
    FadingParams fading;
    fading.carrier_wavelength = lambda;
    fading.rician_k = std::numeric_limits<double>::infinity();
    const BsConfig bs{{0, -100 * boundary, 0}, 1};
    const std::vector<UserConfig> users = {{{0, 0.1 * boundary, 0}, Side::Transmission}};

    const auto nf = near_field_links(surface, bs, users, fading, 11);
    const auto ff = far_field_links(surface, bs, users, fading, 11);
    const auto coeffs = uniform_coefficients(16, 1.0, 0.0);
    const double g_near = std::abs(effective_channel(nf, coeffs, Side::Transmission));
    const double g_far = std::abs(effective_channel(ff, coeffs, Side::Transmission));
    CHECK(std::abs(g_near - g_far) / g_far > 0.05);
}

TEST_CASE("near and far field reconcile at ten Rayleigh distances") {
    const double lambda = 0.01;
    const SurfaceConfig surface = make_planar_surface(8, 8, lambda / 2);
    const double boundary = rayleigh_distance(surface.largest_dimension(), lambda);
    FadingParams fading;
    fading.carrier_wavelength = lambda;
    const BsConfig bs{{1, -10 * boundary, 0.5}, 1};
    const std::vector<UserConfig> users = {{{-2, 10 * boundary, 1}, Side::Transmission}};

    const auto nf = near_field_links(surface, bs, users, fading, 19);
    const auto ff = far_field_links(surface, bs, users, fading, 19);
    const auto coeffs = uniform_coefficients(64, 0.5, 0.5);
    const double g_near = std::abs(effective_channel(nf, coeffs, Side::Transmission));
    const double g_far = std::abs(effective_channel(ff, coeffs, Side::Transmission));
    CHECK(std::abs(g_near - g_far) / g_far < 0.01);
}

TEST_CASE("cascaded power follows the inverse-fourth-power law in distance") {
    // log-log regression of mean per-element cascaded power against the
    // user-hop distance; expected slope -2 on the power of each hop, so the
    // cascade scales as d^-2 with the BS hop held fixed.
    const SurfaceConfig surface = make_planar_surface(10, 10, 0.0429);
    const BsConfig bs{{0, -30, 0}, 1};
    FadingParams fading;
    const std::vector<double> distances = {20, 30, 45, 70, 100};
    std::vector<double> log_d, log_p;
    for (std::size_t i = 0; i < distances.size(); ++i) {
        const std::vector<UserConfig> users = {{{0, distances[i], 0}, Side::Transmission}};
        double acc = 0.0;
        std::size_t n = 0;
        for (int s = 0; s < 25; ++s) {
            const auto real = far_field_links(surface, bs, users, fading,
                                              777 + static_cast<std::uint64_t>(s));
            for (int m = 0; m < real.elements(); ++m) {
                acc += std::norm(real.surface_to_user(m, 0) * real.bs_to_surface(m, 0));
                ++n;
            }
        }
        log_d.push_back(std::log(distances[i]));
        log_p.push_back(std::log(acc / static_cast<double>(n)));
    }
    // Least-squares slope.
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < log_d.size(); ++i) {
        mx += log_d[i];
        my += log_p[i];
    }
    mx /= static_cast<double>(log_d.size());
    my /= static_cast<double>(log_d.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < log_d.size(); ++i) {
        sxy += (log_d[i] - mx) * (log_p[i] - my);
        sxx += (log_d[i] - mx) * (log_d[i] - mx);
    }
    CHECK(sxy / sxx == doctest::Approx(-2.0).epsilon(0.025));
}

TEST_CASE("effective_channel: direct path only when the surface is dark") {
    ChannelRealization real;
    real.bs_to_surface = Eigen::MatrixXcd::Constant(3, 1, C(1, 0));
    real.surface_to_user = Eigen::MatrixXcd::Constant(3, 1, C(0, 1));
    real.direct = Eigen::MatrixXcd::Constant(1, 1, C(0.5, -0.25));
    real.sides = {Side::Transmission};
    const auto coeffs = uniform_coefficients(3, 0.0, 0.0);
    CHECK(std::abs(effective_channel(real, coeffs, Side::Transmission) - C(0.5, -0.25)) <
          1e-15);
}

TEST_CASE("effective_channel: coherent single-element addition") {
    ChannelRealization real;
    real.bs_to_surface = Eigen::MatrixXcd::Constant(1, 1, C(1, 0));
    real.surface_to_user = Eigen::MatrixXcd::Constant(1, 1, C(0, 1));  // arg = pi/2
    real.direct = Eigen::MatrixXcd::Constant(1, 1, C(1, 0));           // arg = 0
    real.sides = {Side::Transmission};
    // Transmission phase cancels arg(h g) so the paths add coherently.
    const auto coeffs = uniform_coefficients(1, 1.0, 0.0, -pi / 2, 0.0);
    const double gain = std::abs(effective_channel(real, coeffs, Side::Transmission));
    CHECK(gain == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("effective_channel: matches a term-by-term oracle") {
    std::mt19937 rng(31);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2 * pi);

    ChannelRealization real;
    real.bs_to_surface.resize(4, 1);
    real.surface_to_user.resize(4, 1);
    real.direct = Eigen::MatrixXcd::Zero(1, 1);
    real.direct(0, 0) = C(gauss(rng), gauss(rng));
    real.sides = {Side::Reflection};
    std::vector<TrCoefficients> coeffs;
    for (int m = 0; m < 4; ++m) {
        real.bs_to_surface(m, 0) = C(gauss(rng), gauss(rng));
        real.surface_to_user(m, 0) = C(gauss(rng), gauss(rng));
        const double bt = unit(rng);
        coeffs.push_back(make_coefficients(bt, 1.0 - bt, angle(rng), angle(rng)));
    }

    C oracle = real.direct(0, 0);
    for (int m = 0; m < 4; ++m) {
        oracle += real.surface_to_user(m, 0) *
                  (std::sqrt(coeffs[static_cast<std::size_t>(m)].beta_r) *
                   std::polar(1.0, coeffs[static_cast<std::size_t>(m)].phi_r)) *
                  real.bs_to_surface(m, 0);
    }
    const C got = effective_channel(real, coeffs, Side::Reflection);
    CHECK(std::abs(got - oracle) < 1e-12);
}

TEST_CASE("effective_channel: length mismatch throws") {
    ChannelRealization real;
    real.bs_to_surface = Eigen::MatrixXcd::Ones(4, 1);
    real.surface_to_user = Eigen::MatrixXcd::Ones(4, 1);
    real.direct = Eigen::MatrixXcd::Zero(1, 1);
    real.sides = {Side::Transmission};
    const auto coeffs = uniform_coefficients(3, 0.5, 0.5);
    CHECK_THROWS_AS((void)effective_channel(real, coeffs, 0), LengthMismatch);
}

TEST_CASE("co-phasing maximizes the scalar effective channel") {
    // With amplitudes fixed, phases that cancel arg(h_m g_m) against the
    // direct path dominate 1e5 random phase draws.
    std::mt19937 rng(37);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2 * pi);

    const int m_count = 4;
    ChannelRealization real;
    real.bs_to_surface.resize(m_count, 1);
    real.surface_to_user.resize(m_count, 1);
    real.direct = Eigen::MatrixXcd::Zero(1, 1);
    real.direct(0, 0) = C(gauss(rng), gauss(rng));
    real.sides = {Side::Transmission};
    for (int m = 0; m < m_count; ++m) {
        real.bs_to_surface(m, 0) = C(gauss(rng), gauss(rng));
        real.surface_to_user(m, 0) = C(gauss(rng), gauss(rng));
    }

    std::vector<TrCoefficients> best;
    const double d_phase = std::arg(real.direct(0, 0));
    for (int m = 0; m < m_count; ++m) {
        const double cascade =
            std::arg(real.surface_to_user(m, 0) * real.bs_to_surface(m, 0));
        best.push_back(make_coefficients(0.5, 0.5, d_phase - cascade, 0.0));
    }
    const double best_gain = std::abs(effective_channel(real, best, Side::Transmission));

    std::vector<TrCoefficients> trial = best;
    for (int i = 0; i < 100000; ++i) {
        for (auto& c : trial) c.phi_t = angle(rng);
        const double gain = std::abs(effective_channel(real, trial, Side::Transmission));
        CHECK(gain <= best_gain + 1e-12);
    }
}
