// SPDX-License-Identifier: Apache-2.0
//
// starsim: link-level simulation and beamforming for simultaneously
// transmitting and reflecting reconfigurable surfaces.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "starsim/channel.hpp"

namespace starsim {

enum class Objective { SumSpectralEfficiency, TransmitPower };

/// Joint transmit/surface beamforming instance over one channel draw.
struct BeamformingProblem {
    Objective objective = Objective::SumSpectralEfficiency;
    ChannelRealization channels;
    double noise_power = 1e-11;        ///< Watts
    double power_budget = 1.0;         ///< Watts; SumSpectralEfficiency only
    std::vector<double> sinr_targets;  ///< linear, per user; TransmitPower only
    std::vector<double> rate_weights;  ///< optional, defaults to all ones
    PhaseShiftModel model{};
    OperatingProtocol protocol{};

    [[nodiscard]] int elements() const { return channels.elements(); }
    [[nodiscard]] int antennas() const { return channels.antennas(); }
    [[nodiscard]] int users() const { return channels.users(); }

    /// Throws ValidationError unless exactly the fields demanded by the
    /// objective are populated and dimensions agree.
    void validate() const;
};

/// Penalty schedule and inner-loop controls shared by all solvers.
struct PenaltyConfig {
    double rho0 = 1e-2;          ///< initial penalty weight
    double growth = 5.0;         ///< outer-loop multiplier
    double violation_tol = 1e-4; ///< radians
    int max_outer = 20;
    double inner_tol = 1e-5;     ///< relative objective change
    int max_inner = 200;
    double power_cap = 1e6;      ///< Watts; beyond this targets are declared infeasible
};

struct TraceEntry {
    int outer = 0;
    int inner = 0;
    double objective = 0.0;
    double max_violation = 0.0;
};

/// Solver output. Time switching fills the `*_reflect_slot` members and the
/// slot fractions; other protocols leave them empty.
struct Solution {
    Eigen::MatrixXcd precoders;  ///< antennas x users
    std::vector<TrCoefficients> coeffs;
    Eigen::MatrixXcd precoders_reflect_slot;
    std::vector<TrCoefficients> coeffs_reflect_slot;
    std::optional<TimeFractions> ts_fractions;
    double objective_value = 0.0;
    /// Violation of the returned (projected) iterate; ~0 for coupled runs.
    double final_violation = 0.0;
    /// Violation of the converged iterate before the final exact projection.
    double converged_violation = 0.0;
    std::vector<TraceEntry> trace;
};

/// Max angular distance of any lit element's phase difference from the
/// nearer admissible coupled target. Elements dark in either mode are
/// skipped.
[[nodiscard]] double phase_violation(std::span<const TrCoefficients> coeffs);

/// Objective value of a solution under the problem's convention: sum
/// spectral efficiency in bit/s/Hz, or transmit power in Watts (slot-share
/// weighted for time switching). Throws LengthMismatch on dimension clash.
[[nodiscard]] double evaluate_objective(const BeamformingProblem& prob, const Solution& sol);

/// One transmit-precoder block update at fixed surface coefficients.
/// Sum-SE problems take a weighted-MMSE step from `current` (or a
/// matched-filter start when `current` is empty); power minimization returns
/// exact-target scaling for a single user or the duality fixed point for the
/// multi-antenna multi-user case. Throws InfeasibleTargets when no bounded
/// power meets the targets.
[[nodiscard]] Eigen::MatrixXcd precoder_update(const BeamformingProblem& prob,
                                               std::span<const TrCoefficients> coeffs,
                                               const Eigen::MatrixXcd& current,
                                               const PenaltyConfig& cfg = {});

/// Penalty-based solver: alternates precoder updates with projected-gradient
/// steps on amplitudes and phases, adding a chordal-distance penalty on the
/// coupled phase constraint whose weight grows each outer loop. Independent
/// instances run with a zero penalty weight. Extra starting points may be
/// supplied to refine existing solutions.
[[nodiscard]] Solution penalty_optimize(const BeamformingProblem& prob,
                                        const PenaltyConfig& cfg, std::uint64_t seed,
                                        std::span<const Solution> warm_starts = {});

/// Alternating-optimization baseline: full precoder solve and full
/// coefficient solve in turn, with an exact projection onto the coupled set
/// after each coefficient block.
[[nodiscard]] Solution alternating_optimize(const BeamformingProblem& prob,
                                            const PenaltyConfig& cfg, std::uint64_t seed,
                                            std::span<const Solution> warm_starts = {});

/// Element-wise coordinate descent for the two-user single-antenna power
/// minimization problem under the coupled model: each element enumerates
/// both auxiliary-bit choices over a phase grid with local refinement.
/// Throws ScenarioMismatch unless the instance has exactly two users on
/// opposite sides, one BS antenna, and the coupled model.
[[nodiscard]] Solution element_wise_optimize(const BeamformingProblem& prob,
                                             const PenaltyConfig& cfg, std::uint64_t seed);

}  // namespace starsim
