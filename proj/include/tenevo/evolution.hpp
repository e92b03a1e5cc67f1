#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "tenevo/galerkin.hpp"

namespace tenevo {

enum class PartitionKind {
    full,
    /// one draw before the first step, reused for the whole run
    fixed,
    /// fresh uniform draw per sub-network at every step
    random_per_step,
    /// first layer always selected, the rest drawn to reach the count
    random_with_first_layer,
    /// first layer never selected
    random_without_first_layer,
    /// biases never selected
    random_without_bias,
};

std::string to_string(PartitionKind k);
PartitionKind partition_kind_from_string(const std::string& s);

/// How many parameters of each sub-network evolve. `count` wins over `ratio`
/// when set; a ratio is rounded to the nearest integer count per sub-network.
struct PartitionStrategy {
    PartitionKind kind{PartitionKind::full};
    double ratio{1.0};
    std::optional<int> count;
    std::uint64_t seed{0};
    /// Restart the generator from `seed` before every draw, so every step
    /// selects the same parameters.
    bool reseed_each_step{false};

    bool redraws() const;
    int count_per_subnet(const ParamLayout& layout) const;
    void validate(const TnnArchitecture& arch) const;
};

ParamMask select_mask(const PartitionStrategy& strategy, const TnnArchitecture& arch, std::mt19937_64& rng);

/// Hands out the mask for each step according to a strategy. Redrawn masks
/// depend only on (seed, step), so a run resumed at step n sees the same masks.
class MaskSchedule {
public:
    MaskSchedule(PartitionStrategy strategy, TnnArchitecture arch);

    const ParamMask& mask_for_step(std::int64_t step);
    const PartitionStrategy& strategy() const { return strategy_; }

private:
    PartitionStrategy strategy_;
    TnnArchitecture arch_;
    std::mt19937_64 rng_;
    std::optional<ParamMask> current_;
    std::int64_t last_step_{-1};
};

struct EvolutionState {
    TnnParams params;
    double t{0.0};
    std::int64_t step{0};
    ParamMask mask;
};

/// Parameter velocity for the masked parameters of a state at time t.
using VelocityFn = std::function<Velocity(const TnnParams&, const ParamMask&, double t)>;

/// Diagnostics of one step, taken from its first stage evaluation.
struct StepRecord {
    double gamma_norm{0.0};
    double residual{0.0};
    SolveDiagnostics diagnostics;
};

/// Explicit Euler predictor followed by a trapezoidal corrector. The mask of
/// `state` is used for both stages; unselected parameters are never touched.
EvolutionState step_modified_euler(const EvolutionState& state, double dt, const VelocityFn& velocity,
                                   StepRecord* record = nullptr);
/// Classical four-stage Runge-Kutta with the mask held fixed across stages.
EvolutionState step_rk4(const EvolutionState& state, double dt, const VelocityFn& velocity,
                        StepRecord* record = nullptr);

VelocityFn problem_velocity(const PdeProblem& problem, const Rules& rules, double rcond = kDefaultRcond);

EvolutionState step_modified_euler(const EvolutionState& state, double dt, const PdeProblem& problem,
                                   const Rules& rules, double rcond = kDefaultRcond, StepRecord* record = nullptr);
EvolutionState step_rk4(const EvolutionState& state, double dt, const PdeProblem& problem, const Rules& rules,
                        double rcond = kDefaultRcond, StepRecord* record = nullptr);

enum class Integrator { modified_euler, rk4 };
std::string to_string(Integrator i);
Integrator integrator_from_string(const std::string& s);

EvolutionState step(Integrator integrator, const EvolutionState& state, double dt, const VelocityFn& velocity,
                    StepRecord* record = nullptr);

} // namespace tenevo
