#include "tenevo/evolution.hpp"

#include <algorithm>
#include <cmath>

#include "tenevo/errors.hpp"

namespace tenevo {

namespace {

std::vector<std::size_t> eligible_indices(PartitionKind kind, const ParamLayout& layout) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < layout.per_subnet(); ++i) {
        const bool first = layout.is_first_layer(i);
        switch (kind) {
        case PartitionKind::random_with_first_layer:
        case PartitionKind::random_without_first_layer:
            if (first) continue;
            break;
        case PartitionKind::random_without_bias:
            if (layout.is_bias(i)) continue;
            break;
        default: break;
        }
        out.push_back(i);
    }
    return out;
}

std::size_t first_layer_size(const ParamLayout& layout) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < layout.per_subnet(); ++i) n += layout.is_first_layer(i) ? 1 : 0;
    return n;
}

TnnParams advance(const TnnParams& params, const ParamMask& mask, const Eigen::VectorXd& delta) {
    return unflatten_add(params, mask, std::span<const double>(delta.data(), static_cast<std::size_t>(delta.size())));
}

void fill_record(StepRecord* record, const Velocity& v) {
    if (!record) return;
    record->gamma_norm = v.gamma.norm();
    record->residual = v.residual;
    record->diagnostics = v.diagnostics;
}

EvolutionState next_state(const EvolutionState& state, TnnParams params, double dt) {
    for (double v : params.theta) {
        if (!std::isfinite(v)) {
            throw NumericalFailure("non-finite parameters after step " + std::to_string(state.step + 1));
        }
    }
    EvolutionState next{std::move(params), state.t + dt, state.step + 1, state.mask};
    return next;
}

void check_dt(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive");
}

} // namespace

std::string to_string(PartitionKind k) {
    switch (k) {
    case PartitionKind::full: return "full";
    case PartitionKind::fixed: return "fixed";
    case PartitionKind::random_per_step: return "random_per_step";
    case PartitionKind::random_with_first_layer: return "random_with_first_layer";
    case PartitionKind::random_without_first_layer: return "random_without_first_layer";
    case PartitionKind::random_without_bias: return "random_without_bias";
    }
    return "full";
}

PartitionKind partition_kind_from_string(const std::string& s) {
    for (auto k : {PartitionKind::full, PartitionKind::fixed, PartitionKind::random_per_step,
                   PartitionKind::random_with_first_layer, PartitionKind::random_without_first_layer,
                   PartitionKind::random_without_bias}) {
        if (to_string(k) == s) return k;
    }
    throw InvalidArgument("unknown partition kind '" + s + "'");
}

bool PartitionStrategy::redraws() const {
    return kind != PartitionKind::full && kind != PartitionKind::fixed;
}

int PartitionStrategy::count_per_subnet(const ParamLayout& layout) const {
    if (kind == PartitionKind::full) return static_cast<int>(layout.per_subnet());
    if (count) return *count;
    return static_cast<int>(std::lround(ratio * static_cast<double>(layout.per_subnet())));
}

void PartitionStrategy::validate(const TnnArchitecture& arch) const {
    if (kind == PartitionKind::full) return;
    if (!count && !(ratio > 0.0 && ratio <= 1.0)) {
        throw InvalidArgument("partition ratio must lie in (0, 1]");
    }
    const ParamLayout layout(arch);
    const int n = count_per_subnet(layout);
    if (n < 1) throw InvalidArgument("partition selects no parameters per sub-network");
    const auto eligible = eligible_indices(kind, layout).size();
    const std::size_t forced = kind == PartitionKind::random_with_first_layer ? first_layer_size(layout) : 0;
    if (static_cast<std::size_t>(n) > eligible + forced) {
        throw InvalidArgument("partition count " + std::to_string(n) + " exceeds the " +
                              std::to_string(eligible + forced) + " selectable parameters per sub-network");
    }
    if (static_cast<std::size_t>(n) < forced) {
        throw InvalidArgument("partition count " + std::to_string(n) + " is smaller than the first layer (" +
                              std::to_string(forced) + ")");
    }
}

ParamMask select_mask(const PartitionStrategy& strategy, const TnnArchitecture& arch, std::mt19937_64& rng) {
    strategy.validate(arch);
    if (strategy.kind == PartitionKind::full) return ParamMask::full(arch);
    const ParamLayout layout(arch);
    const auto n = static_cast<std::size_t>(strategy.count_per_subnet(layout));
    const auto pool = eligible_indices(strategy.kind, layout);
    std::vector<std::uint8_t> sel(layout.total(), 0);
    for (int k = 0; k < arch.dims; ++k) {
        const std::size_t off = layout.subnet_offset(k);
        std::size_t remaining = n;
        if (strategy.kind == PartitionKind::random_with_first_layer) {
            for (std::size_t i = 0; i < layout.per_subnet(); ++i) {
                if (layout.is_first_layer(i)) {
                    sel[off + i] = 1;
                    --remaining;
                }
            }
        }
        auto draw = pool;
        std::shuffle(draw.begin(), draw.end(), rng);
        for (std::size_t i = 0; i < remaining; ++i) sel[off + draw[i]] = 1;
    }
    return ParamMask::from_selection(arch, std::move(sel));
}

MaskSchedule::MaskSchedule(PartitionStrategy strategy, TnnArchitecture arch)
    : strategy_(strategy), arch_(std::move(arch)), rng_(strategy.seed) {
    strategy_.validate(arch_);
}

const ParamMask& MaskSchedule::mask_for_step(std::int64_t step) {
    if (current_ && (!strategy_.redraws() || step == last_step_)) return *current_;
    if (strategy_.reseed_each_step) {
        rng_.seed(strategy_.seed);
    } else if (strategy_.redraws()) {
        const auto s = strategy_.seed;
        const auto n = static_cast<std::uint64_t>(step);
        std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                          static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n >> 32)};
        rng_.seed(seq);
    }
    current_ = select_mask(strategy_, arch_, rng_);
    last_step_ = step;
    return *current_;
}

EvolutionState step_modified_euler(const EvolutionState& state, double dt, const VelocityFn& velocity,
                                   StepRecord* record) {
    check_dt(dt);
    const Velocity g1 = velocity(state.params, state.mask, state.t);
    fill_record(record, g1);
    const TnnParams predicted = advance(state.params, state.mask, dt * g1.gamma);
    const Velocity g2 = velocity(predicted, state.mask, state.t + dt);
    const Eigen::VectorXd delta = 0.5 * dt * (g1.gamma + g2.gamma);
    return next_state(state, advance(state.params, state.mask, delta), dt);
}

EvolutionState step_rk4(const EvolutionState& state, double dt, const VelocityFn& velocity, StepRecord* record) {
    check_dt(dt);
    const double half = 0.5 * dt;
    const Velocity k1 = velocity(state.params, state.mask, state.t);
    fill_record(record, k1);
    const Velocity k2 = velocity(advance(state.params, state.mask, half * k1.gamma), state.mask, state.t + half);
    const Velocity k3 = velocity(advance(state.params, state.mask, half * k2.gamma), state.mask, state.t + half);
    const Velocity k4 = velocity(advance(state.params, state.mask, dt * k3.gamma), state.mask, state.t + dt);
    const Eigen::VectorXd delta = (dt / 6.0) * (k1.gamma + 2.0 * k2.gamma + 2.0 * k3.gamma + k4.gamma);
    return next_state(state, advance(state.params, state.mask, delta), dt);
}

VelocityFn problem_velocity(const PdeProblem& problem, const Rules& rules, double rcond) {
    problem.validate();
    return [problem, rules, rcond](const TnnParams& params, const ParamMask& mask, double t) {
        return gamma_rhs(params, mask, problem, rules, t, rcond);
    };
}

EvolutionState step_modified_euler(const EvolutionState& state, double dt, const PdeProblem& problem,
                                   const Rules& rules, double rcond, StepRecord* record) {
    return step_modified_euler(state, dt, problem_velocity(problem, rules, rcond), record);
}

EvolutionState step_rk4(const EvolutionState& state, double dt, const PdeProblem& problem, const Rules& rules,
                        double rcond, StepRecord* record) {
    return step_rk4(state, dt, problem_velocity(problem, rules, rcond), record);
}

std::string to_string(Integrator i) { return i == Integrator::rk4 ? "rk4" : "modified_euler"; }

Integrator integrator_from_string(const std::string& s) {
    if (s == "rk4") return Integrator::rk4;
    if (s == "modified_euler") return Integrator::modified_euler;
    throw InvalidArgument("unknown integrator '" + s + "'");
}

EvolutionState step(Integrator integrator, const EvolutionState& state, double dt, const VelocityFn& velocity,
                    StepRecord* record) {
    return integrator == Integrator::rk4 ? step_rk4(state, dt, velocity, record)
                                         : step_modified_euler(state, dt, velocity, record);
}

} // namespace tenevo
