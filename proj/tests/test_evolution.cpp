#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tenevo/errors.hpp"
#include "tenevo/evolution.hpp"

using namespace tenevo;
using oracle::small_arch;

namespace {

Eigen::VectorXd selected_values(const TnnParams& p, const ParamMask& mask) {
    const auto v = flatten(p, mask);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

EvolutionState make_state(const TnnArchitecture& a, const ParamMask& mask, std::uint64_t seed) {
    return {init_network(a, seed), 0.0, 0, mask};
}

// gamma = lambda * theta_hat, i.e. theta_hat(t) = theta_hat(0) exp(lambda t)
VelocityFn linear_velocity(double lambda) {
    return [lambda](const TnnParams& p, const ParamMask& mask, double) {
        return Velocity{lambda * selected_values(p, mask), {}, 0.0};
    };
}

ParamMask every_other(const TnnArchitecture& a) {
    const ParamLayout layout(a);
    std::vector<std::uint8_t> sel(layout.total(), 0);
    for (std::size_t i = 0; i < sel.size(); i += 2) sel[i] = 1;
    return ParamMask::from_selection(a, sel);
}

std::set<std::size_t> selected_locals(const ParamMask& m, int k) {
    return {m.local[k].begin(), m.local[k].end()};
}

} // namespace

TEST(Steppers, ConstantVelocityIsExact) {
    const auto a = small_arch(2, 2, {4}, InputMapKind::periodic);
    const auto mask = every_other(a);
    const auto s0 = make_state(a, mask, 3);
    Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(mask.count()), -1.0, 2.0);
    const VelocityFn v = [c](const TnnParams&, const ParamMask&, double) { return Velocity{c, {}, 0.0}; };
    const double dt = 0.125;
    for (auto integ : {Integrator::modified_euler, Integrator::rk4}) {
        const auto s1 = step(integ, s0, dt, v);
        const Eigen::VectorXd want = selected_values(s0.params, mask) + dt * c;
        EXPECT_LT((selected_values(s1.params, mask) - want).cwiseAbs().maxCoeff(), 1e-15) << to_string(integ);
        EXPECT_DOUBLE_EQ(s1.t, dt);
        EXPECT_EQ(s1.step, 1);
    }
}

TEST(Steppers, TimeDependentVelocityMatchesQuadratureOrder) {
    const auto a = small_arch(1, 1, {3}, InputMapKind::identity);
    const auto mask = ParamMask::full(a);
    auto s0 = make_state(a, mask, 5);
    s0.t = 0.3;
    const auto n = static_cast<Eigen::Index>(mask.count());
    const double dt = 0.2;
    const double t0 = s0.t;
    const double t1 = t0 + dt;
    // trapezoid integrates t exactly; Simpson integrates t^3 exactly
    const VelocityFn lin = [n](const TnnParams&, const ParamMask&, double t) {
        return Velocity{Eigen::VectorXd::Constant(n, t), {}, 0.0};
    };
    const VelocityFn cubic = [n](const TnnParams&, const ParamMask&, double t) {
        return Velocity{Eigen::VectorXd::Constant(n, t * t * t), {}, 0.0};
    };
    const Eigen::VectorXd base = selected_values(s0.params, mask);
    const auto me = step_modified_euler(s0, dt, lin);
    EXPECT_LT(((selected_values(me.params, mask) - base).array() - 0.5 * (t1 * t1 - t0 * t0)).abs().maxCoeff(),
              1e-15);
    const auto rk = step_rk4(s0, dt, cubic);
    const double quartic = 0.25 * (std::pow(t1, 4) - std::pow(t0, 4));
    EXPECT_LT(((selected_values(rk.params, mask) - base).array() - quartic).abs().maxCoeff(), 1e-15);
}

TEST(Steppers, LinearFixtureMatchesTaylorPolynomials) {
    const auto a = small_arch(2, 2, {4}, InputMapKind::periodic);
    const auto mask = every_other(a);
    const auto s0 = make_state(a, mask, 9);
    const double lambda = -1.7;
    const double dt = 0.05;
    const double z = lambda * dt;
    const Eigen::VectorXd x0 = selected_values(s0.params, mask);

    const auto me = step_modified_euler(s0, dt, linear_velocity(lambda));
    const double g_me = 1.0 + z + z * z / 2.0;
    EXPECT_LT((selected_values(me.params, mask) - g_me * x0).cwiseAbs().maxCoeff(), 1e-14);

    const auto rk = step_rk4(s0, dt, linear_velocity(lambda));
    const double g_rk = 1.0 + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0;
    EXPECT_LT((selected_values(rk.params, mask) - g_rk * x0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Steppers, LinearFixtureGlobalOrder) {
    const auto a = small_arch(1, 1, {2}, InputMapKind::identity);
    const auto mask = ParamMask::full(a);
    const auto s0 = make_state(a, mask, 1);
    const double lambda = -2.0;
    const double T = 1.0;
    const Eigen::VectorXd exact = std::exp(lambda * T) * selected_values(s0.params, mask);
    auto error = [&](Integrator integ, int steps) {
        auto s = s0;
        for (int i = 0; i < steps; ++i) s = step(integ, s, T / steps, linear_velocity(lambda));
        return (selected_values(s.params, mask) - exact).norm();
    };
    const double me = std::log2(error(Integrator::modified_euler, 40) / error(Integrator::modified_euler, 80));
    const double rk = std::log2(error(Integrator::rk4, 20) / error(Integrator::rk4, 40));
    EXPECT_NEAR(me, 2.0, 0.1);
    EXPECT_NEAR(rk, 4.0, 0.15);
}

TEST(Steppers, ZeroVelocityLeavesParametersUnchanged) {
    const auto a = small_arch(3, 2, {5}, InputMapKind::dirichlet);
    const auto mask = ParamMask::full(a);
    const auto s0 = make_state(a, mask, 2);
    const auto n = static_cast<Eigen::Index>(mask.count());
    const VelocityFn zero = [n](const TnnParams&, const ParamMask&, double) {
        return Velocity{Eigen::VectorXd::Zero(n), {}, 0.0};
    };
    for (auto integ : {Integrator::modified_euler, Integrator::rk4}) {
        EXPECT_EQ(step(integ, s0, 0.01, zero).params.theta, s0.params.theta);
    }
}

TEST(Steppers, FrozenParametersAreBitwiseUntouched) {
    const auto a = small_arch(2, 2, {6}, InputMapKind::periodic);
    const auto problem = PdeProblem::transport(2);
    const auto rules = tensor_rules(2, 6, 2, {-1.0, 1.0});
    PartitionStrategy strat{PartitionKind::random_per_step, 1.0 / 3.0, std::nullopt, 11, false};
    MaskSchedule schedule(strat, a);
    EvolutionState s = make_state(a, schedule.mask_for_step(0), 4);
    for (int k = 0; k < 3; ++k) {
        s.mask = schedule.mask_for_step(s.step);
        for (auto integ : {Integrator::modified_euler, Integrator::rk4}) {
            const auto next = step(integ, s, 0.01, problem_velocity(problem, rules));
            for (std::size_t i = 0; i < s.params.theta.size(); ++i) {
                if (!s.mask.selected[i]) {
                    EXPECT_EQ(next.params.theta[i], s.params.theta[i]) << "index " << i;
                }
            }
            bool moved = false;
            for (std::size_t i = 0; i < s.params.theta.size(); ++i) {
                moved = moved || (s.mask.selected[i] && next.params.theta[i] != s.params.theta[i]);
            }
            EXPECT_TRUE(moved);
        }
        s = step(Integrator::rk4, s, 0.01, problem_velocity(problem, rules));
    }
}

TEST(Steppers, FailurePreservesInputState) {
    const auto a = small_arch(2, 2, {4}, InputMapKind::periodic);
    const auto mask = ParamMask::full(a);
    const auto s0 = make_state(a, mask, 8);
    const auto copy = s0;
    int calls = 0;
    const VelocityFn failing = [&calls](const TnnParams& p, const ParamMask& m, double) -> Velocity {
        if (++calls == 2) throw NumericalFailure("second stage");
        return Velocity{Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m.count())), {}, 0.0 * p.theta[0]};
    };
    EXPECT_THROW(step_rk4(s0, 0.1, failing), NumericalFailure);
    EXPECT_EQ(s0.params, copy.params);
    EXPECT_EQ(s0.t, copy.t);

    const auto n = static_cast<Eigen::Index>(mask.count());
    const VelocityFn nan = [n](const TnnParams&, const ParamMask&, double) {
        return Velocity{Eigen::VectorXd::Constant(n, std::nan("")), {}, 0.0};
    };
    EXPECT_THROW(step_modified_euler(s0, 0.1, nan), NumericalFailure);
    EXPECT_EQ(s0.params, copy.params);
}

TEST(Steppers, RejectsBadStep) {
    const auto a = small_arch(1, 1, {2}, InputMapKind::identity);
    const auto s0 = make_state(a, ParamMask::full(a), 1);
    EXPECT_THROW(step_rk4(s0, 0.0, linear_velocity(1.0)), InvalidArgument);
    EXPECT_THROW(step_modified_euler(s0, -1.0, linear_velocity(1.0)), InvalidArgument);
    EXPECT_THROW(step_rk4(s0, INFINITY, linear_velocity(1.0)), InvalidArgument);
}

TEST(Steppers, RecordComesFromFirstStage) {
    const auto a = small_arch(2, 2, {4}, InputMapKind::periodic);
    const auto problem = PdeProblem::transport(2);
    const auto rules = tensor_rules(2, 6, 2, {-1.0, 1.0});
    const auto s0 = make_state(a, ParamMask::full(a), 6);
    StepRecord rec;
    step_rk4(s0, 0.01, problem, rules, kDefaultRcond, &rec);
    const auto v = gamma_rhs(s0.params, s0.mask, problem, rules, 0.0);
    EXPECT_EQ(rec.gamma_norm, v.gamma.norm());
    EXPECT_EQ(rec.residual, v.residual);
    EXPECT_EQ(rec.diagnostics.effective_rank, v.diagnostics.effective_rank);
}

TEST(Integrators, NamesRoundTrip) {
    for (auto i : {Integrator::modified_euler, Integrator::rk4}) EXPECT_EQ(integrator_from_string(to_string(i)), i);
    EXPECT_THROW(integrator_from_string("euler"), InvalidArgument);
}

TEST(Partition, NamesRoundTrip) {
    for (auto k : {PartitionKind::full, PartitionKind::fixed, PartitionKind::random_per_step,
                   PartitionKind::random_with_first_layer, PartitionKind::random_without_first_layer,
                   PartitionKind::random_without_bias}) {
        EXPECT_EQ(partition_kind_from_string(to_string(k)), k);
    }
    EXPECT_THROW(partition_kind_from_string("sometimes"), InvalidArgument);
}

TEST(Partition, RatioOneSelectsEverything) {
    const auto a = small_arch(3, 2, {5, 5}, InputMapKind::periodic);
    for (auto k : {PartitionKind::full, PartitionKind::fixed, PartitionKind::random_per_step}) {
        MaskSchedule s({k, 1.0, std::nullopt, 3, false}, a);
        EXPECT_EQ(s.mask_for_step(0), ParamMask::full(a)) << to_string(k);
        EXPECT_EQ(s.mask_for_step(1), ParamMask::full(a)) << to_string(k);
    }
}

TEST(Partition, CountPerSubnetwork) {
    const auto a = small_arch(4, 3, {30, 30}, InputMapKind::periodic);
    const ParamLayout layout(a);
    ASSERT_GT(layout.per_subnet(), 200u);
    for (auto k : {PartitionKind::fixed, PartitionKind::random_per_step, PartitionKind::random_with_first_layer,
                   PartitionKind::random_without_first_layer, PartitionKind::random_without_bias}) {
        std::mt19937_64 rng(5);
        const auto m = select_mask({k, 1.0, 200, 0, false}, a, rng);
        EXPECT_EQ(m.count(), 800u) << to_string(k);
        for (int d = 0; d < 4; ++d) EXPECT_EQ(m.counts_per_dim[d], 200) << to_string(k);
    }
}

TEST(Partition, RatioRoundsPerSubnetwork) {
    const auto a = small_arch(3, 2, {20, 20}, InputMapKind::periodic);
    const ParamLayout layout(a);
    std::mt19937_64 rng(1);
    const auto m = select_mask({PartitionKind::random_per_step, 1.0 / 3.0, std::nullopt, 0, false}, a, rng);
    const auto want = static_cast<int>(std::lround(layout.per_subnet() / 3.0));
    for (int d = 0; d < 3; ++d) EXPECT_EQ(m.counts_per_dim[d], want);
}

TEST(Partition, VariantExclusions) {
    const auto a = small_arch(3, 3, {30, 30}, InputMapKind::periodic);
    const ParamLayout layout(a);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed);
        const auto with = select_mask({PartitionKind::random_with_first_layer, 1.0, 300, 0, false}, a, rng);
        const auto without = select_mask({PartitionKind::random_without_first_layer, 1.0, 300, 0, false}, a, rng);
        const auto nobias = select_mask({PartitionKind::random_without_bias, 1.0, 300, 0, false}, a, rng);
        for (int k = 0; k < 3; ++k) {
            const auto off = layout.subnet_offset(k);
            for (std::size_t i = 0; i < layout.per_subnet(); ++i) {
                if (layout.is_first_layer(i)) {
                    EXPECT_TRUE(with.selected[off + i]);
                    EXPECT_FALSE(without.selected[off + i]);
                }
                if (layout.is_bias(i)) EXPECT_FALSE(nobias.selected[off + i]);
            }
        }
    }
}

TEST(Partition, InfeasibleCountsRejected) {
    const auto a = small_arch(2, 2, {4}, InputMapKind::periodic);
    const ParamLayout layout(a);
    const int n = static_cast<int>(layout.per_subnet());
    EXPECT_THROW(PartitionStrategy({PartitionKind::random_per_step, 1.0, n + 1, 0, false}).validate(a),
                 InvalidArgument);
    EXPECT_THROW(PartitionStrategy({PartitionKind::random_per_step, 0.0, std::nullopt, 0, false}).validate(a),
                 InvalidArgument);
    EXPECT_THROW(PartitionStrategy({PartitionKind::random_per_step, 1.5, std::nullopt, 0, false}).validate(a),
                 InvalidArgument);
    // first layer alone holds 3 * 4 = 12 entries
    EXPECT_THROW(PartitionStrategy({PartitionKind::random_with_first_layer, 1.0, 5, 0, false}).validate(a),
                 InvalidArgument);
    EXPECT_THROW(PartitionStrategy({PartitionKind::random_without_bias, 1.0, n, 0, false}).validate(a),
                 InvalidArgument);
}

TEST(Partition, FixedMaskNeverChanges) {
    const auto a = small_arch(3, 2, {10, 10}, InputMapKind::periodic);
    MaskSchedule s({PartitionKind::fixed, 1.0 / 3.0, std::nullopt, 21, false}, a);
    const auto first = s.mask_for_step(0);
    for (int k = 1; k < 10; ++k) EXPECT_EQ(s.mask_for_step(k), first);
}

TEST(Partition, RandomMaskRedrawsAndIsReproducible) {
    const auto a = small_arch(3, 2, {10, 10}, InputMapKind::periodic);
    const PartitionStrategy strat{PartitionKind::random_per_step, 1.0 / 3.0, std::nullopt, 21, false};
    MaskSchedule s1(strat, a);
    MaskSchedule s2(strat, a);
    std::vector<ParamMask> seq;
    for (int k = 0; k < 6; ++k) {
        seq.push_back(s1.mask_for_step(k));
        EXPECT_EQ(s2.mask_for_step(k), seq.back());
    }
    int changes = 0;
    for (int k = 1; k < 6; ++k) changes += seq[k] == seq[k - 1] ? 0 : 1;
    EXPECT_EQ(changes, 5);
    MaskSchedule other({PartitionKind::random_per_step, 1.0 / 3.0, std::nullopt, 22, false}, a);
    EXPECT_FALSE(other.mask_for_step(0) == seq[0]);
}

TEST(Partition, SelectionIsRoughlyUniform) {
    const auto a = small_arch(1, 2, {8}, InputMapKind::periodic);
    const ParamLayout layout(a);
    const auto n = layout.per_subnet();
    std::vector<int> hits(n, 0);
    std::mt19937_64 rng(0);
    const int draws = 4000;
    for (int r = 0; r < draws; ++r) {
        const auto m = select_mask({PartitionKind::random_per_step, 0.25, std::nullopt, 0, false}, a, rng);
        for (auto i : m.local[0]) ++hits[i];
    }
    const double p = static_cast<double>(std::lround(0.25 * static_cast<double>(n))) / static_cast<double>(n);
    const double sd = std::sqrt(draws * p * (1.0 - p));
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(hits[i], draws * p, 5.0 * sd) << "index " << i;
}

TEST(Partition, RedrawDependsOnlyOnSeedAndStep) {
    const auto a = small_arch(3, 2, {10, 10}, InputMapKind::periodic);
    PartitionStrategy st{PartitionKind::random_per_step, 0.5, std::nullopt, 9, false};
    MaskSchedule walked(st, a);
    for (int k = 0; k < 5; ++k) walked.mask_for_step(k);
    MaskSchedule jumped(st, a);
    EXPECT_EQ(jumped.mask_for_step(4), walked.mask_for_step(4));
    EXPECT_EQ(walked.mask_for_step(4), walked.mask_for_step(4));
}

TEST(Partition, DegenerateRedrawMatchesFixedBitwise) {
    const auto a = small_arch(2, 2, {8}, InputMapKind::periodic);
    const auto problem = PdeProblem::transport(2);
    const auto rules = tensor_rules(2, 6, 2, {-1.0, 1.0});
    MaskSchedule fixed({PartitionKind::fixed, 1.0 / 3.0, std::nullopt, 7, false}, a);
    MaskSchedule redraw({PartitionKind::random_per_step, 1.0 / 3.0, std::nullopt, 7, true}, a);
    const auto theta0 = init_network(a, 12);
    EvolutionState s1{theta0, 0.0, 0, fixed.mask_for_step(0)};
    EvolutionState s2{theta0, 0.0, 0, redraw.mask_for_step(0)};
    const auto v = problem_velocity(problem, rules);
    for (int k = 0; k < 4; ++k) {
        s1.mask = fixed.mask_for_step(s1.step);
        s2.mask = redraw.mask_for_step(s2.step);
        ASSERT_EQ(s1.mask, s2.mask);
        EXPECT_EQ(selected_locals(s1.mask, 0), selected_locals(s2.mask, 0));
        s1 = step_modified_euler(s1, 0.01, v);
        s2 = step_modified_euler(s2, 0.01, v);
        ASSERT_EQ(s1.params.theta, s2.params.theta);
    }
}
