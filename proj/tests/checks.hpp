#pragma once

// Oracle comparisons shared by the acceptance binary and `tenevo verify`.
// Each check reports the worst measured discrepancy against a fixed bound.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tenevo/galerkin.hpp"
#include "tenevo/init_fit.hpp"

namespace checks {

using namespace tenevo;

struct Outcome {
    std::string name;
    double value{0.0};
    double tolerance{0.0};
    bool pass{false};
    std::string detail;
};

inline Outcome finish(std::string name, double worst, double tol, std::string detail = {}) {
    return {std::move(name), worst, tol, std::isfinite(worst) && worst <= tol, std::move(detail)};
}

/// Largest |sum w x^k - integral| over degrees 0..2n-1 on [-1, 1].
inline Outcome quadrature_exactness(const std::vector<int>& ns, double tol = 1e-13) {
    double worst = 0.0;
    for (int n : ns) {
        const auto r = gauss_legendre(n);
        for (int k = 0; k <= 2 * n - 1; ++k) {
            double s = 0.0;
            for (std::size_t q = 0; q < r.size(); ++q) s += r.weights[q] * std::pow(r.nodes[q], k);
            const double exact = k % 2 == 1 ? 0.0 : 2.0 / (k + 1);
            worst = std::max(worst, std::abs(s - exact));
        }
    }
    return finish("quadrature exactness", worst, tol);
}

/// Value Jacobian of the factors against central differences: for each of
/// `count` random parameters, |J - fd|_inf / |fd|_inf over all nodes and ranks.
inline Outcome jacobian_vs_fd(const TnnArchitecture& arch, int seeds = 5, int count = 20, double tol = 1e-6,
                              double h = 1e-5) {
    const ParamLayout layout(arch);
    double worst = 0.0;
    for (int s = 0; s < seeds; ++s) {
        const auto params = init_network(arch, 1000 + static_cast<std::uint64_t>(s));
        const auto rules = tensor_rules(arch.dims, 6, 2, arch.domain[0]);
        std::mt19937_64 rng(static_cast<std::uint64_t>(s));
        std::uniform_int_distribution<std::size_t> pick(0, layout.total() - 1);
        std::vector<std::uint8_t> sel(layout.total(), 0);
        for (int k = 0; k < count; ++k) sel[pick(rng)] = 1;
        const auto mask = ParamMask::from_selection(arch, sel);
        const auto jac = factor_param_jacobian(params, mask, rules, 0);
        for (int k = 0; k < arch.dims; ++k) {
            const auto nq = static_cast<Eigen::Index>(rules[k].size());
            for (std::size_t r = 0; r < mask.local[k].size(); ++r) {
                const auto fd = oracle::fd_factor_param(params, k, mask.local[k][r], rules[k], 0, h);
                double diff = 0.0;
                for (int j = 0; j < arch.rank; ++j) {
                    for (Eigen::Index q = 0; q < nq; ++q) {
                        diff = std::max(diff, std::abs(jac.at(k, 0)(static_cast<Eigen::Index>(r), j * nq + q) -
                                                       fd[0](q, j)));
                    }
                }
                worst = std::max(worst, diff / std::max(fd[0].cwiseAbs().maxCoeff(), 1e-300));
            }
        }
    }
    return finish("parameter jacobian vs central differences", worst, tol);
}

/// Initial-fit loss gradient against central differences of the loss.
inline Outcome fit_gradient_vs_fd(const TnnArchitecture& arch, const PdeProblem& problem, const Rules& rules,
                                  int seeds = 5, int count = 20, double tol = 1e-5, double h = 1e-5) {
    const auto u0 = analytic_solution(problem, rules, 0.0);
    double worst = 0.0;
    for (int s = 0; s < seeds; ++s) {
        const auto p = init_network(arch, 100 + static_cast<std::uint64_t>(s));
        const auto g = fit_gradient(p, u0, rules);
        std::mt19937_64 rng(static_cast<std::uint64_t>(s));
        std::uniform_int_distribution<std::size_t> pick(0, p.theta.size() - 1);
        for (int k = 0; k < count; ++k) {
            const auto i = pick(rng);
            auto plus = p;
            auto minus = p;
            plus.theta[i] += h;
            minus.theta[i] -= h;
            const double fd = (fit_loss(plus, u0, rules) - fit_loss(minus, u0, rules)) / (2.0 * h);
            worst = std::max(worst, std::abs(g[i] - fd) / std::max({std::abs(fd), std::abs(g[i]), 1e-6}));
        }
    }
    return finish("fit gradient vs central differences", worst, tol);
}

/// Factorized Gram matrix and right-hand side against full tensor-grid
/// summation, entrywise relative. `arch` must be small enough for a grid loop.
inline Outcome assembly_vs_brute(const TnnArchitecture& arch, const PdeProblem& problem, int mask_size = 12,
                                 int seeds = 5, double tol = 1e-10) {
    const auto tangent = problem.tangent();
    const ParamLayout layout(arch);
    double worst = 0.0;
    auto rel = [](const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
        const double floor = 1e-12 * want.cwiseAbs().maxCoeff();
        double w = 0.0;
        for (Eigen::Index i = 0; i < got.rows(); ++i) {
            for (Eigen::Index j = 0; j < got.cols(); ++j) {
                w = std::max(w, std::abs(got(i, j) - want(i, j)) / std::max({std::abs(want(i, j)), floor, 1e-300}));
            }
        }
        return w;
    };
    for (int s = 0; s < seeds; ++s) {
        const auto params = init_network(arch, static_cast<std::uint64_t>(s));
        const auto rules = tensor_rules(arch.dims, 6, 2, arch.domain[0]);
        std::vector<std::size_t> idx(layout.total());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::mt19937_64 rng(static_cast<std::uint64_t>(s) + 10);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<std::uint8_t> sel(layout.total(), 0);
        for (int i = 0; i < mask_size; ++i) sel[idx[static_cast<std::size_t>(i)]] = 1;
        const auto mask = ParamMask::from_selection(arch, sel);
        const auto f = eval_factors(params, rules, problem.operator_order());
        const auto jac = factor_param_jacobian(params, mask, rules, problem.jacobian_order());
        const auto field = apply_operator(problem, f, 0.0);
        worst = std::max(worst, rel(assemble_gram(f, jac, rules, tangent), oracle::brute_gram(f, jac, rules, tangent)));
        worst = std::max(worst, rel(assemble_rhs(f, jac, field, rules, tangent),
                                    oracle::brute_rhs(f, jac, field, rules, tangent)));
    }
    return finish("factorized assembly vs tensor-grid oracle", worst, tol);
}

/// Boundary behaviour of random networks: equal values at opposite faces for
/// the periodic map, zero on the faces for the Dirichlet envelope.
inline Outcome boundary_property(const TnnArchitecture& arch, int samples = 50, double tol = 1e-12) {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    const auto params = init_network(arch, 3);
    for (int s = 0; s < samples; ++s) {
        std::vector<double> x(static_cast<std::size_t>(arch.dims));
        for (int i = 0; i < arch.dims; ++i) {
            std::uniform_real_distribution<double> u(arch.domain[i].lo, arch.domain[i].hi);
            x[i] = u(rng);
        }
        const int k = s % arch.dims;
        auto lo = x;
        auto hi = x;
        lo[k] = arch.domain[k].lo;
        hi[k] = arch.domain[k].hi;
        const double scale = std::max(std::abs(eval_point(params, x)), 1e-3);
        if (arch.input_map.kind == InputMapKind::periodic) {
            worst = std::max(worst, std::abs(eval_point(params, lo) - eval_point(params, hi)) / scale);
        } else if (arch.input_map.kind == InputMapKind::dirichlet) {
            worst = std::max({worst, std::abs(eval_point(params, lo)) / scale, std::abs(eval_point(params, hi)) / scale});
        }
    }
    return finish("boundary condition of the ansatz", worst, tol);
}

/// u_t + c sum_i d^3u/dx_i^3 - f for the closed-form KdV-type solution at
/// random tensor nodes. u_t comes from a five-point time stencil and the third
/// derivatives are sampled by hand, both independent of the source term.
inline Outcome kdv_source_identity(int dims, int samples = 100, double tol = 1e-10) {
    const double pi = M_PI;
    const double t = 0.3;
    const double h = 5e-3;
    const auto problem = PdeProblem::kdv(dims, default_kdv_speed());
    const auto rules = tensor_rules(dims, 8, 4, {-1.0, 1.0});
    auto at_time = [&](double s) { return analytic_solution(problem, rules, s); };
    const SeparableField ut = (at_time(t - 2 * h) - at_time(t + 2 * h) + (at_time(t + h) - at_time(t - h)) * 8.0) *
                              (1.0 / (12.0 * h));
    SeparableField third = SeparableField::zero(rules);
    for (int i = 0; i < dims; ++i) {
        std::vector<Eigen::VectorXd> v;
        for (int m = 0; m < dims; ++m) {
            Eigen::VectorXd col(static_cast<Eigen::Index>(rules[m].size()));
            for (std::size_t q = 0; q < rules[m].size(); ++q) {
                const double x = rules[m].nodes[q];
                col[static_cast<Eigen::Index>(q)] = m == i ? -pi * pi * pi * std::cos(pi * x) : std::sin(pi * x);
            }
            v.push_back(col);
        }
        third += SeparableField::product(std::move(v), std::exp(-t));
    }
    const SeparableField residual = ut + third * problem.speed - source_field(problem, rules, t);
    std::mt19937_64 rng(static_cast<std::uint64_t>(dims));
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        std::vector<int> q(static_cast<std::size_t>(dims));
        for (int i = 0; i < dims; ++i) {
            std::uniform_int_distribution<int> pick(0, static_cast<int>(rules[i].size()) - 1);
            q[i] = pick(rng);
        }
        worst = std::max(worst, std::abs(residual.at(q)));
    }
    return finish("kdv source identity d=" + std::to_string(dims), worst, tol);
}

} // namespace checks
