#pragma once

// Independent reference computations: finite differences and brute-force
// loops over full tensor grids. Only usable for small d.

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "tenevo/param_jacobian.hpp"
#include "tenevo/pde_operators.hpp"
#include "tenevo/tnn.hpp"

namespace oracle {

using namespace tenevo;

inline TnnArchitecture small_arch(int dims, int rank, std::vector<int> hidden, InputMapKind kind,
                                  Interval iv = {-1.0, 1.0}) {
    TnnArchitecture a;
    a.dims = dims;
    a.rank = rank;
    a.hidden = std::move(hidden);
    a.input_map.kind = kind;
    a.input_map.b = kind == InputMapKind::periodic ? M_PI / (0.5 * iv.length()) : 1.0;
    a.domain.assign(static_cast<std::size_t>(dims), iv);
    return a;
}

/// Every multi-index of a tensor grid, dimension 0 fastest.
inline std::vector<std::vector<int>> grid_indices(const Rules& rules) {
    std::vector<std::vector<int>> out;
    std::vector<int> q(rules.size(), 0);
    while (true) {
        out.push_back(q);
        std::size_t i = 0;
        while (i < q.size() && ++q[i] == static_cast<int>(rules[i].size())) q[i++] = 0;
        if (i == q.size()) break;
    }
    return out;
}

inline double grid_weight(const Rules& rules, const std::vector<int>& q) {
    double w = 1.0;
    for (std::size_t i = 0; i < q.size(); ++i) w *= rules[i].weights[static_cast<std::size_t>(q[i])];
    return w;
}

/// Central difference of factor jets of sub-network `dim` in local parameter `local`.
inline std::vector<Eigen::MatrixXd> fd_factor_param(const TnnParams& params, int dim, std::size_t local,
                                                    const QuadratureRule1D& rule, int order, double h) {
    const ParamLayout layout(params.arch);
    TnnParams plus = params;
    TnnParams minus = params;
    plus.theta[layout.subnet_offset(dim) + local] += h;
    minus.theta[layout.subnet_offset(dim) + local] -= h;
    auto fp = eval_subnet(plus, dim, rule.nodes, order);
    const auto fm = eval_subnet(minus, dim, rule.nodes, order);
    for (int m = 0; m <= order; ++m) fp[m] = (fp[m] - fm[m]) / (2.0 * h);
    return fp;
}

/// d T[u] / dw at a grid point, assembled pointwise from the Jacobian table.
inline Eigen::VectorXd pointwise_tangent_gradient(const FactorTable& f, const JacobianTable& jac,
                                                  const TangentMap& tangent, const std::vector<int>& q) {
    const int d = f.dims();
    const int p = f.rank();
    Eigen::Index n = 0;
    for (int k = 0; k < d; ++k) n += jac.rows(k);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (const auto& term : tangent) {
        Eigen::Index off = 0;
        for (int k = 0; k < d; ++k) {
            const auto nq = static_cast<Eigen::Index>(f.rules[k].size());
            for (int j = 0; j < p; ++j) {
                double rest = term.coeff;
                for (int m = 0; m < d; ++m) {
                    if (m != k) rest *= f.at(m, j, q[m], term.orders[m]);
                }
                g.segment(off, jac.rows(k)) += rest * jac.at(k, term.orders[k]).col(j * nq + q[k]);
            }
            off += jac.rows(k);
        }
    }
    return g;
}

inline Eigen::MatrixXd brute_gram(const FactorTable& f, const JacobianTable& jac, const Rules& rules,
                                  const TangentMap& tangent) {
    Eigen::MatrixXd M;
    for (const auto& q : grid_indices(rules)) {
        const Eigen::VectorXd g = pointwise_tangent_gradient(f, jac, tangent, q);
        if (M.size() == 0) M = Eigen::MatrixXd::Zero(g.size(), g.size());
        M += grid_weight(rules, q) * g * g.transpose();
    }
    return M;
}

inline Eigen::VectorXd brute_rhs(const FactorTable& f, const JacobianTable& jac, const SeparableField& field,
                                 const Rules& rules, const TangentMap& tangent) {
    Eigen::VectorXd b;
    for (const auto& q : grid_indices(rules)) {
        const Eigen::VectorXd g = pointwise_tangent_gradient(f, jac, tangent, q);
        if (b.size() == 0) b = Eigen::VectorXd::Zero(g.size());
        b += grid_weight(rules, q) * field.at(q) * g;
    }
    return b;
}

/// Squared L2 distance between the network and a field by grid summation.
inline double brute_sq_error(const TnnParams& params, const SeparableField& ref, const Rules& rules) {
    double s = 0.0;
    std::vector<double> x(rules.size());
    for (const auto& q : grid_indices(rules)) {
        for (std::size_t i = 0; i < q.size(); ++i) x[i] = rules[i].nodes[static_cast<std::size_t>(q[i])];
        const double e = eval_point(params, x) - ref.at(q);
        s += grid_weight(rules, q) * e * e;
    }
    return s;
}

inline double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    return (a - b).cwiseAbs().maxCoeff() / std::max(scale, 1e-300);
}

} // namespace oracle
