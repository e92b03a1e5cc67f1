#include "tenevo/param_jacobian.hpp"

#include "subnet.hpp"
#include "tenevo/errors.hpp"
#include "tenevo/parallel.hpp"

namespace tenevo {

JacobianTable factor_param_jacobian(const TnnParams& params, const ParamMask& mask, const Rules& rules,
                                    int x_order) {
    if (x_order < 0 || x_order > detail::kMaxReverseOrder) {
        throw UnsupportedOrder("factor_param_jacobian: x-order " + std::to_string(x_order) + " not supported");
    }
    const auto& arch = params.arch;
    if (mask.selected.size() != params.theta.size() || mask.local.size() != static_cast<std::size_t>(arch.dims)) {
        throw InvalidArgument("factor_param_jacobian: mask does not match parameters");
    }
    if (mask.count() == 0) {
        throw InvalidArgument("factor_param_jacobian: empty mask");
    }
    if (rules.size() != static_cast<std::size_t>(arch.dims)) {
        throw InvalidArgument("factor_param_jacobian: one rule per dimension required");
    }

    const ParamLayout layout(arch);
    const int p = arch.rank;
    JacobianTable table;
    table.max_order = x_order;
    table.rank = p;
    table.entries.resize(rules.size());

    parallel_for(rules.size(), [&](std::size_t k) {
        const auto& locals = mask.local[k];
        const auto nq = static_cast<Eigen::Index>(rules[k].size());
        auto& out = table.entries[k];
        out.assign(x_order + 1, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(locals.size()), p * nq));
        if (locals.empty()) {
            return;
        }
        const double* theta = params.theta.data() + layout.subnet_offset(static_cast<int>(k));
        const auto trace =
            detail::forward(arch, layout, theta, rules[k].nodes, static_cast<int>(k), x_order, x_order);
        detail::Jet seed(x_order + 1, Eigen::MatrixXd::Zero(nq, p));
        for (int m = 0; m <= x_order; ++m) {
            for (int j = 0; j < p; ++j) {
                seed[m].col(j).setOnes();
                const auto adj = detail::backward(layout, theta, trace, seed, m);
                detail::per_node_gradient(layout, trace, adj, locals, out[m].middleCols(j * nq, nq));
                seed[m].col(j).setZero();
            }
        }
    });
    return table;
}

} // namespace tenevo
