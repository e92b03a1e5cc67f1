#pragma once

#include <vector>

#include <Eigen/Core>

#include "tenevo/tnn.hpp"

namespace tenevo {

/// Derivatives of factor x-derivatives with respect to the masked
/// parameters of their own sub-network. A parameter of sub-network k has no
/// entry in any other dimension.
///
/// entries[k][m] is (mask.counts_per_dim[k] x rank*nodes); column j*nodes + q
/// holds d/dw (d^m u_{k,j} / dx^m) at node q of rule k.
struct JacobianTable {
    int max_order{0};
    int rank{0};
    std::vector<std::vector<Eigen::MatrixXd>> entries;

    const Eigen::MatrixXd& at(int k, int m) const { return entries[k][m]; }
    int dims() const { return static_cast<int>(entries.size()); }
    Eigen::Index rows(int k) const { return entries[k][0].rows(); }
};

/// Orders 0..x_order are all provided. x_order must be 0, 1 or 2.
JacobianTable factor_param_jacobian(const TnnParams& params, const ParamMask& mask, const Rules& rules,
                                    int x_order);

} // namespace tenevo
