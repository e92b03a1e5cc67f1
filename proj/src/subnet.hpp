#pragma once

// Taylor-mode forward evaluation of one sub-network and the matching reverse
// sweep. A jet holds the value and x-derivatives of a layer for a batch of
// nodes: jet[m] is a (nodes x width) matrix of d^m/dx^m.

#include <span>
#include <vector>

#include <Eigen/Core>

#include "tenevo/tnn.hpp"

namespace tenevo::detail {

using Jet = std::vector<Eigen::MatrixXd>;

/// Highest x-order the reverse sweep differentiates through.
inline constexpr int kMaxReverseOrder = 2;

struct SubnetTrace {
    int order{0};
    std::vector<Jet> z;                           // z[0] input features, z[l] hidden layer l
    std::vector<Jet> a;                           // a[l-1] pre-activation of hidden layer l
    std::vector<std::vector<Eigen::ArrayXXd>> f;  // f[l-1][k]: k-th activation derivative at a[l-1][0]
    Jet net;                                      // linear output layer, before the envelope
    std::vector<Eigen::VectorXd> envelope;        // g^(m)(x); empty unless dirichlet
};

SubnetTrace forward(const TnnArchitecture& arch, const ParamLayout& layout, const double* theta,
                    std::span<const double> x, int dim, int order, int reverse_order = 0);

/// Factor jets (nodes x rank) with the boundary envelope applied.
Jet factors(const SubnetTrace& trace);

struct SubnetAdjoint {
    int order{0};
    std::vector<Jet> a_bar;  // per hidden layer
    Jet net_bar;             // adjoint of the raw output
};

/// Pulls back an adjoint on the factor jets (orders 0..order, each
/// nodes x rank) to every layer. Columns (nodes) never mix.
SubnetAdjoint backward(const ParamLayout& layout, const double* theta, const SubnetTrace& trace,
                       const Jet& factor_bar, int order);

/// Adds the node-summed parameter gradient to grad (length per_subnet).
void accumulate_gradient(const ParamLayout& layout, const SubnetTrace& trace, const SubnetAdjoint& adj,
                         double* grad);

/// Per-node gradient rows for the listed local parameter indices.
/// out is (locals.size() x nodes).
void per_node_gradient(const ParamLayout& layout, const SubnetTrace& trace, const SubnetAdjoint& adj,
                       std::span<const std::size_t> locals, Eigen::Ref<Eigen::MatrixXd> out);

} // namespace tenevo::detail
