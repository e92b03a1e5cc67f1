#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "tenevo/quadrature.hpp"
#include "tenevo/tnn.hpp"

namespace tenevo {

/// Rank-r sum of products of one-dimensional node vectors:
///   F(x_{q_1}, ..., x_{q_d}) = sum_s coeff[s] prod_i factors[i](q_i, s).
/// Sums concatenate terms, pointwise products multiply ranks.
struct SeparableField {
    std::vector<Eigen::MatrixXd> factors;  // factors[i] is (nodes_i x rank)
    Eigen::VectorXd coeff;

    int dims() const { return static_cast<int>(factors.size()); }
    int rank() const { return static_cast<int>(coeff.size()); }

    /// Value at the tensor-grid node with per-dimension indices q.
    double at(std::span<const int> q) const;

    SeparableField& operator+=(const SeparableField& other);
    SeparableField& operator*=(double s);

    /// All-zero field of rank 0 with the given node counts.
    static SeparableField zero(const Rules& rules);
    /// One rank-1 term.
    static SeparableField product(std::vector<Eigen::VectorXd> vectors, double coeff = 1.0);
    /// The rank-p field sum_j prod_i d^{orders[i]} u_{i,j}.
    static SeparableField from_factors(const FactorTable& table, std::span<const int> orders);
    static SeparableField from_factors(const FactorTable& table);

    /// Merges terms whose factor vectors are bitwise identical, summing their
    /// coefficients. Exact cancellations then survive norm evaluation.
    SeparableField merged() const;
};

SeparableField operator+(SeparableField a, const SeparableField& b);
SeparableField operator-(SeparableField a, const SeparableField& b);
SeparableField operator*(SeparableField a, double s);
/// Pointwise product; rank multiplies.
SeparableField operator*(const SeparableField& a, const SeparableField& b);

/// Per-dimension overlap matrices a_i^T W_i b_i, (rank_a x rank_b).
std::vector<Eigen::MatrixXd> overlaps(const SeparableField& a, const SeparableField& b, const Rules& rules);

/// Integral of the product of two fields over the tensor domain.
double inner(const SeparableField& a, const SeparableField& b, const Rules& rules);

} // namespace tenevo
