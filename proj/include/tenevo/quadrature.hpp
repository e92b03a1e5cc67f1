#pragma once

#include <span>
#include <vector>

namespace tenevo {

struct Interval {
    double lo{-1.0};
    double hi{1.0};

    double length() const { return hi - lo; }
    bool operator==(const Interval&) const = default;
};

/// One-dimensional quadrature rule: strictly increasing nodes inside the
/// interval with strictly positive weights summing to its length.
struct QuadratureRule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
    Interval interval;

    std::size_t size() const { return nodes.size(); }
    bool operator==(const QuadratureRule1D&) const = default;
};

using Rules = std::vector<QuadratureRule1D>;

/// n-point Gauss-Legendre rule on [-1, 1], exact through degree 2n-1.
/// Nodes come from Newton iteration on P_n; no table limit on n.
QuadratureRule1D gauss_legendre(int n);

/// Maps `base` onto each of `panels` equal subintervals of `interval` and
/// concatenates them.
QuadratureRule1D composite_rule(const QuadratureRule1D& base, int panels, Interval interval);

/// Sum of weights[q] * values[q].
double integrate_1d(std::span<const double> values, const QuadratureRule1D& rule);

/// The same composite Gauss-Legendre rule in every dimension.
Rules tensor_rules(int dims, int points, int panels, Interval interval);

} // namespace tenevo
