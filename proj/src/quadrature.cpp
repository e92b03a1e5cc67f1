#include "tenevo/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tenevo/errors.hpp"

namespace tenevo {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre_with_derivative(int n, double x) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
    }
    const double dp = n * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
}

} // namespace

QuadratureRule1D gauss_legendre(int n) {
    if (n < 1) {
        throw InvalidArgument("gauss_legendre: n must be positive, got " + std::to_string(n));
    }
    QuadratureRule1D rule;
    rule.interval = {-1.0, 1.0};
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    if (n == 1) {
        rule.weights[0] = 2.0;
        return rule;
    }

    // Roots are symmetric; solve for the positive half and mirror.
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            auto [p, d] = legendre_with_derivative(n, x);
            dp = d;
            const double dx = p / d;
            x -= dx;
            if (std::abs(dx) <= 1e-15) {
                break;
            }
        }
        dp = legendre_with_derivative(n, x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[n - 1 - i] = x;
        rule.nodes[i] = -x;
        rule.weights[n - 1 - i] = w;
        rule.weights[i] = w;
    }
    if (n % 2 == 1) {
        rule.nodes[n / 2] = 0.0;
    }
    return rule;
}

QuadratureRule1D composite_rule(const QuadratureRule1D& base, int panels, Interval interval) {
    if (panels < 1) {
        throw InvalidArgument("composite_rule: panels must be positive");
    }
    if (!(interval.lo < interval.hi)) {
        throw InvalidArgument("composite_rule: interval requires lo < hi");
    }
    if (base.nodes.size() != base.weights.size() || base.nodes.empty()) {
        throw InvalidArgument("composite_rule: malformed base rule");
    }

    const double base_center = 0.5 * (base.interval.lo + base.interval.hi);
    const double base_half = 0.5 * (base.interval.hi - base.interval.lo);
    const double h = interval.length() / panels;

    QuadratureRule1D out;
    out.interval = interval;
    out.nodes.reserve(base.size() * panels);
    out.weights.reserve(base.size() * panels);
    for (int p = 0; p < panels; ++p) {
        const double a = p == 0 ? interval.lo : interval.lo + h * p;
        const double b = p == panels - 1 ? interval.hi : interval.lo + h * (p + 1);
        const double center = 0.5 * (a + b);
        const double scale = (0.5 * (b - a)) / base_half;
        for (std::size_t q = 0; q < base.size(); ++q) {
            out.nodes.push_back(center + (base.nodes[q] - base_center) * scale);
            out.weights.push_back(base.weights[q] * scale);
        }
    }
    return out;
}

double integrate_1d(std::span<const double> values, const QuadratureRule1D& rule) {
    if (values.size() != rule.weights.size()) {
        throw InvalidArgument("integrate_1d: " + std::to_string(values.size()) +
                              " values for a rule of " + std::to_string(rule.weights.size()) +
                              " nodes");
    }
    double sum = 0.0;
    for (std::size_t q = 0; q < values.size(); ++q) {
        sum += rule.weights[q] * values[q];
    }
    return sum;
}

Rules tensor_rules(int dims, int points, int panels, Interval interval) {
    const QuadratureRule1D rule = composite_rule(gauss_legendre(points), panels, interval);
    return Rules(static_cast<std::size_t>(dims), rule);
}

} // namespace tenevo
