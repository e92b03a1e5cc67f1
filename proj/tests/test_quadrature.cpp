#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "tenevo/errors.hpp"
#include "tenevo/quadrature.hpp"

using namespace tenevo;

namespace {

double monomial_integral(int k) { return k % 2 == 1 ? 0.0 : 2.0 / (k + 1); }

std::vector<double> sample(const QuadratureRule1D& r, double (*f)(double)) {
    std::vector<double> v;
    for (double x : r.nodes) v.push_back(f(x));
    return v;
}

} // namespace

TEST(GaussLegendre, ClosedForms) {
    const auto r1 = gauss_legendre(1);
    ASSERT_EQ(r1.size(), 1u);
    EXPECT_EQ(r1.nodes[0], 0.0);
    EXPECT_EQ(r1.weights[0], 2.0);

    const auto r2 = gauss_legendre(2);
    EXPECT_NEAR(r2.nodes[0], -1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(r2.nodes[1], 1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(r2.weights[0], 1.0, 1e-15);
    EXPECT_NEAR(r2.weights[1], 1.0, 1e-15);
}

TEST(GaussLegendre, OddMonomialVanishes) {
    const auto r = gauss_legendre(8);
    EXPECT_NEAR(integrate_1d(sample(r, [](double x) { return std::pow(x, 15); }), r), 0.0, 1e-14);
}

TEST(GaussLegendre, RejectsZeroPoints) { EXPECT_THROW(gauss_legendre(0), InvalidArgument); }

TEST(GaussLegendre, ExactThroughDegree2nMinus1) {
    for (int n = 1; n <= 32; ++n) {
        const auto r = gauss_legendre(n);
        for (int k = 0; k <= 2 * n - 1; ++k) {
            double s = 0.0;
            for (std::size_t q = 0; q < r.size(); ++q) s += r.weights[q] * std::pow(r.nodes[q], k);
            EXPECT_NEAR(s, monomial_integral(k), 1e-13) << "n=" << n << " k=" << k;
        }
    }
}

TEST(GaussLegendre, StrictlyIncreasingPositiveWeights) {
    for (int n = 1; n <= 40; ++n) {
        const auto r = gauss_legendre(n);
        for (std::size_t q = 0; q < r.size(); ++q) {
            EXPECT_GT(r.weights[q], 0.0);
            EXPECT_GT(r.nodes[q], -1.0);
            EXPECT_LT(r.nodes[q], 1.0);
            if (q > 0) EXPECT_LT(r.nodes[q - 1], r.nodes[q]);
        }
        const double sum = std::accumulate(r.weights.begin(), r.weights.end(), 0.0);
        EXPECT_NEAR(sum, 2.0, 2e-12);
    }
}

TEST(CompositeRule, SinglePanelOnReferenceIsIdentity) {
    const auto base = gauss_legendre(2);
    EXPECT_EQ(composite_rule(base, 1, {-1.0, 1.0}), base);
    const auto base8 = gauss_legendre(8);
    EXPECT_EQ(composite_rule(base8, 1, {-1.0, 1.0}), base8);
}

TEST(CompositeRule, SinglePanelMatchesAffineMap) {
    const auto base = gauss_legendre(5);
    const Interval iv{0.5, 3.0};
    const auto r = composite_rule(base, 1, iv);
    const double c = 0.5 * (iv.lo + iv.hi);
    const double s = 0.5 * iv.length();
    for (std::size_t q = 0; q < base.size(); ++q) {
        EXPECT_EQ(r.nodes[q], c + base.nodes[q] * s);
        EXPECT_EQ(r.weights[q], base.weights[q] * s);
    }
}

TEST(CompositeRule, WeightSumAndSize) {
    const auto r = composite_rule(gauss_legendre(2), 2, {0.0, 2.0});
    EXPECT_EQ(r.size(), 4u);
    EXPECT_NEAR(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 2.0, 1e-14);
    for (std::size_t q = 1; q < r.size(); ++q) EXPECT_LT(r.nodes[q - 1], r.nodes[q]);
}

TEST(CompositeRule, ResolvesSineSquared) {
    const auto r = composite_rule(gauss_legendre(8), 10, {-1.0, 1.0});
    EXPECT_NEAR(integrate_1d(sample(r, [](double x) { return std::pow(std::sin(M_PI * x), 2); }), r), 1.0, 1e-12);
    EXPECT_NEAR(integrate_1d(sample(r, [](double x) { return std::cos(M_PI * x); }), r), 0.0, 1e-12);
}

TEST(CompositeRule, RejectsBadInput) {
    EXPECT_THROW(composite_rule(gauss_legendre(2), 1, {1.0, 1.0}), InvalidArgument);
    EXPECT_THROW(composite_rule(gauss_legendre(2), 1, {2.0, 1.0}), InvalidArgument);
    EXPECT_THROW(composite_rule(gauss_legendre(2), 0, {-1.0, 1.0}), InvalidArgument);
}

TEST(Integrate1d, Basics) {
    const auto r = composite_rule(gauss_legendre(6), 3, {-2.0, 5.0});
    EXPECT_EQ(integrate_1d(std::vector<double>(r.size(), 0.0), r), 0.0);
    EXPECT_NEAR(integrate_1d(std::vector<double>(r.size(), 1.0), r), 7.0, 1e-12);
    EXPECT_THROW(integrate_1d(std::vector<double>(r.size() + 1, 1.0), r), InvalidArgument);
}
