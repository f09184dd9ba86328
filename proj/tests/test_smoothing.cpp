#include "flowlab/quadrature.hpp"
#include "flowlab/random.hpp"
#include "flowlab/smoothing.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace flowlab;

namespace {

Matrix e(int n, int i, int j) { return matrix_unit(n, i, j); }

const FlowHandle kPhaseFlow = FlowHandle::inner(kI * matrix_unit(2, 0, 0));
const FlowHandle kIdentity2 = FlowHandle::inner(Matrix::Zero(2, 2));

}  // namespace

TEST(Quadrature, GaussLegendreIntegratesPolynomialsExactly) {
    const quad::Rule r = quad::gauss_legendre(10);
    double odd = 0.0, even = 0.0;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) {
        odd += r.weights[k] * std::pow(r.nodes[k], 19);
        even += r.weights[k] * std::pow(r.nodes[k], 18);
    }
    EXPECT_NEAR(odd, 0.0, 1e-14);
    EXPECT_NEAR(even, 2.0 / 19.0, 1e-14);
}

TEST(Quadrature, GaussHermiteMoments) {
    const quad::Rule r = quad::gauss_hermite(64);
    double m0 = 0.0, m2 = 0.0, m4 = 0.0;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) {
        const double x = r.nodes[k];
        m0 += r.weights[k];
        m2 += r.weights[k] * x * x;
        m4 += r.weights[k] * x * x * x * x;
    }
    const double root_pi = std::sqrt(std::numbers::pi);
    EXPECT_NEAR(m0, root_pi, 1e-13);
    EXPECT_NEAR(m2, root_pi / 2.0, 1e-13);
    EXPECT_NEAR(m4, 3.0 * root_pi / 4.0, 1e-12);
}

TEST(Quadrature, GaussHermiteLargeRuleStaysAccurate) {
    const quad::Rule r = quad::gauss_hermite(512);
    double m0 = 0.0, cos_moment = 0.0;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) {
        m0 += r.weights[k];
        cos_moment += r.weights[k] * std::cos(r.nodes[k]);
    }
    EXPECT_NEAR(m0, std::sqrt(std::numbers::pi), 1e-12);
    EXPECT_NEAR(cos_moment, std::sqrt(std::numbers::pi) * std::exp(-0.25), 1e-12);
}

TEST(Quadrature, AdaptiveIntegrate) {
    EXPECT_NEAR(quad::adaptive_integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi), 2.0, 1e-13);
}

TEST(WeightIntegral, StandardGaussian) {
    EXPECT_NEAR(gaussian_weight_integral(1.0, 0.0), std::sqrt(std::numbers::pi), 1e-15);
    EXPECT_NEAR(gaussian_weight_integral(1.0, 0.0), 1.7724539, 1e-7);
}

TEST(WeightIntegral, CompletedSquareValueAtFourTwo) {
    const double value = gaussian_weight_integral(4.0, 2.0);
    EXPECT_NEAR(value, std::exp(0.25) * std::sqrt(std::numbers::pi / 4.0), 1e-15);
    EXPECT_NEAR(value, 1.1379379, 1e-7);
    // the quadrature oracle separates the two candidate exponents
    const double oracle = gaussian_weight_integral_quadrature(4.0, 2.0);
    EXPECT_NEAR(oracle, value, 1e-12 * value);
    EXPECT_GT(std::abs(oracle - gaussian_weight_integral_squared_n(4.0, 2.0)), 0.1);
    EXPECT_NEAR(gaussian_weight_integral_squared_n(4.0, 2.0), 0.9434, 1e-4);
}

TEST(WeightIntegral, EvenInXi) {
    EXPECT_EQ(gaussian_weight_integral(3.0, 1.7), gaussian_weight_integral(3.0, -1.7));
}

TEST(WeightIntegral, RejectsNonPositiveN) { EXPECT_THROW(gaussian_weight_integral(0.0, 1.0), Error); }

TEST(AnalyticSmooth, IdentityFlowXiZeroIsExact) {
    Rng rng(1);
    const Matrix a = random_matrix(rng, 2);
    for (double n : {0.5, 3.0, 250.0}) EXPECT_LT((analytic_smooth(kIdentity2, a, n, 0.0).smoothed - a).norm(), 1e-13 * a.norm());
}

TEST(AnalyticSmooth, IdentityFlowXiTwoScalesByWeight) {
    const Matrix a = e(2, 0, 1) + e(2, 1, 1);
    const SmoothingResult r = analytic_smooth(kIdentity2, a, 4.0, 2.0);
    EXPECT_LT((r.smoothed - std::exp(0.25) * a).norm(), 1e-13);
    EXPECT_NEAR(r.smoothed(0, 1).real(), 1.2840, 1e-4);
    EXPECT_NEAR(r.weight_integral * std::sqrt(4.0 / std::numbers::pi), std::exp(0.25), 1e-14);
}

TEST(AnalyticSmooth, PhaseFlowFourierFactor) {
    for (double n : {1.0, 10.0, 100.0}) {
        const SmoothingResult r = analytic_smooth(kPhaseFlow, e(2, 0, 1), n, 0.0);
        EXPECT_LT((r.smoothed - std::exp(-1.0 / (4.0 * n)) * e(2, 0, 1)).norm(), 1e-13);
        EXPECT_GE(r.quad_error_estimate, 0.0);
        EXPECT_GT(r.weight_integral, 0.0);
    }
}

TEST(AnalyticSmooth, GrowthAlarm) {
    try {
        (void)analytic_smooth(kPhaseFlow, e(2, 0, 1), 4.0, 3.0);
        FAIL() << "expected growth alarm";
    } catch (const Error& err) {
        EXPECT_EQ(err.kind(), ErrorKind::GrowthAlarm);
    }
}

TEST(AnalyticSmooth, Linearity) {
    Rng rng(2);
    const FlowHandle flow = FlowHandle::inner(random_base_generator(rng, 3));
    const Matrix a = random_matrix(rng, 3), b = random_matrix(rng, 3);
    const Matrix lhs = analytic_smooth(flow, a + b, 7.0, 0.5).smoothed;
    const Matrix rhs = analytic_smooth(flow, a, 7.0, 0.5).smoothed + analytic_smooth(flow, b, 7.0, 0.5).smoothed;
    EXPECT_LT((lhs - rhs).norm(), 1e-10 * (a.norm() + b.norm()));
}

TEST(ConvergenceProfile, PhaseFlowClosedForm) {
    const auto rows = smoothing_convergence_profile(kPhaseFlow, e(2, 0, 1), {1, 10, 100, 1000}, 0.0);
    ASSERT_EQ(rows.size(), 4u);
    const double expected[] = {0.2212, 0.02469, 0.002497, 0.0002500};
    const double ns[] = {1, 10, 100, 1000};
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(rows[k].n, ns[k]);
        EXPECT_NEAR(rows[k].diff_frobenius, 1.0 - std::exp(-1.0 / (4.0 * ns[k])), 1e-13);
        // four significant digits
        EXPECT_NEAR(rows[k].diff_frobenius / expected[k], 1.0, 5e-4) << "n = " << ns[k];
    }
}

TEST(ConvergenceProfile, IdentityFlowAllZero) {
    for (const auto& row : smoothing_convergence_profile(kIdentity2, e(2, 0, 1), {1, 5, 25}, 0.0))
        EXPECT_LT(row.diff_frobenius, 1e-13);
}

TEST(ConvergenceProfile, RequiresIncreasingN) {
    EXPECT_THROW(smoothing_convergence_profile(kIdentity2, e(2, 0, 1), {10, 1}, 0.0), Error);
}

TEST(Analyticity, IdentityFlowRealArgument) {
    const Matrix a = e(2, 0, 1);
    const SmoothingResult r = analytic_smooth(kIdentity2, a, 3.0, 0.0);
    EXPECT_LT(analyticity_check(kIdentity2, r, a, Complex(0.8, 0.0)), 1e-12);
}

TEST(Analyticity, PhaseFlowAtHalf) {
    const Matrix a = e(2, 0, 1);
    const SmoothingResult r = analytic_smooth(kPhaseFlow, a, 4.0, 0.0);
    EXPECT_LT(analyticity_check(kPhaseFlow, r, a, Complex(0.5, 0.0)), 1e-9);
}

TEST(Analyticity, ComplexArgumentAgreesWithEntireExtension) {
    Rng rng(3);
    const FlowHandle flow = FlowHandle::inner(random_base_generator(rng, 3));
    const Matrix a = random_matrix(rng, 3);
    const SmoothingResult r = analytic_smooth(flow, a, 9.0, 0.0);
    EXPECT_LT(analyticity_check(flow, r, a, Complex(0.3, 0.2)), 1e-9 * a.norm());
}

TEST(Analyticity, MismatchShrinksWithMoreNodes) {
    Rng rng(4);
    const FlowHandle flow = FlowHandle::inner(random_base_generator(rng, 3, 1.5));
    const Matrix a = random_matrix(rng, 3);
    const SmoothingResult r = analytic_smooth(flow, a, 2.0, 0.0, 64);
    const double coarse = analyticity_check(flow, r, a, Complex(0.0, 0.6), 4, 8);
    const double fine = analyticity_check(flow, r, a, Complex(0.0, 0.6), 4, 32);
    EXPECT_LT(fine, coarse);
}

TEST(Analyticity, RequiresInnerFlow) {
    const FlowHandle tab = FlowHandle::tabulated({-1.0, 1.0}, {SuperOp::identity(2), SuperOp::identity(2)});
    const SmoothingResult r = analytic_smooth(kIdentity2, e(2, 0, 1), 4.0, 0.0);
    EXPECT_THROW(analyticity_check(tab, r, e(2, 0, 1), Complex(0.1, 0.0)), Error);
}

// hand-rolled sweep of the derived safe bound for ξ > 0
TEST(SmoothingProperty, SafeNormBound) {
    Rng rng(5);
    for (int k = 0; k < 30; ++k) {
        const int n = uniform_int(rng, 2, 4);
        const FlowHandle flow = FlowHandle::inner(random_base_generator(rng, n, 1.0));
        const double m = uniform(rng, 4.0, 100.0);
        const GrowthBound gb = growth_bound(flow, linspace(-6.0, 6.0, 120));
        const double xi = std::min(gb.xi, std::sqrt(m));
        const Matrix a = random_matrix(rng, n);
        ASSERT_LE(analytic_smooth(flow, a, m, xi).smoothed.norm(), 2.0 * gb.M * std::exp(xi * xi / m) * a.norm()) << "case " << k;
    }
}
