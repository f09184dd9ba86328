#include "flowlab/cocycle_tools.hpp"
#include "flowlab/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace flowlab;

namespace {

const std::vector<double> kSteps{0.125, 0.0625, 0.03125, 0.015625};

CocycleHandle constant_identity(int n) {
    return CocycleHandle::tabulated({-8.0, 8.0}, {Matrix::Identity(n, n), Matrix::Identity(n, n)});
}

}  // namespace

TEST(MollifiedSimilarity, ConstantCocycleGivesIdentity) {
    EXPECT_LT((mollified_similarity(constant_identity(3), 5.0) - Matrix::Identity(3, 3)).norm(), 1e-14);
}

TEST(MollifiedSimilarity, ShrinksTowardIdentityAsNGrows) {
    Rng rng(1);
    const Matrix g = random_base_generator(rng, 3);
    const CocycleHandle u = CocycleHandle::closed_form(-kI * g, random_perturbation(rng, 3));
    double previous = std::numeric_limits<double>::infinity();
    for (double n : {1.0, 10.0, 100.0}) {
        const double gap = (mollified_similarity(u, n) - Matrix::Identity(3, 3)).norm();
        double sup = 0.0;
        for (double t : linspace(-4.0 / std::sqrt(n), 4.0 / std::sqrt(n), 64)) sup = std::max(sup, (u.eval(t) - Matrix::Identity(3, 3)).norm());
        EXPECT_LE(gap, sup + 1e-3);
        EXPECT_LT(gap, previous);
        previous = gap;
    }
}

TEST(MollifiedSimilarity, ContinuousInN) {
    Rng rng(2);
    const Matrix g = random_base_generator(rng, 2);
    const CocycleHandle u = CocycleHandle::closed_form(-kI * g, random_perturbation(rng, 2));
    double previous = std::numeric_limits<double>::infinity();
    for (double n : {4.0, 16.0, 64.0, 256.0}) {
        const double step = (mollified_similarity(u, n) - mollified_similarity(u, 2.0 * n)).norm();
        EXPECT_LT(step, previous);
        previous = step;
    }
}

TEST(MollifiedSimilarity, SingularResultAsksForLargerN) {
    // u_t = e^{40it}·1: the Gaussian average nearly cancels
    const CocycleHandle u = CocycleHandle::closed_form(Matrix::Zero(2, 2), 40.0 * Matrix::Identity(2, 2));
    try {
        (void)mollified_similarity(u, 1.0);
        FAIL() << "expected a singular w";
    } catch (const Error& err) {
        EXPECT_EQ(err.kind(), ErrorKind::Singular);
        EXPECT_NE(std::string(err.what()).find("increase n"), std::string::npos);
    }
}

TEST(SimilarCocycle, IdentityWLeavesCocycleUnchanged) {
    Rng rng(3);
    const Matrix g = random_base_generator(rng, 3);
    const FlowHandle flow = FlowHandle::inner(g);
    const CocycleHandle u = CocycleHandle::closed_form(-kI * g, random_perturbation(rng, 3));
    const CocycleHandle v = similar_cocycle(Matrix::Identity(3, 3), u, flow);
    for (double t : {-1.0, 0.3, 1.7}) EXPECT_LT((v.eval(t) - u.eval(t)).norm(), 1e-14);
}

TEST(SimilarCocycle, AnyInvertibleWGivesCocycleAndRoundTrips) {
    Rng rng(4);
    const Matrix g = random_base_generator(rng, 3);
    const FlowHandle flow = FlowHandle::inner(g);
    const CocycleHandle u = CocycleHandle::closed_form(-kI * g, random_perturbation(rng, 3));
    const Matrix w = Matrix::Identity(3, 3) + 0.5 * random_matrix(rng, 3);
    const CocycleHandle v = similar_cocycle(w, u, flow);
    for (double s : linspace(-2, 2, 8))
        for (double t : linspace(-2, 2, 8)) ASSERT_LT(cocycle_defect(flow, v, s, t).max(), 1e-8);
    for (double t : {-2.0, 0.5, 1.5})
        EXPECT_LT((w * v.eval(t) * eval_flow(flow, t, w.inverse()) - u.eval(t)).norm(), 1e-10);
}

TEST(SimilarCocycle, RejectsDimensionMismatch) {
    Rng rng(5);
    const FlowHandle flow = FlowHandle::inner(random_base_generator(rng, 2));
    EXPECT_THROW(similar_cocycle(Matrix::Identity(3, 3), constant_identity(3), flow), Error);
}

TEST(Differentiability, ClosedFormDerivativeAtZero) {
    Rng rng(6);
    const Matrix g = random_base_generator(rng, 3);
    const Matrix p = random_perturbation(rng, 3);
    const auto est = differentiability_estimate(CocycleHandle::closed_form(-kI * g, p), 0.0, {1e-2, 5e-3, 2.5e-3});
    EXPECT_LT((est.derivative - kI * p).norm(), 1e-4);
    EXPECT_LT(est.stability, 1e-4);
    const auto fine = differentiability_estimate(CocycleHandle::closed_form(-kI * g, p), 0.0, {4e-4, 2e-4, 1e-4});
    EXPECT_LT(fine.stability, 1e-6);
}

TEST(Differentiability, ConstantCocycleHasZeroDerivative) {
    const auto est = differentiability_estimate(constant_identity(2), 0.0, kSteps);
    EXPECT_LT(est.derivative.norm(), 1e-15);
    EXPECT_EQ(est.estimates.size(), kSteps.size());
}

TEST(Differentiability, KinkKeepsStabilityLarge) {
    // |t − 0.01| in one entry; the offset keeps the central difference from
    // cancelling the kink symmetrically
    std::vector<double> times;
    std::vector<Matrix> values;
    for (int k = 0; k <= 8000; ++k) {
        const double t = -4.0 + 1e-3 * k;
        Matrix m = Matrix::Identity(2, 2);
        m(0, 1) = std::abs(t - 0.01);
        times.push_back(t);
        values.push_back(m);
    }
    const auto est = differentiability_estimate(CocycleHandle::tabulated(times, values), 0.0, kSteps);
    EXPECT_GT(est.stability, 0.1);
}

TEST(Differentiability, RejectsBadStepLists) {
    EXPECT_THROW(differentiability_estimate(constant_identity(2), 0.0, {}), Error);
    EXPECT_THROW(differentiability_estimate(constant_identity(2), 0.0, {0.1, 0.2}), Error);
}

TEST(RoughCocycle, DecompositionSmoothsAndRoundTrips) {
    Rng rng(7);
    for (int k = 0; k < 5; ++k) {
        const auto rc = make_rough_cocycle(rng, uniform_int(rng, 2, 4));
        const Matrix w = mollified_similarity(rc.u, 20.0);
        const CocycleHandle v = similar_cocycle(w, rc.u, rc.flow);
        const double stab_u = differentiability_estimate(rc.u, 0.0, kSteps).stability;
        const double stab_v = differentiability_estimate(v, 0.0, kSteps).stability;
        EXPECT_LE(stab_v, stab_u / 10.0) << "case " << k;
        for (double t : {-1.0, 0.25, 1.0})
            EXPECT_LT((w * v.eval(t) * eval_flow(rc.flow, t, w.inverse()) - rc.u.eval(t)).norm(), 1e-9);
        EXPECT_LT(cocycle_defect(rc.flow, v, 0.5, -0.75).max(), 1e-8);
    }
}

TEST(ThresholdSearch, FindsNForSmallEpsilon) {
    Rng rng(8);
    const auto rc = make_rough_cocycle(rng, 3);
    const ThresholdSearch s = similarity_threshold_search(rc.u, 0.01, 4.0, 65536.0);
    ASSERT_TRUE(s.found);
    EXPECT_LT(s.norm_w_minus_1, 0.01);
    EXPECT_EQ(s.trail.back().first, s.n);
    for (std::size_t k = 0; k + 1 < s.trail.size(); ++k) EXPECT_GE(s.trail[k].second, 0.01);
}
