#include <gtest/gtest.h>

#include <random>

#include "wsob/geometry.hpp"

using namespace wsob;

namespace
{

TEST(CuspDomain, ContainsFollowsProfileInequality)
{
    const CuspDomain cusp(2, {2.0});
    EXPECT_TRUE(cusp.contains(Point{0.01, 0.5}));
    EXPECT_FALSE(cusp.contains(Point{0.3, 0.5}));

    const auto h1 = CuspDomain::lipschitz(2);
    EXPECT_TRUE(h1.contains(Point{0.4, 0.5}));
    EXPECT_FALSE(h1.contains(Point{0.4, 1.0}));
    EXPECT_FALSE(h1.contains(Point{0.0, 0.5}));
}

TEST(CuspDomain, ContainsRejectsDimensionMismatch)
{
    const CuspDomain cusp(2, {2.0});
    EXPECT_THROW(cusp.contains(Point{0.1, 0.2, 0.3}), InputError);
}

TEST(CuspDomain, AggregateGamma)
{
    EXPECT_DOUBLE_EQ(aggregate_gamma(CuspDomain(2, {2.0})), 3.0);
    EXPECT_DOUBLE_EQ(aggregate_gamma(CuspDomain::lipschitz(3)), 3.0);
    EXPECT_DOUBLE_EQ(aggregate_gamma(CuspDomain(3, {2.0, 3.0})), 6.0);
    EXPECT_DOUBLE_EQ(CuspDomain(3, {2.0, 3.0}).sigma(), 2.5);
}

TEST(CuspDomain, InvariantsEnforced)
{
    EXPECT_THROW(CuspDomain(2, {0.5}), InputError);
    EXPECT_THROW(CuspDomain(3, {1.0}), InputError);
    EXPECT_THROW(CuspDomain(1, {}), InputError);
    // gamma >= n follows from gamma_i >= 1
    for (double g : {1.0, 1.5, 4.0}) {
        const CuspDomain d(3, {g, g});
        EXPECT_GE(d.aggregate_gamma(), 3.0);
        EXPECT_GE(d.sigma(), 1.0);
    }
}

TEST(Grid, GradedTowardSingularFace)
{
    const auto grid = build_grid(2, 3, 1.0);
    const auto& b = grid.breaks(1);
    // cell heights shrink strictly toward u = 0 across layers
    EXPECT_LT(b[1] - b[0], b.back() - b[b.size() - 2]);
    EXPECT_LT(grid.innermost_height(), 1.0 / 64.0);
}

TEST(Grid, ZeroGradingIsUniform)
{
    const auto grid = build_grid(2, 1, 0.0);
    ASSERT_EQ(grid.cell_count(), 4u);
    for (const auto& c : grid.cells())
        EXPECT_DOUBLE_EQ(c.volume(), 0.25);
}

TEST(Grid, RejectsNonPositiveLevels)
{
    EXPECT_THROW(build_grid(2, 0, 2.0), InputError);
    EXPECT_THROW(build_grid(2, -1, 2.0), InputError);
}

TEST(Grid, CellCountMonotoneInLevels)
{
    std::size_t prev = 0;
    for (int l = 1; l <= 9; ++l) {
        const auto c = build_grid(2, l, 2.0).cell_count();
        EXPECT_GE(c, prev);
        prev = c;
    }
}

TEST(Grid, CellsTileParameterCube)
{
    for (double grading : {0.0, 1.0, 2.0}) {
        const auto grid = build_grid(3, 2, grading, {4, 3});
        double total = 0.0;
        for (const auto& c : grid.cells())
            total += c.volume();
        EXPECT_NEAR(total, 1.0, 1e-14);
    }
}

TEST(Grid, CuspMeasureMatchesAnalyticVolume)
{
    // |H_g| = int_0^1 t^2 dt = 1/3 for gamma_1 = 2
    const CuspRegion region(CuspDomain(2, {2.0}));
    const auto grid = build_grid(2, 5, 2.0);
    EXPECT_NEAR(total_measure(region, grid), 1.0 / 3.0, 1e-12);
}

TEST(Grid, BallMeasureMatchesAnalyticVolume)
{
    const Ball b2(Point{0.3, -0.2}, 0.7);
    EXPECT_NEAR(total_measure(b2, build_grid(2, 2, 2.0)), ball_volume(2, 0.7), 1e-12);
    const Ball b3(Point{0.0, 0.0, 0.0}, 2.0);
    EXPECT_NEAR(total_measure(b3, build_grid(3, 2, 2.0)), ball_volume(3, 2.0), 1e-11);
    const Ball b4(Point{0.0, 0.0, 0.0, 0.0}, 1.0);
    EXPECT_NEAR(total_measure(b4, build_grid(4, 1, 2.0, {6, 4})), ball_volume(4, 1.0), 1e-11);
}

TEST(Grid, OffCenterPoleCoversBall)
{
    // polar coordinates about an interior pole still sweep the whole ball
    const Ball b(Point{0.0, 0.0}, 1.0, Point{0.5, 0.2});
    Schedule s;
    s.grid.transverse_cells = 128;
    const auto v = integrate([](const Point&) { return 1.0; }, b, s);
    EXPECT_NEAR(v.value, std::numbers::pi, 2e-3);
}

TEST(Integrate, ConstantOnLipschitzTriangle)
{
    const CuspRegion h1(CuspDomain::lipschitz(2));
    const auto v = integrate([](const Point&) { return 1.0; }, h1);
    EXPECT_EQ(v.verdict, Verdict::Finite);
    EXPECT_NEAR(v.value, 0.5, 1e-12);
}

TEST(Integrate, LogDivergenceDetected)
{
    // int_{H_1} x_n^{-2} = int_0^1 x_n^{-1} dx_n
    const CuspRegion h1(CuspDomain::lipschitz(2));
    const auto v = integrate([](const Point& x) { return std::pow(x.last(), -2.0); }, h1);
    EXPECT_EQ(v.verdict, Verdict::Divergent);
    ASSERT_GE(v.trace.size(), 3u);
    const auto k = v.trace.size();
    EXPECT_GE(v.trace[k - 1], 1.5 * v.trace[k - 2]);
    EXPECT_GE(v.trace[k - 2], 1.5 * v.trace[k - 3]);
}

TEST(Integrate, IntegrableSingularity)
{
    // int_{H_1} x_n^{-1/2} = int_0^1 x_n^{1/2} = 2/3
    const CuspRegion h1(CuspDomain::lipschitz(2));
    const auto v = integrate([](const Point& x) { return 1.0 / std::sqrt(x.last()); }, h1);
    EXPECT_EQ(v.verdict, Verdict::Finite);
    EXPECT_NEAR(v.value, 2.0 / 3.0, 2e-4);
    const auto k = v.trace.size();
    EXPECT_LE(std::abs(v.trace[k - 1] - v.trace[k - 2]), 1e-3 * std::abs(v.trace[k - 1]));
}

TEST(Integrate, NonFiniteIntegrandIsEvaluationError)
{
    const CuspRegion h1(CuspDomain::lipschitz(2));
    EXPECT_THROW(integrate([](const Point&) { return std::nan(""); }, h1), EvaluationError);
}

TEST(Integrate, ExhaustedScheduleIsInconclusive)
{
    const CuspRegion h1(CuspDomain::lipschitz(2));
    Schedule s;
    s.levels = {1};
    const auto v = integrate([](const Point& x) { return x.last(); }, h1, s);
    EXPECT_EQ(v.verdict, Verdict::Inconclusive);
    EXPECT_EQ(v.trace.size(), 1u);
}

// 1-D antiderivative oracle: int_{H_1} x_n^b = 1/(b+2) for b > -2 (n = 2)
TEST(Integrate, RefinementNeverLosesAccuracy)
{
    const CuspRegion h1(CuspDomain::lipschitz(2));
    Schedule s;
    s.rel_tol = 1e-15;// force the whole schedule
    for (double b : {-1.7, -1.2, -0.5, 0.0, 1.0, 2.5}) {
        const auto v = integrate([b](const Point& x) { return std::pow(x.last(), b); }, h1, s);
        const double exact = 1.0 / (b + 2.0);
        const auto k = v.trace.size();
        ASSERT_GE(k, 2u);
        EXPECT_LE(std::abs(v.trace[k - 1] - exact), std::abs(v.trace[k - 2] - exact) + 1e-15) << "b=" << b;
    }
}

TEST(Integrate, Linearity)
{
    const CuspRegion cusp(CuspDomain(2, {2.0}));
    const Integrand f = [](const Point& x) { return std::pow(x.last(), -0.7) + x[0]; };
    const Integrand g = [](const Point& x) { return std::cos(x.last()) * std::pow(x.last(), -1.5); };
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    for (int trial = 0; trial < 5; ++trial) {
        const double a = coef(rng), b = coef(rng);
        const auto vf = integrate(f, cusp);
        const auto vg = integrate(g, cusp);
        const auto vh = integrate([&](const Point& x) { return a * f(x) + b * g(x); }, cusp);
        ASSERT_TRUE(vf.finite() && vg.finite() && vh.finite());
        const double expect = a * vf.value + b * vg.value;
        EXPECT_NEAR(vh.value, expect, 2e-3 * (std::abs(a * vf.value) + std::abs(b * vg.value)));
    }
}

// For convex integrands the centroid rule is a lower bound that can only grow
// when cells are subdivided.
TEST(Integrate, MonotoneForConvexNonnegative)
{
    const CuspRegion h1(CuspDomain::lipschitz(2));
    Schedule s;
    s.rel_tol = 1e-15;
    for (double b : {-1.9, -1.0, -0.3, 2.0}) {
        const auto v = integrate([b](const Point& x) { return std::pow(x.last(), b); }, h1, s);
        for (std::size_t k = 1; k < v.trace.size(); ++k)
            EXPECT_GE(v.trace[k], v.trace[k - 1] * (1.0 - 1e-14)) << "b=" << b;
    }
}

TEST(Integrate, ThreadCountDoesNotChangeSums)
{
    const CuspRegion h1(CuspDomain::lipschitz(3));
    const Integrand f = [](const Point& x) { return std::pow(x.last(), -1.3) * (1.0 + x[0]); };
    set_thread_count(1);
    const auto a = integrate(f, h1);
    set_thread_count(4);
    const auto b = integrate(f, h1);
    set_thread_count(1);
    EXPECT_EQ(a.trace, b.trace);
}

}// namespace
