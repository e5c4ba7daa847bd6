#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

#include "wsob/probe.hpp"

using namespace wsob;

namespace
{

constexpr double pi = std::numbers::pi;

// cone of radius e in the plane: int u^2 = pi e^2 / 6, int |grad u|^2 = pi
double hat_ratio_oracle(double e)
{
    const double l2 = std::sqrt(pi * e * e / 6.0);
    return l2 / (l2 + std::sqrt(pi));
}

EmbeddingQuery<double> query(int n, double p, double alpha, double gamma) { return {n, p, alpha, gamma, 1}; }

TEST(EmbeddingRatio, ThinHatOnUnitSquare)
{
    const double e = 0.2;
    const Schedule sch{{5, 6, 7, 8}, 0.0, 1e-3, 1.5, {}};
    const auto r = embedding_ratio(hat(Point{0.5, 0.5}, e), 2.0, 2.0, Weight::constant(2), Box::unit(2), sch);
    EXPECT_EQ(r.verdict, Verdict::Finite);
    EXPECT_LT(r.ratio, 1.0);
    EXPECT_NEAR(r.ratio / hat_ratio_oracle(e), 1.0, 5e-3);
    // polar grid about the apex
    const auto rb = embedding_ratio(hat(Point{0.5, 0.5}, e), 2.0, 2.0, Weight::constant(2), Ball(Point{0.5, 0.5}, e));
    EXPECT_NEAR(rb.ratio / hat_ratio_oracle(e), 1.0, 1e-3);
}

TEST(EmbeddingRatio, Homogeneous)
{
    const auto region = CuspRegion(CuspDomain(2, {2.0}), 0.3);
    const auto u = hat(Point(2), 0.3);
    const Weight w = Weight::polynomial(2, 0.7);
    const double a = embedding_ratio(u, 2.0, 5.0, w, region).ratio;
    for (double c : {1e-3, 0.5, 7.0, 1e4})
        EXPECT_NEAR(embedding_ratio(u.scaled(c), 2.0, 5.0, w, region).ratio / a, 1.0, 1e-12) << c;
}

TEST(EmbeddingRatio, ZeroExponentWeightIsUnweighted)
{
    const auto region = CuspRegion(CuspDomain(2, {1.5}), 0.5);
    const auto u = hat(Point(2), 0.5);
    const auto a = embedding_ratio(u, 1.5, 3.0, Weight::polynomial(2, 0.0), region);
    const auto b = embedding_ratio(u, 1.5, 3.0, Weight::constant(2), region);
    EXPECT_EQ(a.ratio, b.ratio);
}

TEST(EmbeddingRatio, ZeroFunctionRejected)
{
    const TrialFunction zero{[](const Point&) { return 0.0; }, [](const Point&) { return 0.0; }};
    EXPECT_THROW(embedding_ratio(zero, 2.0, 2.0, Weight::constant(2), Box::unit(2)), InputError);
    // support outside the region is the same as zero
    EXPECT_THROW(embedding_ratio(hat(Point{5.0, 5.0}, 0.1), 2.0, 2.0, Weight::constant(2), Box::unit(2)), InputError);
}

TEST(Classify, SyntheticSequences)
{
    auto seq = [](double slope) {
        std::vector<std::pair<double, double>> v;
        for (double e : default_eps_schedule())
            v.emplace_back(e, std::pow(e, slope));
        return v;
    };
    EXPECT_EQ(classify(seq(0.1), 1.5, 0.2), ProbeVerdict::Bounded);
    EXPECT_EQ(classify(seq(0.0), 1.5, 0.2), ProbeVerdict::Bounded);
    EXPECT_EQ(classify(seq(-0.07), 1.5, 0.2), ProbeVerdict::BlowUp);
    // 10^{0.16} = 1.45 total: too slow for BlowUp, too fast for Bounded
    EXPECT_EQ(classify(seq(-0.04), 1.5, 0.2), ProbeVerdict::Inconclusive);
    auto bumpy = seq(-0.2);
    bumpy[bumpy.size() - 2].second *= 2.0;
    EXPECT_EQ(classify(bumpy, 1.5, 0.2), ProbeVerdict::Inconclusive);
}

TEST(Probe, BelowAndAboveThresholdSix)
{
    const auto q = query(2, 2.0, 0.0, 3.0);
    const auto lo = run_probe(q, 5.0);
    const auto hi = run_probe(q, 7.0);
    EXPECT_EQ(lo.verdict, ProbeVerdict::Bounded);
    EXPECT_EQ(hi.verdict, ProbeVerdict::BlowUp);
    ASSERT_EQ(lo.ratios.size(), 9u);
    // ratio ~ eps^{(alpha+gamma)(1/s - 1/s*)}
    EXPECT_NEAR(lo.slope, 3.0 * (1.0 / 5.0 - 1.0 / 6.0), 0.02);
    EXPECT_NEAR(hi.slope, 3.0 * (1.0 / 7.0 - 1.0 / 6.0), 0.02);
}

TEST(Probe, LipschitzCuspClassicalRegime)
{
    EXPECT_EQ(run_probe(query(2, 1.5, 0.0, 2.0), 5.0).verdict, ProbeVerdict::Bounded);
}

TEST(Probe, WeightedThreshold)
{
    // s* = 3.5 * 2 / 1.5
    const auto q = query(2, 2.0, 0.5, 3.0);
    EXPECT_EQ(run_probe(q, 3.5).verdict, ProbeVerdict::Bounded);
    EXPECT_EQ(run_probe(q, 6.0).verdict, ProbeVerdict::BlowUp);
}

TEST(Probe, SweepMonotoneAndConsistent)
{
    const auto q = query(2, 2.0, 0.0, 3.0);
    const auto reps = sweep_probe(q, {3.0, 4.0, 4.8, 5.5, 6.5, 7.2, 8.0, 10.0});
    EXPECT_TRUE(consistent_with_threshold(reps, 6.0, 0.2));
    bool blown = false;
    for (const auto& r : reps) {
        if (blown) {
            EXPECT_EQ(r.verdict, ProbeVerdict::BlowUp) << r.s;
        }
        blown = blown || r.verdict == ProbeVerdict::BlowUp;
    }
    for (std::size_t k = 1; k < reps.size(); ++k)
        EXPECT_LT(reps[k].slope, reps[k - 1].slope);
}

TEST(Probe, ThreeDimensionalCusp)
{
    // n = 3, gamma = 4, p = 2: s* = 4
    const auto q = query(3, 2.0, 0.0, 4.0);
    EXPECT_EQ(run_probe(q, 3.0).verdict, ProbeVerdict::Bounded);
    EXPECT_EQ(run_probe(q, 6.0).verdict, ProbeVerdict::BlowUp);
}

TEST(Probe, PowerSpikeFamily)
{
    ProbeOptions opt;
    opt.family = Family::PowerSpike;
    const auto q = query(2, 2.0, 0.0, 3.0);
    EXPECT_EQ(run_probe(q, 3.0, opt).verdict, ProbeVerdict::Bounded);
    EXPECT_EQ(run_probe(q, 10.0, opt).verdict, ProbeVerdict::BlowUp);
}

TEST(Probe, RejectsBadSchedules)
{
    const auto q = query(2, 2.0, 0.0, 3.0);
    ProbeOptions opt;
    opt.eps = {1e-1, 1e-2, 1e-3};
    EXPECT_THROW(run_probe(q, 5.0, opt), InputError);
    opt.eps = {1e-5, 1e-3, 1e-1};
    EXPECT_THROW(run_probe(q, 5.0, opt), InputError);
    EXPECT_THROW(run_probe(query(2, 2.0, 0.0, 1.5), 5.0), InputError);
}

TEST(Probe, CsvHasOneRowPerEps)
{
    ProbeOptions opt;
    opt.eps = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    const auto rep = run_probe(query(2, 2.0, 0.0, 3.0), 5.0, opt);
    std::ostringstream os;
    write_probe_csv(os, rep);
    const std::string out = os.str();
    EXPECT_EQ(out.rfind("eps,ratio\n", 0), 0u);
    EXPECT_EQ(std::count(out.begin(), out.end(), '\n'), 6);
}

}// namespace
