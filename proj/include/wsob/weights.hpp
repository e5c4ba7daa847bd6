#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "wsob/core.hpp"
#include "wsob/geometry.hpp"

namespace wsob
{

//
// Weight functions on R^n. Both kinds are radial about the origin, which is
// the only point where they may degenerate.
//
class Weight
{
public:
    enum class Kind
    {
        Polynomial,// |x|^alpha
        Tabulated  // sampled radial profile, linear interpolation in |x|
    };

    static Weight polynomial(int dim, double alpha)
    {
        if (dim < 1 || dim > kMaxDim)
            throw InputError("weight dimension out of range");
        if (!std::isfinite(alpha))
            throw InputError("weight exponent must be finite");
        Weight w;
        w.kind_ = Kind::Polynomial;
        w.dim_ = dim;
        w.alpha_ = alpha;
        return w;
    }

    static Weight constant(int dim) { return polynomial(dim, 0.0); }

    static Weight tabulated(int dim, std::vector<double> radii, std::vector<double> values)
    {
        if (dim < 1 || dim > kMaxDim)
            throw InputError("weight dimension out of range");
        if (radii.size() < 2 || radii.size() != values.size())
            throw InputError("tabulated weight needs >= 2 (radius, value) samples");
        for (std::size_t i = 0; i < radii.size(); ++i) {
            if (!(values[i] >= 0.0) || !std::isfinite(values[i]))
                throw InputError("tabulated weight values must be finite and nonnegative");
            if (!(radii[i] >= 0.0) || (i > 0 && !(radii[i] > radii[i - 1])))
                throw InputError("tabulated weight radii must be nonnegative and increasing");
        }
        Weight w;
        w.kind_ = Kind::Tabulated;
        w.dim_ = dim;
        w.radii_ = std::move(radii);
        w.values_ = std::move(values);
        return w;
    }

    Kind kind() const noexcept { return kind_; }
    int dim() const noexcept { return dim_; }
    bool is_polynomial() const noexcept { return kind_ == Kind::Polynomial; }

    // exponent of a polynomial weight (0 for tabulated)
    double alpha() const noexcept { return alpha_; }

    const std::vector<double>& radii() const noexcept { return radii_; }
    const std::vector<double>& values() const noexcept { return values_; }

    double operator()(const Point& x) const { return power(x, 1.0); }

    // w(x)^e; for polynomial weights evaluated as |x|^{alpha e}
    double power(const Point& x, double e) const
    {
        require_dim(x, dim_, "Weight");
        if (kind_ == Kind::Polynomial) {
            const double ae = alpha_ * e;
            if (ae == 0.0)
                return 1.0;
            const double r2 = x.norm2();
            if (r2 == 0.0) {
                if (ae < 0.0)
                    throw DomainError("polynomial weight with negative power evaluated at the origin");
                return 0.0;
            }
            return std::pow(r2, 0.5 * ae);
        }
        const double v = profile(x.norm());
        if (e == 1.0)
            return v;
        if (v == 0.0 && e < 0.0)
            return kInf;
        return std::pow(v, e);
    }

private:
    double profile(double r) const
    {
        if (r <= radii_.front())
            return values_.front();
        if (r >= radii_.back())
            return values_.back();
        const auto it = std::upper_bound(radii_.begin(), radii_.end(), r);
        const std::size_t j = static_cast<std::size_t>(it - radii_.begin());
        const double t = (r - radii_[j - 1]) / (radii_[j] - radii_[j - 1]);
        return values_[j - 1] + t * (values_[j] - values_[j - 1]);
    }

    Kind kind_ = Kind::Polynomial;
    int dim_ = 2;
    double alpha_ = 0.0;
    std::vector<double> radii_;
    std::vector<double> values_;
};

inline double eval(const Weight& w, const Point& x) { return w(x); }

inline Point weight_singular_point(const Weight& w) { return Point(w.dim()); }

////////////////////////////////////////////////////////////////////////////////
//
// A_p ratio on a single ball
//
//   (avg_B w) (avg_B w^{1/(1-p)})^{p-1}
//
////////////////////////////////////////////////////////////////////////////////

struct ApRatio
{
    double value = 1.0;// +inf when an average diverges
    bool conclusive = true;
    IntegralVerdict weight_integral;
    IntegralVerdict dual_integral;
};

inline Schedule default_ap_schedule(int dim)
{
    Schedule s;
    s.grid.transverse_cells = dim <= 2 ? 16 : 8;
    s.grid.cells_per_layer = dim <= 2 ? 16 : 8;
    return s;
}

inline ApRatio ap_ratio(const Weight& w, double p, const Ball& ball, const Schedule& schedule)
{
    if (!(p > 1.0))
        throw InputError("ap_ratio: p must be > 1");
    require_dim(ball.center(), w.dim(), "ap_ratio ball");

    const double dual = 1.0 / (1.0 - p);
    const std::vector<Integrand> fs{
        [&](const Point& x) { return w(x); },
        [&](const Point& x) { return w.power(x, dual); },
    };

    ApRatio out;
    std::vector<IntegralVerdict> v;
    try {
        v = integrate_many(fs, ball, schedule);
    } catch (const EvaluationError&) {
        // w^{1/(1-p)} infinite on a set of positive measure
        out.value = kInf;
        return out;
    }
    out.weight_integral = v[0];
    out.dual_integral = v[1];

    if (v[0].divergent() || v[1].divergent()) {
        out.value = kInf;
        return out;
    }
    out.conclusive = v[0].finite() && v[1].finite();

    // both averages on the finest common grid, normalized by its own total
    // measure, so the discrete ratio obeys Hoelder's inequality as well
    const std::size_t depth = std::max(v[0].trace.size(), v[1].trace.size());
    const auto grid = build_grid(ball.dim(), schedule.levels[depth - 1], schedule.grading, schedule.grid);
    double mass = 0.0, sw = 0.0, sd = 0.0;
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
        const Node nd = ball.node(grid.cell(i));
        if (nd.measure == 0.0)
            continue;
        mass += nd.measure;
        sw += nd.measure * fs[0](nd.x);
        sd += nd.measure * fs[1](nd.x);
    }
    out.value = (sw / mass) * std::pow(sd / mass, p - 1.0);
    return out;
}

inline ApRatio ap_ratio(const Weight& w, double p, const Ball& ball)
{
    return ap_ratio(w, p, ball, default_ap_schedule(w.dim()));
}

////////////////////////////////////////////////////////////////////////////////
//
// A_p check over a sampled ball family
//
////////////////////////////////////////////////////////////////////////////////

enum class ApVerdict
{
    Satisfied,
    Violated,
    Inconclusive
};

inline const char* to_string(ApVerdict v)
{
    switch (v) {
        case ApVerdict::Satisfied: return "Satisfied";
        case ApVerdict::Violated: return "Violated";
        default: return "Inconclusive";
    }
}

struct BallFamily
{
    double min_radius = 1e-3;
    double max_radius = 1.0;
    int radius_count = 7;
    // centers at these multiples of the radius from the singular point
    std::vector<double> offsets{0.0, 0.5, 0.9, 1.5, 3.0};
    int random_count = 16;
    std::uint64_t seed = 1;
};

// log-radial lattice about the singular point plus seeded random balls
inline std::vector<Ball> sample_balls(const Weight& w, const BallFamily& fam)
{
    const int n = w.dim();
    if (fam.radius_count < 1 || !(fam.min_radius > 0.0) || !(fam.max_radius >= fam.min_radius))
        throw InputError("ball family: need radius_count >= 1 and 0 < min_radius <= max_radius");

    const Point origin = weight_singular_point(w);
    Point axis(n), diag(n);
    axis[0] = 1.0;
    for (int i = 0; i < n; ++i)
        diag[i] = 1.0 / std::sqrt(static_cast<double>(n));

    std::vector<Ball> balls;
    for (int k = 0; k < fam.radius_count; ++k) {
        const double t = fam.radius_count == 1 ? 0.0 : static_cast<double>(k) / (fam.radius_count - 1);
        const double r = fam.min_radius * std::pow(fam.max_radius / fam.min_radius, t);
        for (double off : fam.offsets) {
            if (off == 0.0) {
                balls.push_back(Ball(origin, r));
                continue;
            }
            for (const Point& dir : {axis, diag})
                balls.push_back(Ball::around(origin + (off * r) * dir, r, origin));
        }
    }

    std::mt19937_64 rng(fam.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < fam.random_count; ++k) {
        Point c(n);
        for (int i = 0; i < n; ++i)
            c[i] = 2.0 * unit(rng) - 1.0;
        const double r = fam.min_radius * std::pow(fam.max_radius / fam.min_radius, unit(rng));
        balls.push_back(Ball::around(c, r, origin));
    }
    return balls;
}

struct ApReport
{
    double p = 2.0;
    double sup_estimate = 1.0;
    int ball_count = 0;
    int inconclusive_balls = 0;
    ApVerdict verdict = ApVerdict::Inconclusive;
    std::optional<std::pair<double, double>> analytic_range;// open interval for alpha
    std::vector<double> ratios;
};

// open interval of alpha for which |x|^alpha is an A_p weight on R^n
inline std::pair<double, double> polynomial_ap_range(int n, double p) { return {-n, n * (p - 1.0)}; }

inline ApReport ap_check(const Weight& w, double p, const BallFamily& fam, const Schedule& schedule)
{
    if (!(p > 1.0))
        throw InputError("ap_check: p must be > 1");

    const auto balls = sample_balls(w, fam);
    ApReport rep;
    rep.p = p;
    rep.ball_count = static_cast<int>(balls.size());
    rep.ratios.resize(balls.size());
    std::vector<char> conclusive(balls.size(), 1);
    for (std::size_t i = 0; i < balls.size(); ++i) {
        const auto r = ap_ratio(w, p, balls[i], schedule);
        rep.ratios[i] = r.value;
        conclusive[i] = r.conclusive ? 1 : 0;
    }
    rep.sup_estimate = *std::max_element(rep.ratios.begin(), rep.ratios.end());
    rep.inconclusive_balls = static_cast<int>(std::count(conclusive.begin(), conclusive.end(), 0));

    if (w.is_polynomial()) {
        rep.analytic_range = polynomial_ap_range(w.dim(), p);
        const double a = w.alpha();
        rep.verdict = (a > rep.analytic_range->first && a < rep.analytic_range->second) ? ApVerdict::Satisfied
                                                                                        : ApVerdict::Violated;
    } else {
        // a finite sample never certifies a supremum
        rep.verdict = std::isinf(rep.sup_estimate) ? ApVerdict::Violated : ApVerdict::Inconclusive;
    }
    return rep;
}

inline ApReport ap_check(const Weight& w, double p, const BallFamily& fam = {})
{
    return ap_check(w, p, fam, default_ap_schedule(w.dim()));
}

////////////////////////////////////////////////////////////////////////////////
//
// Weighted measures
//
////////////////////////////////////////////////////////////////////////////////

// w(A) = int_A w; +inf when divergent, last estimate when inconclusive
template <QuadratureRegion R>
double weighted_measure(const Weight& w, const R& region, const Schedule& schedule = {})
{
    const auto v = integrate([&](const Point& x) { return w(x); }, region, schedule);
    return v.divergent() ? kInf : v.value;
}

// finiteness of int_D w^{-n/2}
template <QuadratureRegion R>
IntegralVerdict theorem10_condition(const Weight& w, const R& region, const Schedule& schedule = {})
{
    const double e = -0.5 * w.dim();
    try {
        return integrate([&](const Point& x) { return w.power(x, e); }, region, schedule);
    } catch (const EvaluationError&) {
        IntegralVerdict v;
        v.verdict = Verdict::Divergent;
        v.value = kInf;
        return v;
    }
}

}// namespace wsob
