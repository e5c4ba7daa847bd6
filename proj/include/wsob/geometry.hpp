#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "wsob/core.hpp"
#include "wsob/parallel.hpp"

namespace wsob
{

////////////////////////////////////////////////////////////////////////////////
//
// Cusp domains
//
//   H_g = { 0 < x_n < 1, 0 < x_i < g_i(x_n), i < n },  g_i(t) = t^{gamma_i}
//
// H_1 is the special case gamma_i = 1 (a Lipschitz domain).
//
////////////////////////////////////////////////////////////////////////////////

class CuspDomain
{
public:
    CuspDomain(int dim, std::vector<double> exponents, double c1 = 1.0, double c2 = 1.0)
        : dim_(dim)
        , exponents_(std::move(exponents))
        , c1_(c1)
        , c2_(c2)
    {
        if (dim_ < 2 || dim_ > kMaxDim)
            throw InputError("cusp domain dimension must be in [2, " + std::to_string(kMaxDim) + "]");
        if (static_cast<int>(exponents_.size()) != dim_ - 1)
            throw InputError("cusp domain needs exactly n-1 profile exponents");
        for (double g : exponents_)
            if (!(g >= 1.0) || !std::isfinite(g))
                throw InputError("profile exponents must be finite and >= 1");
        if (!(c1_ > 0.0) || !(c1_ <= c2_))
            throw InputError("profile scale bounds must satisfy 0 < C1 <= C2");
    }

    // the Lipschitz reference domain H_1
    static CuspDomain lipschitz(int dim) { return CuspDomain(dim, std::vector<double>(std::max(dim - 1, 0), 1.0)); }

    // sigma-Hoelder cusp: all profiles equal, gamma = sigma (n-1) + 1
    static CuspDomain holder(int dim, double sigma)
    {
        return CuspDomain(dim, std::vector<double>(std::max(dim - 1, 0), sigma));
    }

    int dim() const noexcept { return dim_; }
    const std::vector<double>& exponents() const noexcept { return exponents_; }
    double scale_lower() const noexcept { return c1_; }
    double scale_upper() const noexcept { return c2_; }

    // g_i(t)
    double profile(int i, double t) const { return std::pow(t, exponents_[static_cast<std::size_t>(i)]); }

    // G(t) = prod g_i(t) = t^{gamma - 1}
    double profile_product(double t) const { return std::pow(t, aggregate_gamma() - 1.0); }

    // gamma = 1 + sum gamma_i (= log G / log t + 1 for power profiles)
    double aggregate_gamma() const noexcept
    {
        return 1.0 + std::accumulate(exponents_.begin(), exponents_.end(), 0.0);
    }

    // sigma = (gamma - 1) / (n - 1)
    double sigma() const noexcept { return (aggregate_gamma() - 1.0) / (dim_ - 1); }

    bool is_lipschitz() const noexcept
    {
        return std::all_of(exponents_.begin(), exponents_.end(), [](double g) { return g == 1.0; });
    }

    // |H_g| = int_0^1 G(t) dt = 1/gamma
    double volume() const noexcept { return 1.0 / aggregate_gamma(); }

    bool contains(const Point& x) const
    {
        require_dim(x, dim_, "CuspDomain::contains");
        const double xn = x.last();
        if (!(xn > 0.0 && xn < 1.0))
            return false;
        for (int i = 0; i + 1 < dim_; ++i)
            if (!(x[i] > 0.0 && x[i] < profile(i, xn)))
                return false;
        return true;
    }

private:
    int dim_;
    std::vector<double> exponents_;
    double c1_;
    double c2_;
};

inline double aggregate_gamma(const CuspDomain& d) noexcept { return d.aggregate_gamma(); }

inline bool contains(const CuspDomain& d, const Point& x) { return d.contains(x); }

////////////////////////////////////////////////////////////////////////////////
//
// Quadrature grids
//
// A grid is a tensor partition of the parameter cube [0,1]^n. The last axis is
// the graded one: for grading > 0 it is split into geometric layers
// [rho^{j+1}, rho^j], rho = 2^-grading, each subdivided uniformly, plus one
// innermost cell [0, rho^J] so the cube is covered. Regions (below) map
// parameter cells onto physical cells with the singular set at u = 0.
//
////////////////////////////////////////////////////////////////////////////////

struct GridOptions
{
    int transverse_cells = 16;// per non-graded axis when grading > 0
    int cells_per_layer = 16; // uniform split of each geometric layer
    double max_depth_log2 = 256.0;// innermost breakpoint never below 2^-max_depth
};

struct Cell
{
    Point lo;
    Point hi;

    double volume() const noexcept
    {
        double v = 1.0;
        for (int i = 0; i < lo.dim(); ++i)
            v *= hi[i] - lo[i];
        return v;
    }
};

class QuadratureGrid
{
public:
    QuadratureGrid(int dim, int levels, double grading, std::vector<std::vector<double>> breaks)
        : dim_(dim)
        , levels_(levels)
        , grading_(grading)
        , breaks_(std::move(breaks))
    {
    }

    int dim() const noexcept { return dim_; }
    int levels() const noexcept { return levels_; }
    double grading() const noexcept { return grading_; }

    // breakpoints along axis k (ascending, 0 and 1 included)
    const std::vector<double>& breaks(int k) const { return breaks_[static_cast<std::size_t>(k)]; }

    std::size_t cells_along(int k) const { return breaks_[static_cast<std::size_t>(k)].size() - 1; }

    std::size_t cell_count() const noexcept
    {
        std::size_t c = 1;
        for (const auto& b : breaks_)
            c *= b.size() - 1;
        return c;
    }

    // cell i in row-major order with the graded axis varying slowest
    Cell cell(std::size_t i) const
    {
        Cell c{Point(dim_), Point(dim_)};
        for (int k = 0; k < dim_; ++k) {
            const auto& b = breaks_[static_cast<std::size_t>(k)];
            const std::size_t m = b.size() - 1;
            const std::size_t j = i % m;
            i /= m;
            c.lo[k] = b[j];
            c.hi[k] = b[j + 1];
        }
        return c;
    }

    std::vector<Cell> cells() const
    {
        std::vector<Cell> out;
        out.reserve(cell_count());
        for (std::size_t i = 0; i < cell_count(); ++i)
            out.push_back(cell(i));
        return out;
    }

    // height of the graded-axis cell adjacent to u = 0
    double innermost_height() const { return breaks_.back()[1]; }

private:
    int dim_;
    int levels_;
    double grading_;
    std::vector<std::vector<double>> breaks_;
};

namespace detail
{
inline std::vector<double> uniform_breaks(std::size_t m)
{
    std::vector<double> b(m + 1);
    for (std::size_t j = 0; j <= m; ++j)
        b[j] = static_cast<double>(j) / static_cast<double>(m);
    return b;
}

// geometric layers toward 0, listed ascending
inline std::vector<double> graded_breaks(int levels, double grading, const GridOptions& opt)
{
    int layers = 1 << std::min(levels + 1, 30);
    layers = std::min(layers, std::max(1, static_cast<int>(std::floor(opt.max_depth_log2 / grading))));
    const int per = std::max(1, opt.cells_per_layer);

    std::vector<double> b;
    b.reserve(static_cast<std::size_t>(layers * per + 2));
    b.push_back(0.0);
    for (int j = layers - 1; j >= 0; --j) {
        const double lo = std::exp2(-grading * (j + 1));
        const double hi = std::exp2(-grading * j);
        for (int k = 0; k < per; ++k)
            b.push_back(lo + (hi - lo) * k / per);
    }
    b.push_back(1.0);
    return b;
}
}// namespace detail

inline QuadratureGrid build_grid(int dim, int levels, double grading, const GridOptions& opt = {})
{
    if (levels < 1)
        throw InputError("build_grid: levels must be >= 1");
    if (dim < 1 || dim > kMaxDim)
        throw InputError("build_grid: bad dimension");
    if (!(grading >= 0.0) || !std::isfinite(grading))
        throw InputError("build_grid: grading must be finite and >= 0");

    std::vector<std::vector<double>> breaks;
    if (grading == 0.0) {
        const std::size_t m = std::size_t{1} << std::min(levels, 20);
        for (int k = 0; k < dim; ++k)
            breaks.push_back(detail::uniform_breaks(m));
    } else {
        for (int k = 0; k + 1 < dim; ++k)
            breaks.push_back(detail::uniform_breaks(static_cast<std::size_t>(std::max(1, opt.transverse_cells))));
        breaks.push_back(detail::graded_breaks(levels, grading, opt));
    }
    return QuadratureGrid(dim, levels, grading, std::move(breaks));
}

////////////////////////////////////////////////////////////////////////////////
//
// Regions: maps from the parameter cube onto physical domains
//
////////////////////////////////////////////////////////////////////////////////

// evaluation point and physical measure of one parameter cell
struct Node
{
    Point x;
    double measure = 0.0;
};

template <class R>
concept QuadratureRegion = requires(const R& r, const Cell& c) {
    { r.dim() } -> std::convertible_to<int>;
    { r.node(c) } -> std::same_as<Node>;
    { r.volume() } -> std::convertible_to<double>;
};

namespace detail
{
// int_{y0}^{y1} y^{k-1} dy and the centroid of that density, with y0 = rho y1
struct RadialCell
{
    double measure;
    double centroid;
};

inline RadialCell radial_cell(double y0, double y1, double k)
{
    if (y1 <= 0.0)
        return {0.0, 0.0};
    const double rho = y0 / y1;
    const double a = 1.0 - std::pow(rho, k);
    const double b = 1.0 - std::pow(rho, k + 1.0);
    const double measure = std::pow(y1, k) * a / k;
    const double centroid = k / (k + 1.0) * y1 * b / a;
    return {measure, centroid};
}
}// namespace detail

//
// axis-aligned box; graded toward the face x_n = lo_n
//
class Box
{
public:
    Box(Point lo, Point hi)
        : lo_(std::move(lo))
        , hi_(std::move(hi))
    {
        if (lo_.dim() != hi_.dim())
            throw InputError("Box: corner dimensions differ");
        for (int i = 0; i < lo_.dim(); ++i)
            if (!(hi_[i] > lo_[i]))
                throw InputError("Box: degenerate extent");
    }

    static Box unit(int n)
    {
        Point lo(n), hi(n);
        for (int i = 0; i < n; ++i)
            hi[i] = 1.0;
        return Box(lo, hi);
    }

    int dim() const noexcept { return lo_.dim(); }
    const Point& lo() const noexcept { return lo_; }
    const Point& hi() const noexcept { return hi_; }

    double volume() const noexcept
    {
        double v = 1.0;
        for (int i = 0; i < dim(); ++i)
            v *= hi_[i] - lo_[i];
        return v;
    }

    bool contains(const Point& x) const
    {
        for (int i = 0; i < dim(); ++i)
            if (!(x[i] > lo_[i] && x[i] < hi_[i]))
                return false;
        return true;
    }

    Node node(const Cell& c) const
    {
        Node nd{Point(dim()), 1.0};
        for (int i = 0; i < dim(); ++i) {
            const double w = hi_[i] - lo_[i];
            nd.x[i] = lo_[i] + w * 0.5 * (c.lo[i] + c.hi[i]);
            nd.measure *= w * (c.hi[i] - c.lo[i]);
        }
        return nd;
    }

private:
    Point lo_;
    Point hi_;
};

//
// offset + scale * H_g, optionally truncated to x_n < top (before scaling).
// Parametrized by collapsed coordinates x_i = t_i g_i(y), y = top * u.
//
class CuspRegion
{
public:
    explicit CuspRegion(CuspDomain domain, double top = 1.0, double scale = 1.0, Point offset = {})
        : domain_(std::move(domain))
        , top_(top)
        , scale_(scale)
        , offset_(offset.dim() == 0 ? Point(domain_.dim()) : std::move(offset))
    {
        if (!(top_ > 0.0 && top_ <= 1.0))
            throw InputError("CuspRegion: truncation height must be in (0, 1]");
        if (!(scale_ > 0.0))
            throw InputError("CuspRegion: scale must be positive");
        require_dim(offset_, domain_.dim(), "CuspRegion offset");
    }

    int dim() const noexcept { return domain_.dim(); }
    const CuspDomain& domain() const noexcept { return domain_; }
    double top() const noexcept { return top_; }
    double scale() const noexcept { return scale_; }
    const Point& offset() const noexcept { return offset_; }

    double volume() const
    {
        const double g = domain_.aggregate_gamma();
        return std::pow(scale_, dim()) * std::pow(top_, g) / g;
    }

    bool contains(const Point& x) const
    {
        Point y = x - offset_;
        y *= 1.0 / scale_;
        return domain_.contains(y) && y.last() < top_;
    }

    // map a parameter point (t_1..t_{n-1}, u) onto the region
    Point map(const Point& param) const
    {
        const int n = dim();
        Point x(n);
        const double y = top_ * param.last();
        for (int i = 0; i + 1 < n; ++i)
            x[i] = offset_[i] + scale_ * param[i] * domain_.profile(i, y);
        x[n - 1] = offset_[n - 1] + scale_ * y;
        return x;
    }

    Node node(const Cell& c) const
    {
        const int n = dim();
        const double g = domain_.aggregate_gamma();
        const auto rc = detail::radial_cell(top_ * c.lo.last(), top_ * c.hi.last(), g);
        Node nd{Point(n), rc.measure * std::pow(scale_, n)};
        for (int i = 0; i + 1 < n; ++i) {
            nd.measure *= c.hi[i] - c.lo[i];
            nd.x[i] = offset_[i] + scale_ * 0.5 * (c.lo[i] + c.hi[i]) * domain_.profile(i, rc.centroid);
        }
        nd.x[n - 1] = offset_[n - 1] + scale_ * rc.centroid;
        return nd;
    }

private:
    CuspDomain domain_;
    double top_;
    double scale_;
    Point offset_;
};

//
// Ball B(center, radius) in polar coordinates about a pole inside the closed
// ball; the graded axis is the radial one, so a singularity at the pole is
// resolved by the geometric layers.
//
class Ball
{
public:
    Ball(Point center, double radius)
        : Ball(center, radius, center)
    {
    }

    Ball(Point center, double radius, Point pole)
        : center_(std::move(center))
        , radius_(radius)
        , pole_(std::move(pole))
    {
        if (!(radius_ > 0.0) || !std::isfinite(radius_))
            throw InputError("Ball: radius must be positive");
        if (center_.dim() < 2)
            throw InputError("Ball: dimension must be >= 2");
        require_dim(pole_, center_.dim(), "Ball pole");
        if (distance(center_, pole_) > radius_ * (1.0 + 1e-12))
            throw InputError("Ball: pole must lie in the closed ball");
    }

    // polar coordinates about `singular` when it lies inside, else about the center
    static Ball around(Point center, double radius, const Point& singular)
    {
        if (distance(center, singular) < radius)
            return Ball(center, radius, singular);
        return Ball(center, radius);
    }

    int dim() const noexcept { return center_.dim(); }
    const Point& center() const noexcept { return center_; }
    double radius() const noexcept { return radius_; }
    const Point& pole() const noexcept { return pole_; }

    double volume() const { return ball_volume(dim(), radius_); }

    bool contains(const Point& x) const { return distance(x, center_) < radius_; }

    Node node(const Cell& c) const
    {
        const int n = dim();
        Point e(n);
        double angular = direction(c, e);

        // distance from the pole to the sphere along e
        const Point d = pole_ - center_;
        const double b = dot(d, e);
        const double reach = -b + std::sqrt(std::max(0.0, b * b - (d.norm2() - radius_ * radius_)));

        const auto rc = detail::radial_cell(c.lo.last(), c.hi.last(), n);
        Node nd{pole_ + (rc.centroid * reach) * e, angular * rc.measure * std::pow(reach, n)};
        return nd;
    }

private:
    // unit direction at the cell's angular midpoint; returns the exact solid
    // angle of the cell
    double direction(const Cell& c, Point& e) const
    {
        const int n = dim();
        double measure = 1.0;
        double sin_prod = 1.0;
        // polar angles phi_k in [0, pi], k = 0..n-3, then azimuth in [0, 2 pi)
        for (int k = 0; k + 2 < n; ++k) {
            const double a0 = std::numbers::pi * c.lo[k];
            const double a1 = std::numbers::pi * c.hi[k];
            const double mid = 0.5 * (a0 + a1);
            measure *= sin_power_integral(n - 2 - k, a0, a1);
            e[k] = sin_prod * std::cos(mid);
            sin_prod *= std::sin(mid);
        }
        const int az = n - 2;
        const double t0 = 2.0 * std::numbers::pi * c.lo[az];
        const double t1 = 2.0 * std::numbers::pi * c.hi[az];
        const double mid = 0.5 * (t0 + t1);
        measure *= t1 - t0;
        e[n - 2] = sin_prod * std::cos(mid);
        e[n - 1] = sin_prod * std::sin(mid);
        return measure;
    }

    // int_{a0}^{a1} sin^m(t) dt
    static double sin_power_integral(int m, double a0, double a1)
    {
        if (m == 0)
            return a1 - a0;
        if (m == 1)
            return std::cos(a0) - std::cos(a1);
        auto boundary = [m](double t) { return -std::pow(std::sin(t), m - 1) * std::cos(t) / m; };
        return boundary(a1) - boundary(a0) + (m - 1.0) / m * sin_power_integral(m - 2, a0, a1);
    }

    Point center_;
    double radius_;
    Point pole_;
};

// sum of physical cell measures
template <QuadratureRegion R>
double total_measure(const R& region, const QuadratureGrid& grid)
{
    return parallel_sum(grid.cell_count(), [&](std::size_t i) { return region.node(grid.cell(i)).measure; });
}

////////////////////////////////////////////////////////////////////////////////
//
// Integration with a finiteness verdict
//
////////////////////////////////////////////////////////////////////////////////

enum class Verdict
{
    Finite,
    Divergent,
    Inconclusive
};

inline const char* to_string(Verdict v)
{
    switch (v) {
        case Verdict::Finite: return "Finite";
        case Verdict::Divergent: return "Divergent";
        default: return "Inconclusive";
    }
}

struct IntegralVerdict
{
    double value = 0.0;
    Verdict verdict = Verdict::Inconclusive;
    std::vector<double> trace;

    bool finite() const noexcept { return verdict == Verdict::Finite; }
    bool divergent() const noexcept { return verdict == Verdict::Divergent; }
};

struct Schedule
{
    std::vector<int> levels{1, 2, 3, 4, 5, 6};
    double grading = 2.0;
    double rel_tol = 1e-3;
    double growth = 1.5;
    GridOptions grid;
};

using Integrand = std::function<double(const Point&)>;

namespace detail
{
inline Verdict judge(const std::vector<double>& trace, double rel_tol, double growth)
{
    const std::size_t k = trace.size();
    if (k >= 3) {
        const double a = std::abs(trace[k - 3]);
        const double b = std::abs(trace[k - 2]);
        const double c = std::abs(trace[k - 1]);
        if (b >= growth * a && c >= growth * b && c > 0.0)
            return Verdict::Divergent;
    }
    if (k >= 2) {
        const double prev = trace[k - 2];
        const double last = trace[k - 1];
        if (std::abs(last - prev) <= rel_tol * std::abs(last))
            return Verdict::Finite;
    }
    return Verdict::Inconclusive;
}
}// namespace detail

//
// Integrates every f in `fs` over the same sequence of grids, stopping once each
// has a Finite or Divergent verdict or the schedule is exhausted. All integrands
// share nodes at each level.
//
template <QuadratureRegion R>
std::vector<IntegralVerdict> integrate_many(const std::vector<Integrand>& fs, const R& region,
                                            const Schedule& schedule = {})
{
    if (schedule.levels.empty())
        throw InputError("integrate: empty refinement schedule");
    if (!(schedule.rel_tol > 0.0) || !(schedule.growth > 1.0))
        throw InputError("integrate: need rel_tol > 0 and growth > 1");

    std::vector<IntegralVerdict> out(fs.size());
    std::vector<bool> open(fs.size(), true);

    for (int level : schedule.levels) {
        const QuadratureGrid grid = build_grid(region.dim(), level, schedule.grading, schedule.grid);
        const std::size_t ncells = grid.cell_count();
        constexpr std::size_t chunk = 1024;
        const std::size_t nchunks = (ncells + chunk - 1) / chunk;
        std::vector<double> partial(nchunks * fs.size(), 0.0);

        parallel_for(
            nchunks,
            [&](std::size_t ch) {
                const std::size_t end = std::min(ncells, (ch + 1) * chunk);
                for (std::size_t i = ch * chunk; i < end; ++i) {
                    const Node nd = region.node(grid.cell(i));
                    if (nd.measure == 0.0)
                        continue;
                    for (std::size_t j = 0; j < fs.size(); ++j) {
                        if (!open[j])
                            continue;
                        const double v = fs[j](nd.x);
                        if (!std::isfinite(v))
                            throw EvaluationError("integrand is not finite at an interior node");
                        partial[ch * fs.size() + j] += v * nd.measure;
                    }
                }
            },
            1);

        for (std::size_t j = 0; j < fs.size(); ++j) {
            if (!open[j])
                continue;
            double s = 0.0;
            for (std::size_t ch = 0; ch < nchunks; ++ch)
                s += partial[ch * fs.size() + j];
            out[j].trace.push_back(s);
            out[j].value = s;
            out[j].verdict = detail::judge(out[j].trace, schedule.rel_tol, schedule.growth);
            if (out[j].verdict != Verdict::Inconclusive)
                open[j] = false;
        }
        if (std::none_of(open.begin(), open.end(), [](bool b) { return b; }))
            break;
    }
    return out;
}

template <QuadratureRegion R>
IntegralVerdict integrate(const Integrand& f, const R& region, const Schedule& schedule = {})
{
    return integrate_many(std::vector<Integrand>{f}, region, schedule).front();
}

// single fixed-grid estimate, no verdict
template <QuadratureRegion R>
double quadrature(const Integrand& f, const R& region, const QuadratureGrid& grid)
{
    return parallel_sum(grid.cell_count(), [&](std::size_t i) {
        const Node nd = region.node(grid.cell(i));
        return nd.measure == 0.0 ? 0.0 : f(nd.x) * nd.measure;
    });
}

}// namespace wsob
