#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <type_traits>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "wsob/core.hpp"
#include "wsob/geometry.hpp"
#include "wsob/parallel.hpp"
#include "wsob/weights.hpp"

namespace wsob
{

//
// Smooth bump exp(-1/(1-|z|^2)) on the unit ball, scaled to unit mass.
//
// Convolutions use a fixed tensor Gauss-Legendre rule on [-1,1]^n whose
// kernel-weighted nodes are renormalized to total mass one; the rule is then
// exact on constants and, by symmetry, on linear functions.
//
class MollifierKernel
{
public:
    static constexpr int kNodes = 16;

    explicit MollifierKernel(int dim)
        : dim_(dim)
    {
        if (dim < 1 || dim > kMaxDim)
            throw InputError("mollifier kernel dimension out of range");

        using boost::math::quadrature::gauss_kronrod;
        const double radial = gauss_kronrod<double, 61>::integrate(
            [&](double r) { return bump(r * r) * std::pow(r, dim - 1); }, 0.0, 1.0, 15, 1e-14);
        mass_ = unit_sphere_area(dim) * radial;
        const double radial2 = gauss_kronrod<double, 61>::integrate(
            [&](double r) { return bump(r * r) * std::pow(r, dim + 1); }, 0.0, 1.0, 15, 1e-14);
        second_moment_ = unit_sphere_area(dim) * radial2 / mass_;

        build_rule();
    }

    int dim() const noexcept { return dim_; }

    // unnormalized profile
    static double bump(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

    // omega(z), integrating to one
    double operator()(const Point& z) const
    {
        require_dim(z, dim_, "MollifierKernel");
        return bump(z.norm2()) / mass_;
    }

    double mass() const noexcept { return mass_; }

    // int |z|^2 omega(z) dz
    double second_moment() const noexcept { return second_moment_; }

    const std::vector<Point>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

private:
    void build_rule()
    {
        using rule = boost::math::quadrature::gauss<double, kNodes>;
        std::array<double, kNodes> x{}, w{};
        const auto& abs = rule::abscissa();
        const auto& wts = rule::weights();
        for (int k = 0; k < kNodes / 2; ++k) {
            x[kNodes / 2 + k] = abs[k];
            x[kNodes / 2 - 1 - k] = -abs[k];
            w[kNodes / 2 + k] = wts[k];
            w[kNodes / 2 - 1 - k] = wts[k];
        }

        std::size_t total = 1;
        for (int i = 0; i < dim_; ++i)
            total *= kNodes;
        double sum = 0.0;
        std::vector<int> idx(dim_, 0);
        for (std::size_t t = 0; t < total; ++t) {
            Point z(dim_);
            double wt = 1.0;
            std::size_t rem = t;
            for (int i = 0; i < dim_; ++i) {
                idx[i] = static_cast<int>(rem % kNodes);
                rem /= kNodes;
                z[i] = x[idx[i]];
                wt *= w[idx[i]];
            }
            const double b = bump(z.norm2());
            if (b == 0.0)
                continue;
            nodes_.push_back(z);
            weights_.push_back(wt * b);
            sum += wt * b;
        }
        for (double& v : weights_)
            v /= sum;
    }

    int dim_;
    double mass_ = 1.0;
    double second_moment_ = 0.0;
    std::vector<Point> nodes_;
    std::vector<double> weights_;
};

// one kernel per dimension, built on first use
inline const MollifierKernel& kernel(int dim)
{
    static std::array<std::unique_ptr<MollifierKernel>, kMaxDim + 1> cache;
    static std::mutex m;
    if (dim < 1 || dim > kMaxDim)
        throw InputError("mollifier kernel dimension out of range");
    std::lock_guard lock(m);
    if (!cache[dim])
        cache[dim] = std::make_unique<MollifierKernel>(dim);
    return *cache[dim];
}

////////////////////////////////////////////////////////////////////////////////
//
// Convex polytope domains {a_k . x < b_k} with unit normals a_k, so the
// distance to the boundary is min_k (b_k - a_k . x).
//
////////////////////////////////////////////////////////////////////////////////

class PolytopeDomain
{
public:
    enum class Shape
    {
        Box,
        LipschitzCusp
    };

    static PolytopeDomain box(const Point& lo, const Point& hi)
    {
        require_dim(hi, lo.dim(), "PolytopeDomain::box");
        PolytopeDomain d(Shape::Box, lo.dim());
        d.lo_ = lo;
        d.hi_ = hi;
        for (int i = 0; i < lo.dim(); ++i) {
            if (!(hi[i] > lo[i]))
                throw InputError("PolytopeDomain::box: need lo < hi");
            Point a(lo.dim());
            a[i] = -1.0;
            d.add(a, -lo[i]);
            a[i] = 1.0;
            d.add(a, hi[i]);
        }
        return d;
    }

    static PolytopeDomain unit_cube(int n)
    {
        Point lo(n), hi(n);
        for (int i = 0; i < n; ++i)
            hi[i] = 1.0;
        return box(lo, hi);
    }

    // H_1 = {0 < x_i < x_n < 1}
    static PolytopeDomain lipschitz_cusp(int n)
    {
        if (n < 2 || n > kMaxDim)
            throw InputError("PolytopeDomain::lipschitz_cusp: dimension out of range");
        PolytopeDomain d(Shape::LipschitzCusp, n);
        const double s = 1.0 / std::sqrt(2.0);
        for (int i = 0; i + 1 < n; ++i) {
            Point a(n);
            a[i] = -1.0;
            d.add(a, 0.0);
            a[i] = s;
            a[n - 1] = -s;
            d.add(a, 0.0);
        }
        Point top(n);
        top[n - 1] = 1.0;
        d.add(top, 1.0);
        return d;
    }

    Shape shape() const noexcept { return shape_; }
    int dim() const noexcept { return dim_; }

    // signed: positive inside
    double boundary_distance(const Point& x) const
    {
        require_dim(x, dim_, "PolytopeDomain");
        double d = kInf;
        for (std::size_t k = 0; k < normals_.size(); ++k)
            d = std::min(d, offsets_[k] - dot(normals_[k], x));
        return d;
    }

    bool contains(const Point& x) const { return boundary_distance(x) > 0.0; }

    // D_delta as a quadrature region; for H_1 it is a shrunken copy of H_1
    std::variant<Box, CuspRegion> inset(double delta) const
    {
        if (!(delta >= 0.0))
            throw InputError("inset: delta must be nonnegative");
        if (shape_ == Shape::Box) {
            Point lo = lo_, hi = hi_;
            for (int i = 0; i < dim_; ++i) {
                lo[i] += delta;
                hi[i] -= delta;
                if (!(hi[i] > lo[i]))
                    throw InputError("inset: delta exceeds the box half-width");
            }
            return Box(lo, hi);
        }
        const double r2 = std::sqrt(2.0);
        const double scale = 1.0 - delta * (2.0 + r2);
        if (!(scale > 0.0))
            throw InputError("inset: delta exceeds the inradius of H_1");
        Point offset(dim_);
        for (int i = 0; i + 1 < dim_; ++i)
            offset[i] = delta;
        offset[dim_ - 1] = delta * (1.0 + r2);
        return CuspRegion(CuspDomain::lipschitz(dim_), 1.0, scale, offset);
    }

private:
    PolytopeDomain(Shape s, int n)
        : shape_(s)
        , dim_(n)
    {
    }

    void add(const Point& a, double b)
    {
        normals_.push_back(a);
        offsets_.push_back(b);
    }

    Shape shape_;
    int dim_;
    Point lo_, hi_;
    std::vector<Point> normals_;
    std::vector<double> offsets_;
};

////////////////////////////////////////////////////////////////////////////////
//
// A_r f(x) = r^{-n} int omega((x - z)/r) f(z) dz
//
////////////////////////////////////////////////////////////////////////////////

using ScalarField = std::function<double(const Point&)>;

struct MollifySpec
{
    double r = 0.1;
    double delta = 0.2;
    double p = 2.0;
    Weight weight = Weight::constant(2);
};

// no domain check
inline double mollify(const ScalarField& f, double r, const Point& x)
{
    if (!(r > 0.0))
        throw InputError("mollify: radius must be positive");
    const auto& k = kernel(x.dim());
    // Neumaier summation; the finite-difference checks divide this by h^2
    double s = 0.0, c = 0.0;
    const auto& nodes = k.nodes();
    const auto& w = k.weights();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double t = w[i] * f(x - r * nodes[i]);
        const double u = s + t;
        c += std::abs(s) >= std::abs(t) ? (s - u) + t : (t - u) + s;
        s = u;
    }
    return s + c;
}

inline double mollify(const ScalarField& f, const MollifySpec& spec, const Point& x, const PolytopeDomain& domain)
{
    if (!(spec.r > 0.0 && spec.r < spec.delta))
        throw InputError("mollify: need 0 < r < delta");
    if (!(domain.boundary_distance(x) >= spec.r))
        throw DomainError("mollify: ball B(x, r) leaves the domain");
    return mollify(f, spec.r, x);
}

////////////////////////////////////////////////////////////////////////////////
//
// commutation check: finite-difference D^alpha(A_r f) against A_r(D^alpha f)
//
////////////////////////////////////////////////////////////////////////////////

using MultiIndex = std::vector<int>;

namespace detail
{

// central difference of order |alpha| <= 2 with step h; the steps actually
// taken are (x + h) - x and x - (x - h), which differ from h by rounding
inline double central_difference(const ScalarField& g, const Point& x, const MultiIndex& alpha, double h)
{
    std::vector<int> axes;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        for (int k = 0; k < alpha[i]; ++k)
            axes.push_back(static_cast<int>(i));
    if (axes.empty())
        return g(x);
    auto up = [&](int i) { return (x[i] + h) - x[i]; };
    auto down = [&](int i) { return x[i] - (x[i] - h); };
    auto at = [&](int i, double si, int j = -1, double sj = 0.0) {
        Point y = x;
        y[i] += si;
        if (j >= 0)
            y[j] += sj;
        return g(y);
    };
    const int i = axes[0];
    const double a = up(i), b = down(i);
    if (axes.size() == 1)
        return (at(i, h) - at(i, -h)) / (a + b);
    const int j = axes[1];
    if (i == j)
        return 2.0 * (at(i, h) / (a * (a + b)) - g(x) / (a * b) + at(i, -h) / (b * (a + b)));
    const double c = up(j), d = down(j);
    return (at(i, h, j, h) - at(i, h, j, -h) - at(i, -h, j, h) + at(i, -h, j, -h)) / ((a + b) * (c + d));
}

}// namespace detail

struct CommutationReport
{
    double max_discrepancy = 0.0;
    double max_derivative = 0.0;// max |A_r(D^alpha f)| over the samples
    std::size_t samples = 0;
};

// `df` is the classical derivative D^alpha f
inline CommutationReport commutation_check(const ScalarField& f, const ScalarField& df, const MultiIndex& alpha,
                                           const MollifySpec& spec, const std::vector<Point>& samples,
                                           const PolytopeDomain& domain, double step = 1e-4)
{
    int order = 0;
    for (int a : alpha) {
        if (a < 0)
            throw InputError("commutation_check: negative multi-index entry");
        order += a;
    }
    if (order > 2)
        throw InputError("commutation_check: |alpha| <= 2 supported");
    if (static_cast<int>(alpha.size()) != domain.dim())
        throw InputError("commutation_check: multi-index length must equal the dimension");
    if (!(step > 0.0))
        throw InputError("commutation_check: step must be positive");

    std::vector<double> disc(samples.size()), mag(samples.size());
    parallel_for(
        samples.size(),
        [&](std::size_t i) {
            const Point& x = samples[i];
            if (!(domain.boundary_distance(x) >= spec.r + order * step))
                throw DomainError("commutation_check: sample too close to the boundary");
            const auto Af = [&](const Point& y) { return mollify(f, spec.r, y); };
            const double lhs = detail::central_difference(Af, x, alpha, step);
            const double rhs = mollify(df, spec, x, domain);
            disc[i] = std::abs(lhs - rhs);
            mag[i] = std::abs(rhs);
        },
        4);

    CommutationReport rep;
    rep.samples = samples.size();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        rep.max_discrepancy = std::max(rep.max_discrepancy, disc[i]);
        rep.max_derivative = std::max(rep.max_derivative, mag[i]);
    }
    return rep;
}

// uniform lattice of points in D_delta
inline std::vector<Point> inset_samples(const PolytopeDomain& domain, double delta, int per_axis)
{
    if (per_axis < 1)
        throw InputError("inset_samples: need at least one point per axis");
    const auto region = domain.inset(delta);
    std::vector<Point> pts;
    const int n = domain.dim();
    std::size_t total = 1;
    for (int i = 0; i < n; ++i)
        total *= static_cast<std::size_t>(per_axis);
    for (std::size_t t = 0; t < total; ++t) {
        Point u(n);
        std::size_t rem = t;
        for (int i = 0; i < n; ++i) {
            u[i] = (static_cast<double>(rem % per_axis) + 0.5) / per_axis;
            rem /= per_axis;
        }
        pts.push_back(std::visit(
            [&](const auto& reg) {
                if constexpr (std::is_same_v<std::decay_t<decltype(reg)>, Box>) {
                    Point x(n);
                    for (int i = 0; i < n; ++i)
                        x[i] = reg.lo()[i] + u[i] * (reg.hi()[i] - reg.lo()[i]);
                    return x;
                } else {
                    return reg.map(u);
                }
            },
            region));
    }
    return pts;
}

////////////////////////////////////////////////////////////////////////////////
//
// || A_r f - f | L_p(D_delta, w) || for a decreasing list of radii
//
////////////////////////////////////////////////////////////////////////////////

struct ConvergencePoint
{
    double r;
    double norm;
};

inline void require_ap(const Weight& w, double p)
{
    if (w.is_polynomial()) {
        const auto [lo, hi] = polynomial_ap_range(w.dim(), p);
        if (!(w.alpha() > lo && w.alpha() < hi))
            throw ValidityError("weight is not in A_p");
    } else if (ap_check(w, p).verdict == ApVerdict::Violated) {
        throw ValidityError("weight is not in A_p");
    }
}

// fixed uniform grid with 2^levels cells per parameter axis
inline std::vector<ConvergencePoint> convergence_test(const ScalarField& f, const Weight& w, double p, double delta,
                                                      const std::vector<double>& radii,
                                                      const PolytopeDomain& domain, int levels = 8)
{
    if (!(p >= 1.0))
        throw InputError("convergence_test: need p >= 1");
    require_dim(Point(domain.dim()), w.dim(), "convergence_test weight");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0 && radii[i] < delta))
            throw InputError("convergence_test: radii must lie in (0, delta)");
        if (i > 0 && !(radii[i] < radii[i - 1]))
            throw InputError("convergence_test: radii must decrease");
    }
    if (p > 1.0)
        require_ap(w, p);

    const auto region = domain.inset(delta);
    const auto grid = build_grid(domain.dim(), levels, 0.0);
    std::vector<ConvergencePoint> out;
    for (double r : radii) {
        const Integrand g = [&](const Point& x) {
            const double e = std::abs(mollify(f, r, x) - f(x));
            return e == 0.0 ? 0.0 : std::pow(e, p) * w(x);
        };
        const double integral = std::visit([&](const auto& reg) { return quadrature(g, reg, grid); }, region);
        out.push_back({r, std::pow(integral, 1.0 / p)});
    }
    return out;
}

}// namespace wsob
