#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wsob/core.hpp"
#include "wsob/geometry.hpp"
#include "wsob/weights.hpp"

namespace wsob
{

//
// phi_a : H_1 -> H_g,
//   phi_a(x) = (x_1 g_1^a(x_n) / x_n, ..., x_{n-1} g_{n-1}^a(x_n) / x_n, x_n^a)
//
// with g_i(t) = t^{gamma_i}; a homeomorphism of H_1 onto H_g for every a in (0, 1].
//
class CuspMap
{
public:
    CuspMap(double a, CuspDomain target)
        : a_(a)
        , target_(std::move(target))
        , source_(CuspDomain::lipschitz(target_.dim()))
    {
        if (!(a_ > 0.0 && a_ <= 1.0))
            throw InputError("CuspMap: a must lie in (0, 1]");
    }

    double a() const noexcept { return a_; }
    int dim() const noexcept { return target_.dim(); }
    const CuspDomain& target() const noexcept { return target_; }
    const CuspDomain& source() const noexcept { return source_; }

    // true for a = 1 with all gamma_i = 1
    bool is_identity() const noexcept { return a_ == 1.0 && target_.is_lipschitz(); }

    Point operator()(const Point& x) const
    {
        require_dim(x, dim(), "CuspMap");
        if (!source_.contains(x))
            throw InputError("CuspMap: point is not in H_1");
        return evaluate(x);
    }

    // formula without the membership check (for difference quotients)
    Point evaluate(const Point& x) const
    {
        const int n = dim();
        const double xn = x.last();
        Point y(n);
        for (int i = 0; i + 1 < n; ++i)
            y[i] = x[i] * std::pow(xn, a_ * gamma(i) - 1.0);
        y[n - 1] = std::pow(xn, a_);
        return y;
    }

    // x_n = y_n^{1/a}, x_i = y_i x_n / g_i^a(x_n)
    Point inverse(const Point& y) const
    {
        require_dim(y, dim(), "CuspMap::inverse");
        const int n = dim();
        if (!(y.last() > 0.0))
            throw DomainError("CuspMap::inverse: y_n must be positive");
        Point x(n);
        const double xn = std::pow(y.last(), 1.0 / a_);
        for (int i = 0; i + 1 < n; ++i)
            x[i] = y[i] * std::pow(xn, 1.0 - a_ * gamma(i));
        x[n - 1] = xn;
        return x;
    }

    Eigen::MatrixXd derivative(const Point& x) const
    {
        const int n = dim();
        require_dim(x, n, "CuspMap::derivative");
        const double xn = x.last();
        if (!(xn > 0.0))
            throw DomainError("CuspMap: derivative undefined at x_n = 0");
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i + 1 < n; ++i) {
            const double ag = a_ * gamma(i);
            // g_i^a / x_n
            d(i, i) = std::pow(xn, ag - 1.0);
            // -x_i g_i^a / x_n^2 + a x_i g_i^{a-1} g_i' / x_n
            d(i, n - 1) = x[i] * (ag - 1.0) * std::pow(xn, ag - 2.0);
        }
        d(n - 1, n - 1) = a_ * std::pow(xn, a_ - 1.0);
        return d;
    }

    // J(x, phi_a) = a x_n^{a-n} G^a(x_n)
    double jacobian(const Point& x) const
    {
        require_dim(x, dim(), "CuspMap::jacobian");
        const double xn = x.last();
        if (!(xn > 0.0))
            throw DomainError("CuspMap: Jacobian undefined at x_n = 0");
        const double gamma_total = target_.aggregate_gamma();
        return a_ * std::pow(xn, a_ - dim() + a_ * (gamma_total - 1.0));
    }

    // operator (spectral) norm of the derivative matrix
    double derivative_norm(const Point& x) const
    {
        const Eigen::MatrixXd d = derivative(x);
        if (d.rows() == 2) {
            const double fro2 = d.squaredNorm();
            const double det = d.determinant();
            const double disc = std::sqrt(std::max(0.0, fro2 * fro2 - 4.0 * det * det));
            return std::sqrt(0.5 * (fro2 + disc));
        }
        return Eigen::JacobiSVD<Eigen::MatrixXd>(d).singularValues()(0);
    }

    // c_1 with |D phi_a(x)| <= c_1 x_n^{a-1} on H_1 (Frobenius bound of the
    // entry-wise estimates x_i <= x_n, a gamma_i >= a)
    double derivative_bound_constant() const
    {
        double s = a_ * a_;
        for (int i = 0; i + 1 < dim(); ++i) {
            const double ag = a_ * gamma(i);
            s += 1.0 + (ag - 1.0) * (ag - 1.0);
        }
        return std::sqrt(s);
    }

private:
    double gamma(int i) const { return target_.exponents()[static_cast<std::size_t>(i)]; }

    double a_;
    CuspDomain target_;
    CuspDomain source_;
};

inline Point apply(const CuspMap& m, const Point& x) { return m(x); }
inline double jacobian(const CuspMap& m, const Point& x) { return m.jacobian(x); }
inline double derivative_norm(const CuspMap& m, const Point& x) { return m.derivative_norm(x); }

////////////////////////////////////////////////////////////////////////////////
//
// Quasiisometry estimate for a generic map on H_1
//
////////////////////////////////////////////////////////////////////////////////

using PointMap = std::function<Point(const Point&)>;

// central-difference Jacobian matrix
inline Eigen::MatrixXd finite_difference_derivative(const PointMap& f, const Point& x, double rel_step = 1e-6)
{
    const int n = x.dim();
    Eigen::MatrixXd d(n, n);
    for (int j = 0; j < n; ++j) {
        const double h = rel_step * std::max(std::abs(x[j]), rel_step);
        Point xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const Point fp = f(xp), fm = f(xm);
        const double span = xp[j] - xm[j];
        for (int i = 0; i < n; ++i)
            d(i, j) = (fp[i] - fm[i]) / span;
    }
    return d;
}

struct QuasiisometrySample
{
    // sample region at level k: H_1 intersected with x_n >= depths[k]
    std::vector<double> depths{1e-2, 1e-4, 1e-6, 1e-8};
    int pairs_per_level = 400;
    double relative_separation = 1e-5;
    double growth = 1.5;
    double tolerance = 1e-2;
    std::uint64_t seed = 1;
};

struct QuasiisometryReport
{
    std::vector<double> q_by_level;
    double q_estimate = 1.0;
    ApVerdict verdict = ApVerdict::Inconclusive;
    // Q^{-n} <= |J| <= Q^n at every sampled point
    bool jacobian_within_bounds = true;
};

inline QuasiisometryReport check_quasiisometry(const PointMap& f, int dim, const QuasiisometrySample& spec = {})
{
    if (spec.depths.empty() || spec.pairs_per_level < 1)
        throw InputError("check_quasiisometry: empty sample specification");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss;

    QuasiisometryReport rep;
    std::vector<double> jacobians;
    for (double depth : spec.depths) {
        double q = 1.0;
        for (int k = 0; k < spec.pairs_per_level; ++k) {
            Point x(dim);
            x[dim - 1] = std::pow(depth, unit(rng));
            for (int i = 0; i + 1 < dim; ++i)
                x[i] = (0.05 + 0.9 * unit(rng)) * x.last();
            Point u(dim);
            for (int i = 0; i < dim; ++i)
                u[i] = gauss(rng);
            u *= spec.relative_separation * x.last() / u.norm();
            const Point y = x + u;

            const double sep = distance(x, y);
            const double quotient = distance(f(x), f(y)) / sep;
            q = std::max({q, quotient, 1.0 / quotient});
            jacobians.push_back(std::abs(finite_difference_derivative(f, x).determinant()));
        }
        rep.q_by_level.push_back(q);
    }
    rep.q_estimate = rep.q_by_level.back();

    const auto& t = rep.q_by_level;
    const std::size_t k = t.size();
    if (k >= 3 && t[k - 1] >= spec.growth * t[k - 2] && t[k - 2] >= spec.growth * t[k - 3])
        rep.verdict = ApVerdict::Violated;
    else if (k >= 2 && std::abs(t[k - 1] - t[k - 2]) <= spec.tolerance * t[k - 1])
        rep.verdict = ApVerdict::Satisfied;

    const double qn = std::pow(rep.q_estimate, dim);
    for (double j : jacobians)
        if (j < (1.0 - 1e-6) / qn || j > qn * (1.0 + 1e-6))
            rep.jacobian_within_bounds = false;
    return rep;
}

////////////////////////////////////////////////////////////////////////////////
//
// Distortion integrals of phi_a with the weight w(y) = |y|^alpha:
//
//   I_a = int_{H_1} ( |D phi|^p / (J w(phi)) )^{q/(p-q)} dx = K_{p,q}^{pq/(p-q)}
//   J_a = int_{H_1} ( J w(phi) )^{r/(r-s)} dx
//
// Both are evaluated from the exact integrands. The 1-D power bounds obtained
// by the estimates |D phi| <= c x_n^{a-1}, |phi|^alpha ~ x_n^{a alpha} are
// reported alongside.
//
////////////////////////////////////////////////////////////////////////////////

// q < n p / (a(alpha+gamma) + p - a p)
inline double ia_threshold(int n, double p, double a, double alpha, double gamma)
{
    return n * p / (a * (alpha + gamma) + p - a * p);
}

// s < a(alpha+gamma) r / n
inline double ja_threshold(int n, double r, double a, double alpha, double gamma)
{
    return a * (alpha + gamma) * r / n;
}

inline IntegralVerdict distortion_Ia(double p, double q, const CuspMap& map, double alpha,
                                     const Schedule& schedule = {})
{
    if (!(q < p))
        throw InputError("distortion_Ia: need q < p");
    if (!(q >= 1.0))
        throw InputError("distortion_Ia: need q >= 1");
    const double e = q / (p - q);
    const auto w = Weight::polynomial(map.dim(), alpha);
    const CuspRegion h1(map.source());
    return integrate(
        [&](const Point& x) {
            const double ratio = std::pow(map.derivative_norm(x), p) / (map.jacobian(x) * w(map.evaluate(x)));
            return std::pow(ratio, e);
        },
        h1, schedule);
}

inline IntegralVerdict jacobian_Ja(double r, double s, const CuspMap& map, double alpha,
                                   const Schedule& schedule = {})
{
    if (!(s < r))
        throw InputError("jacobian_Ja: need s < r");
    const double e = r / (r - s);
    const auto w = Weight::polynomial(map.dim(), alpha);
    const CuspRegion h1(map.source());
    return integrate([&](const Point& x) { return std::pow(map.jacobian(x) * w(map.evaluate(x)), e); }, h1,
                     schedule);
}

// int_0^1 x^{(p(a-1) - a(alpha+1) + n) q/(p-q) + n - 1} G^{-a q/(p-q)}(x) dx
inline IntegralVerdict reduced_Ia(double p, double q, const CuspMap& map, double alpha, const Schedule& schedule = {})
{
    if (!(q < p))
        throw InputError("reduced_Ia: need q < p");
    const int n = map.dim();
    const double a = map.a();
    const double e = q / (p - q);
    const double gm1 = map.target().aggregate_gamma() - 1.0;
    const double power = (p * (a - 1.0) - a * (alpha + 1.0) + n) * e + n - 1.0 - a * e * gm1;
    return integrate([power](const Point& x) { return std::pow(x[0], power); }, Box::unit(1), schedule);
}

// int_0^1 x^{(a(alpha+1) - n) r/(r-s) + n - 1 + a r/(r-s) (gamma-1)} dx
inline IntegralVerdict reduced_Ja(double r, double s, const CuspMap& map, double alpha, const Schedule& schedule = {})
{
    if (!(s < r))
        throw InputError("reduced_Ja: need s < r");
    const int n = map.dim();
    const double a = map.a();
    const double e = r / (r - s);
    const double gm1 = map.target().aggregate_gamma() - 1.0;
    const double power = (a * (alpha + 1.0) - n) * e + n - 1.0 + a * e * gm1;
    return integrate([power](const Point& x) { return std::pow(x[0], power); }, Box::unit(1), schedule);
}

struct DistortionReport
{
    int n = 2;
    double p = 2, q = 1, r = 2, s = 1;
    double a = 1;
    double alpha = 0;
    double gamma = 2;
    IntegralVerdict Ia;
    IntegralVerdict Ja;
    IntegralVerdict Ia_reduced;
    IntegralVerdict Ja_reduced;
    double q_threshold = 0;
    double s_bound = 0;

    // K_{p,q}(H_1, w) = I_a^{(p-q)/(pq)} when I_a is finite
    double K_pq() const { return Ia.finite() ? std::pow(Ia.value, (p - q) / (p * q)) : kInf; }
};

inline DistortionReport distortion_report(double p, double q, double r, double s, const CuspMap& map, double alpha,
                                          const Schedule& schedule = {})
{
    DistortionReport rep;
    rep.n = map.dim();
    rep.p = p;
    rep.q = q;
    rep.r = r;
    rep.s = s;
    rep.a = map.a();
    rep.alpha = alpha;
    rep.gamma = map.target().aggregate_gamma();
    rep.q_threshold = ia_threshold(rep.n, p, rep.a, alpha, rep.gamma);
    rep.s_bound = ja_threshold(rep.n, r, rep.a, alpha, rep.gamma);
    rep.Ia = distortion_Ia(p, q, map, alpha, schedule);
    rep.Ja = jacobian_Ja(r, s, map, alpha, schedule);
    rep.Ia_reduced = reduced_Ia(p, q, map, alpha, schedule);
    rep.Ja_reduced = reduced_Ja(r, s, map, alpha, schedule);
    return rep;
}

struct SweepPoint
{
    double exponent;
    IntegralVerdict result;
};

// I_a over a list of q values
inline std::vector<SweepPoint> sweep_Ia(double p, const std::vector<double>& qs, const CuspMap& map, double alpha,
                                        const Schedule& schedule = {})
{
    std::vector<SweepPoint> out;
    for (double q : qs)
        out.push_back({q, distortion_Ia(p, q, map, alpha, schedule)});
    return out;
}

// J_a over a list of s values
inline std::vector<SweepPoint> sweep_Ja(double r, const std::vector<double>& ss, const CuspMap& map, double alpha,
                                        const Schedule& schedule = {})
{
    std::vector<SweepPoint> out;
    for (double s : ss)
        out.push_back({s, jacobian_Ja(r, s, map, alpha, schedule)});
    return out;
}

}// namespace wsob
