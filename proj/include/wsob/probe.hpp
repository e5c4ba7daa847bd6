#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <utility>
#include <vector>

#include "exponents.hpp"
#include "geometry.hpp"
#include "weights.hpp"

namespace wsob
{

// A Lipschitz trial function given by its value and the norm of its gradient.
struct TrialFunction
{
    std::function<double(const Point&)> value;
    std::function<double(const Point&)> gradient_norm;

    TrialFunction scaled(double c) const
    {
        return {[f = value, c](const Point& x) { return c * f(x); },
                [g = gradient_norm, c](const Point& x) { return std::abs(c) * g(x); }};
    }
};

// max(0, 1 - |x - center|/eps)
inline TrialFunction hat(Point center, double eps)
{
    if (!(eps > 0.0))
        throw InputError("hat: radius must be positive");
    return {[=](const Point& x) { return std::max(0.0, 1.0 - distance(x, center) / eps); },
            [=](const Point& x) { return distance(x, center) < eps ? 1.0 / eps : 0.0; }};
}

// (max(|x|, eps)^-beta - 1)_+, flat inside the eps-ball
inline TrialFunction power_spike(double beta, double eps)
{
    if (!(beta > 0.0) || !(eps > 0.0 && eps < 1.0))
        throw InputError("power_spike: need beta > 0 and 0 < eps < 1");
    return {[=](const Point& x) { return std::max(0.0, std::pow(std::max(x.norm(), eps), -beta) - 1.0); },
            [=](const Point& x) {
                const double r = x.norm();
                return r > eps && r < 1.0 ? beta * std::pow(r, -beta - 1.0) : 0.0;
            }};
}

struct EmbeddingRatio
{
    double ratio = 0.0;
    double ls_norm = 0.0;
    double lp_norm = 0.0;
    double gradient_norm = 0.0;
    Verdict verdict = Verdict::Inconclusive;// worst of the three integrals
};

//
// ||u||_{L_s(D,w)} / (||u||_{L_p(D,w)} + ||grad u||_{L_p(D,w)}) by quadrature
// over `region`, which must cover the support of u inside D.
//
template <QuadratureRegion R>
EmbeddingRatio embedding_ratio(const TrialFunction& u, double p, double s, const Weight& w, const R& region,
                               const Schedule& schedule = {})
{
    if (!(p >= 1.0) || !(s >= 1.0))
        throw InputError("embedding_ratio: need p >= 1 and s >= 1");
    const std::vector<Integrand> fs{
        [&](const Point& x) {
            const double v = std::abs(u.value(x));
            return v == 0.0 ? 0.0 : w(x) * std::pow(v, s);
        },
        [&](const Point& x) {
            const double v = std::abs(u.value(x));
            return v == 0.0 ? 0.0 : w(x) * std::pow(v, p);
        },
        [&](const Point& x) {
            const double g = u.gradient_norm(x);
            return g == 0.0 ? 0.0 : w(x) * std::pow(g, p);
        }};
    const auto iv = integrate_many(fs, region, schedule);

    EmbeddingRatio out;
    out.ls_norm = std::pow(iv[0].value, 1.0 / s);
    out.lp_norm = std::pow(iv[1].value, 1.0 / p);
    out.gradient_norm = std::pow(iv[2].value, 1.0 / p);
    const double den = out.lp_norm + out.gradient_norm;
    if (!(den > 0.0))
        throw InputError("embedding_ratio: trial function vanishes on the region");
    out.ratio = out.ls_norm / den;

    out.verdict = Verdict::Finite;
    for (const auto& v : iv) {
        if (v.verdict == Verdict::Divergent)
            out.verdict = Verdict::Divergent;
        else if (v.verdict == Verdict::Inconclusive && out.verdict == Verdict::Finite)
            out.verdict = Verdict::Inconclusive;
    }
    return out;
}

////////////////////////////////////////////////////////////////////////////////
//
// Probes
//
////////////////////////////////////////////////////////////////////////////////

enum class Family
{
    TipBump,
    PowerSpike
};

inline const char* to_string(Family f) { return f == Family::TipBump ? "TipBump" : "PowerSpike"; }

enum class ProbeVerdict
{
    Bounded,
    BlowUp,
    Inconclusive
};

inline const char* to_string(ProbeVerdict v)
{
    switch (v) {
        case ProbeVerdict::Bounded: return "Bounded";
        case ProbeVerdict::BlowUp: return "BlowUp";
        default: return "Inconclusive";
    }
}

struct ProbeOptions
{
    Family family = Family::TipBump;
    std::vector<double> eps;  // decreasing; empty means the default schedule
    double growth = 1.5;      // BlowUp: total increase over the schedule
    double band = 0.2;        // Bounded: allowed increase over the last two decades
    double beta_fraction = 0.95;// PowerSpike exponent as a fraction of the critical one
    Schedule quadrature{{2, 3, 4, 5, 6}, 2.0, 1e-4, 1.5, {16, 64, 256.0}};
};

// 10^-1 ... 10^-5, two points per decade
inline std::vector<double> default_eps_schedule()
{
    std::vector<double> e;
    for (int k = 2; k <= 10; ++k)
        e.push_back(std::pow(10.0, -0.5 * k));
    return e;
}

struct ProbeReport
{
    double s = 0.0;
    Family family = Family::TipBump;
    std::vector<std::pair<double, double>> ratios;// (eps, ratio)
    double slope = 0.0;// least-squares d log(ratio) / d log(eps)
    ProbeVerdict verdict = ProbeVerdict::Inconclusive;
};

namespace detail
{
inline double loglog_slope(const std::vector<std::pair<double, double>>& pts)
{
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double m = static_cast<double>(pts.size());
    for (const auto& [e, r] : pts) {
        const double x = std::log(e), y = std::log(r);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double d = m * sxx - sx * sx;
    return d > 0.0 ? (m * sxy - sx * sy) / d : 0.0;
}
}// namespace detail

// verdict from ratios listed in schedule order (eps decreasing)
inline ProbeVerdict classify(const std::vector<std::pair<double, double>>& ratios, double growth, double band)
{
    if (ratios.size() < 2)
        return ProbeVerdict::Inconclusive;
    const double last_eps = ratios.back().first;
    std::size_t start = 0;
    while (start + 1 < ratios.size() && ratios[start].first > 100.0 * last_eps * (1.0 + 1e-9))
        ++start;
    const double base = ratios[start].second;

    bool rising = true;
    double top = base;
    for (std::size_t k = start + 1; k < ratios.size(); ++k) {
        rising = rising && ratios[k].second > ratios[k - 1].second;
        top = std::max(top, ratios[k].second);
    }
    if (rising && ratios.back().second >= growth * ratios.front().second)
        return ProbeVerdict::BlowUp;
    if (top < (1.0 + band) * base)
        return ProbeVerdict::Bounded;
    return ProbeVerdict::Inconclusive;
}

// H_g with equal exponents sigma and aggregate exponent gamma
inline CuspDomain probe_domain(int n, double gamma)
{
    return CuspDomain::holder(n, (gamma - 1.0) / (n - 1));
}

inline ProbeReport run_probe(const EmbeddingQuery<double>& q, double s, const ProbeOptions& opt = {})
{
    if (q.n < 2 || q.n > kMaxDim || !(q.p > 1.0) || !(q.gamma >= q.n) || !(s >= 1.0))
        throw InputError("run_probe: need 2 <= n <= 6, p > 1, gamma >= n, s >= 1");
    const std::vector<double> eps = opt.eps.empty() ? default_eps_schedule() : opt.eps;
    for (std::size_t k = 0; k < eps.size(); ++k)
        if (!(eps[k] > 0.0 && eps[k] < 1.0) || (k > 0 && !(eps[k] < eps[k - 1])))
            throw InputError("run_probe: eps schedule must be decreasing in (0, 1)");
    if (eps.size() < 2 || eps.front() / eps.back() < 1e4 * (1.0 - 1e-9))
        throw InputError("run_probe: eps schedule must span at least 4 decades");

    const CuspDomain dom = probe_domain(q.n, q.gamma);
    const Weight w = Weight::polynomial(q.n, q.alpha);
    double beta = 0.0;
    if (opt.family == Family::PowerSpike) {
        if (!(q.alpha + q.gamma > q.p))
            throw InputError("run_probe: PowerSpike needs alpha + gamma > p");
        beta = opt.beta_fraction * (q.alpha + q.gamma - q.p) / q.p;
    }

    ProbeReport rep;
    rep.s = s;
    rep.family = opt.family;
    bool conclusive = true;
    for (double e : eps) {
        EmbeddingRatio er;
        if (opt.family == Family::TipBump) {
            // support lies in |x| < eps, hence below x_n = eps
            er = embedding_ratio(hat(Point(q.n), e), q.p, s, w, CuspRegion(dom, e), opt.quadrature);
        } else {
            er = embedding_ratio(power_spike(beta, e), q.p, s, w, CuspRegion(dom), opt.quadrature);
        }
        conclusive = conclusive && er.verdict == Verdict::Finite;
        rep.ratios.emplace_back(e, er.ratio);
    }
    rep.slope = detail::loglog_slope(rep.ratios);
    rep.verdict = conclusive ? classify(rep.ratios, opt.growth, opt.band) : ProbeVerdict::Inconclusive;
    return rep;
}

inline std::vector<ProbeReport> sweep_probe(const EmbeddingQuery<double>& q, const std::vector<double>& ss,
                                            const ProbeOptions& opt = {})
{
    std::vector<ProbeReport> out;
    for (double s : ss)
        out.push_back(run_probe(q, s, opt));
    return out;
}

// every report at s <= (1-margin) s* is Bounded and every one at s >= (1+margin) s* is BlowUp
inline bool consistent_with_threshold(const std::vector<ProbeReport>& reps, double s_star, double margin = 0.2)
{
    for (const auto& r : reps) {
        if (r.s <= (1.0 - margin) * s_star && r.verdict != ProbeVerdict::Bounded)
            return false;
        if (r.s >= (1.0 + margin) * s_star && r.verdict != ProbeVerdict::BlowUp)
            return false;
    }
    return true;
}

inline void write_probe_csv(std::ostream& os, const ProbeReport& rep)
{
    const auto old = os.precision(17);
    os << "eps,ratio\n";
    for (const auto& [e, r] : rep.ratios)
        os << e << ',' << r << '\n';
    os.precision(old);
}

}// namespace wsob
