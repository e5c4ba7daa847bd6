#pragma once

#include <cctype>
#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "wsob/core.hpp"
#include "wsob/geometry.hpp"
#include "wsob/weights.hpp"

namespace wsob
{

using Rational = boost::multiprecision::cpp_rational;

template <class S>
double to_double(const S& x)
{
    return static_cast<double>(x);
}

// Exact value of a decimal literal: "2", "-0.75", "1.5e-3", "7/3".
inline Rational parse_rational(std::string_view text)
{
    auto fail = [&]() -> Rational { throw InputError("not a rational literal: '" + std::string(text) + "'"); };
    std::string s(text);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    s = s.substr(b);
    if (s.empty())
        return fail();

    if (const auto slash = s.find('/'); slash != std::string::npos) {
        const Rational num = parse_rational(s.substr(0, slash));
        const Rational den = parse_rational(s.substr(slash + 1));
        if (den == 0)
            return fail();
        return num / den;
    }

    std::size_t i = 0;
    bool neg = false;
    if (s[i] == '+' || s[i] == '-')
        neg = s[i++] == '-';
    boost::multiprecision::cpp_int digits = 0;
    int scale = 0, ndigits = 0;
    bool dot = false;
    for (; i < s.size(); ++i) {
        const char c = s[i];
        if (c >= '0' && c <= '9') {
            digits = digits * 10 + (c - '0');
            ++ndigits;
            if (dot)
                --scale;
        } else if (c == '.' && !dot) {
            dot = true;
        } else {
            break;
        }
    }
    if (ndigits == 0)
        return fail();
    if (i < s.size()) {
        if (s[i] != 'e' && s[i] != 'E')
            return fail();
        int e = 0;
        const char* first = s.data() + i + 1;
        const char* last = s.data() + s.size();
        if (first < last && *first == '+')
            ++first;
        const auto [ptr, ec] = std::from_chars(first, last, e);
        if (ec != std::errc() || ptr != last || first == last || e > 4000 || e < -4000)
            return fail();
        scale += e;
    }
    Rational out(digits);
    const boost::multiprecision::cpp_int ten = 10;
    if (scale > 0)
        out *= Rational(boost::multiprecision::pow(ten, scale));
    else if (scale < 0)
        out /= Rational(boost::multiprecision::pow(ten, -scale));
    return neg ? Rational(-out) : out;
}

inline std::string to_string(const Rational& x)
{
    return x.str();
}

////////////////////////////////////////////////////////////////////////////////
//
// Queries and reports
//
////////////////////////////////////////////////////////////////////////////////

template <class S = double>
struct EmbeddingQuery
{
    int n = 2;
    S p = S(2);
    S alpha = S(0);
    S gamma = S(2);
    int m = 1;

    S sigma() const { return (gamma - S(1)) / S(n - 1); }

    static EmbeddingQuery with_sigma(int n, S p, S alpha, S sigma, int m = 1)
    {
        return {n, p, alpha, sigma * S(n - 1) + S(1), m};
    }
};

enum class Formula
{
    Thm6,
    Thm8,
    Cor2,
    Besov,
    Thm9,
    Cor3,
    Cor4,
    Lemma3
};

inline const char* to_string(Formula f)
{
    switch (f) {
        case Formula::Thm6: return "Thm6";
        case Formula::Thm8: return "Thm8";
        case Formula::Cor2: return "Cor2";
        case Formula::Besov: return "Besov";
        case Formula::Thm9: return "Thm9";
        case Formula::Cor3: return "Cor3";
        case Formula::Cor4: return "Cor4";
        default: return "Lemma3";
    }
}

// threshold value, possibly +inf
template <class S>
struct Bound
{
    S value = S(0);
    bool infinite = false;

    static Bound inf() { return {S(0), true}; }
    double as_double() const { return infinite ? kInf : to_double(value); }
    friend bool operator==(const Bound&, const Bound&) = default;
};

template <class S>
struct Witness
{
    S a, q, r;
};

template <class S>
struct ThresholdReport
{
    Bound<S> s_max;
    Formula formula = Formula::Thm6;
    std::vector<std::string> validity;// violated preconditions
    std::optional<Witness<S>> witness;

    bool valid() const { return validity.empty(); }
};

namespace detail
{

template <class S>
std::vector<std::string> query_violations(const EmbeddingQuery<S>& q)
{
    std::vector<std::string> v;
    if (q.n < 2 || q.n > kMaxDim)
        v.push_back("2 <= n <= 6");
    if (!(q.p > S(1)))
        v.push_back("p > 1");
    if (!(q.gamma >= S(q.n)))
        v.push_back("gamma >= n");
    if (q.m < 1)
        v.push_back("m >= 1");
    return v;
}

template <class S>
void require_ap_window(const EmbeddingQuery<S>& q, std::vector<std::string>& v)
{
    if (!(q.alpha > S(-q.n) && q.alpha < S(q.n) * (q.p - S(1))))
        v.push_back("-n < alpha < n(p-1)");
}

template <class S>
ThresholdReport<S> ratio_report(Formula f, std::vector<std::string> v, const S& num, const S& den)
{
    ThresholdReport<S> rep;
    rep.formula = f;
    if (v.empty() && !(den > S(0)))
        v.push_back("positive denominator");
    rep.validity = std::move(v);
    if (rep.valid())
        rep.s_max.value = num / den;
    return rep;
}

}// namespace detail

////////////////////////////////////////////////////////////////////////////////
//
// Closed-form thresholds
//
////////////////////////////////////////////////////////////////////////////////

// (alpha + gamma) p / (alpha + gamma - p)
template <class S>
ThresholdReport<S> thm6_threshold(const EmbeddingQuery<S>& q)
{
    auto v = detail::query_violations(q);
    detail::require_ap_window(q, v);
    const S ag = q.alpha + q.gamma;
    if (!(q.p < ag))
        v.push_back("p < alpha + gamma");
    return detail::ratio_report<S>(Formula::Thm6, std::move(v), ag * q.p, ag - q.p);
}

// same threshold written through sigma
template <class S>
ThresholdReport<S> cor2_threshold(const EmbeddingQuery<S>& q)
{
    auto v = detail::query_violations(q);
    detail::require_ap_window(q, v);
    const S sn = q.sigma() * S(q.n - 1);
    if (!(q.p < q.alpha + q.gamma))
        v.push_back("p < alpha + gamma");
    return detail::ratio_report<S>(
        Formula::Cor2, std::move(v), (sn + S(1) + q.alpha) * q.p, sn + q.alpha - (q.p - S(1)));
}

// (n + alpha) p / (sigma (alpha + n - 1) - (p - 1))
template <class S>
ThresholdReport<S> besov_threshold(const EmbeddingQuery<S>& q)
{
    auto v = detail::query_violations(q);
    const S n(q.n);
    return detail::ratio_report<S>(
        Formula::Besov, std::move(v), (n + q.alpha) * q.p, q.sigma() * (q.alpha + n - S(1)) - (q.p - S(1)));
}

// (alpha + gamma) p / (gamma - p), unweighted gradient norm
template <class S>
ThresholdReport<S> thm8_threshold(const EmbeddingQuery<S>& q)
{
    auto v = detail::query_violations(q);
    if (!(q.p < q.gamma))
        v.push_back("p < gamma");
    if (!(q.alpha + q.gamma > S(0)))
        v.push_back("alpha + gamma > 0");
    return detail::ratio_report<S>(Formula::Thm8, std::move(v), (q.alpha + q.gamma) * q.p, q.gamma - q.p);
}

// q with 1/p - 1/q = 1/p0 - 1/q0
template <class S>
S lemma3_transfer(const S& p0, const S& q0, const S& p)
{
    if (!(p0 > S(0) && q0 > S(0) && p > S(0)))
        throw ValidityError("lemma3_transfer: exponents must be positive");
    if (!(p >= p0))
        throw ValidityError("lemma3_transfer: need p >= p0");
    const S inv = S(1) / p - S(1) / p0 + S(1) / q0;
    if (!(inv > S(0)))
        throw ValidityError("lemma3_transfer: need 1/p > 1/p0 - 1/q0");
    return S(1) / inv;
}

// p p0 q0 / (p0 q0 - m p (q0 - p0)); +inf once the denominator stops being positive
template <class S>
ThresholdReport<S> cor4_bound(const S& p0, const S& qstar0, const S& p, int m)
{
    ThresholdReport<S> rep;
    rep.formula = m == 1 ? Formula::Cor3 : Formula::Cor4;
    if (m < 1)
        rep.validity.push_back("m >= 1");
    if (!(p0 > S(0) && qstar0 > S(0)))
        rep.validity.push_back("p0, q0 > 0");
    if (!(p >= p0))
        rep.validity.push_back("p >= p0");
    if (!rep.valid())
        return rep;
    const S den = p0 * qstar0 - S(m) * p * (qstar0 - p0);
    if (den > S(0))
        rep.s_max.value = p * p0 * qstar0 / den;
    else
        rep.s_max = Bound<S>::inf();
    return rep;
}

template <class S>
ThresholdReport<S> cor3_bound(const S& p0, const S& qstar0, const S& p)
{
    return cor4_bound(p0, qstar0, p, 1);
}

// p s / (s - m (s - p)); +inf once the denominator stops being positive
template <class S>
ThresholdReport<S> thm9_sstar(const S& p, const S& s, int m)
{
    ThresholdReport<S> rep;
    rep.formula = Formula::Thm9;
    if (m < 1)
        rep.validity.push_back("m >= 1");
    if (!(p > S(0) && s > S(0)))
        rep.validity.push_back("p, s > 0");
    if (!rep.valid())
        return rep;
    const S den = s - S(m) * (s - p);
    if (den > S(0))
        rep.s_max.value = p * s / den;
    else
        rep.s_max = Bound<S>::inf();
    return rep;
}

////////////////////////////////////////////////////////////////////////////////
//
// Constructive certificate for the compact range
//
////////////////////////////////////////////////////////////////////////////////

// all three strict inequalities of the chain s -> r -> q -> p
template <class S>
bool witness_holds(const EmbeddingQuery<S>& qy, const S& s, const Witness<S>& w)
{
    const S n(qy.n);
    const S ag = qy.alpha + qy.gamma;
    if (!(w.a > S(0) && w.a < S(1) && w.q < n))
        return false;
    return w.q < n * qy.p / (w.a * ag + qy.p - w.a * qy.p) && w.r < n * w.q / (n - w.q)
        && s < w.a * ag * w.r / n;
}

// a on the grid k/1001, then q and r at the midpoints of their feasible
// intervals, with q in [1, n) and r > s. A first pass also keeps q < p so the
// distortion integral stays defined; when alpha + gamma < n that can be
// impossible and the second pass drops it.
template <class S>
std::optional<Witness<S>> select_witness(const EmbeddingQuery<S>& qy, const S& s, int grid = 1000)
{
    const auto thr = thm6_threshold(qy);
    if (!thr.valid() || !(s > S(0)) || !(s < thr.s_max.value))
        return std::nullopt;

    const S n(qy.n);
    const S ag = qy.alpha + qy.gamma;
    for (bool below_p : {true, false}) {
        for (int k = 1; k <= grid; ++k) {
            const S a = S(k) / S(grid + 1);
            S qhi = n * qy.p / (a * ag + qy.p - a * qy.p);
            if (n < qhi)
                qhi = n;
            if (below_p && qy.p < qhi)
                qhi = qy.p;
            S qlo = n * s / (a * ag + s);
            if (const S t = n * s / (n + s); qlo < t)
                qlo = t;
            if (qlo < S(1))
                qlo = S(1);
            if (!(qlo < qhi))
                continue;
            const S q = (qlo + qhi) / S(2);

            S rlo = n * s / (a * ag);
            if (rlo < s)
                rlo = s;
            const S rhi = n * q / (n - q);
            if (!(rlo < rhi))
                continue;
            const Witness<S> w{a, q, (rlo + rhi) / S(2)};
            if (witness_holds(qy, s, w))
                return w;
        }
    }
    return std::nullopt;
}

// threshold report with a witness attached for the given s
template <class S>
ThresholdReport<S> thm6_report(const EmbeddingQuery<S>& qy, const S& s)
{
    auto rep = thm6_threshold(qy);
    rep.witness = select_witness(qy, s);
    return rep;
}

////////////////////////////////////////////////////////////////////////////////
//
// Weight integrability K(w)
//
//   || w^{-1/p} | L_{pq/(p-q)} ||  and  || w^{1/s} | L_{rs/(r-s)} ||
//
////////////////////////////////////////////////////////////////////////////////

struct KwReport
{
    IntegralVerdict inverse;// int w^{-q/(p-q)}
    IntegralVerdict direct; // int w^{r/(r-s)}
    double inverse_norm = 0.0;
    double direct_norm = 0.0;

    double K() const { return std::max(inverse_norm, direct_norm); }
};

namespace detail
{

template <QuadratureRegion R>
IntegralVerdict weight_power_integral(const Weight& w, double e, const R& region, const Schedule& schedule)
{
    try {
        return integrate([&](const Point& x) { return w.power(x, e); }, region, schedule);
    } catch (const EvaluationError&) {
        IntegralVerdict v;
        v.value = kInf;
        v.verdict = Verdict::Divergent;
        return v;
    }
}

inline double norm_from(const IntegralVerdict& v, double exponent)
{
    return v.divergent() ? kInf : std::pow(v.value, 1.0 / exponent);
}

}// namespace detail

template <QuadratureRegion R>
KwReport thm3_Kw(
    const Weight& w, const R& region, double p, double q, double r, double s, const Schedule& schedule = {})
{
    if (!(q < p) || !(s < r) || !(q > 0.0) || !(s > 0.0))
        throw InputError("thm3_Kw: need 0 < q < p and 0 < s < r");
    require_dim(Point(region.dim()), w.dim(), "thm3_Kw region");
    KwReport rep;
    rep.inverse = detail::weight_power_integral(w, -q / (p - q), region, schedule);
    rep.direct = detail::weight_power_integral(w, r / (r - s), region, schedule);
    rep.inverse_norm = detail::norm_from(rep.inverse, p * q / (p - q));
    rep.direct_norm = detail::norm_from(rep.direct, r * s / (r - s));
    return rep;
}

}// namespace wsob
