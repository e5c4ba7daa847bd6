#pragma once

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "cuspmap.hpp"
#include "exponents.hpp"
#include "mollifier.hpp"
#include "pde.hpp"
#include "probe.hpp"
#include "weights.hpp"

namespace wsob
{

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchema = 1;

// JSON has no infinities; they are written as the strings "inf" / "-inf"
inline Json number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

inline Json numbers(const std::vector<double>& vs)
{
    Json a = Json::array();
    for (double v : vs)
        a.push_back(number(v));
    return a;
}

inline void to_json(Json& j, const IntegralVerdict& v)
{
    j = Json{{"verdict", to_string(v.verdict)}, {"value", number(v.value)}, {"trace", numbers(v.trace)}};
}

inline void to_json(Json& j, const ApReport& r)
{
    j = Json{{"verdict", to_string(r.verdict)},
             {"p", number(r.p)},
             {"sup_estimate", number(r.sup_estimate)},
             {"min_ratio", number(r.ratios.empty() ? kInf : *std::min_element(r.ratios.begin(), r.ratios.end()))},
             {"ball_count", r.ball_count},
             {"inconclusive_balls", r.inconclusive_balls}};
    if (r.analytic_range)
        j["analytic_alpha_range"] = Json::array({number(r.analytic_range->first), number(r.analytic_range->second)});
}

inline void to_json(Json& j, const DistortionReport& r)
{
    j = Json{{"n", r.n},
             {"p", number(r.p)},
             {"q", number(r.q)},
             {"r", number(r.r)},
             {"s", number(r.s)},
             {"a", number(r.a)},
             {"alpha", number(r.alpha)},
             {"gamma", number(r.gamma)},
             {"q_threshold", number(r.q_threshold)},
             {"s_bound", number(r.s_bound)},
             {"Ia", r.Ia},
             {"Ja", r.Ja},
             {"Ia_reduced", r.Ia_reduced},
             {"Ja_reduced", r.Ja_reduced},
             {"K_pq", number(r.K_pq())}};
}

inline Json exact(const Rational& x) { return Json{{"exact", to_string(x)}, {"value", number(to_double(x))}}; }

inline Json exact(const Bound<Rational>& b)
{
    if (b.infinite)
        return Json{{"exact", "inf"}, {"value", "inf"}};
    return exact(b.value);
}

inline void to_json(Json& j, const ThresholdReport<Rational>& r)
{
    j = Json{{"formula", to_string(r.formula)}, {"valid", r.valid()}};
    if (r.valid())
        j["s_max"] = exact(r.s_max);
    j["validity"] = r.validity;
    if (r.witness)
        j["witness"] = Json{{"a", exact(r.witness->a)}, {"q", exact(r.witness->q)}, {"r", exact(r.witness->r)}};
}

inline void to_json(Json& j, const KwReport& r)
{
    j = Json{{"inverse", r.inverse},
             {"direct", r.direct},
             {"inverse_norm", number(r.inverse_norm)},
             {"direct_norm", number(r.direct_norm)},
             {"K", number(r.K())}};
}

inline void to_json(Json& j, const CommutationReport& r)
{
    j = Json{{"max_discrepancy", number(r.max_discrepancy)},
             {"max_derivative", number(r.max_derivative)},
             {"samples", r.samples}};
}

inline void to_json(Json& j, const ConvergencePoint& c) { j = Json{{"r", number(c.r)}, {"norm", number(c.norm)}}; }

// summary only; vertex values go to CSV
inline void to_json(Json& j, const FemSolution& s)
{
    j = Json{{"vertices", s.mesh.vertex_count()},
             {"triangles", s.mesh.triangle_count()},
             {"h", number(s.mesh.h)},
             {"iterations", s.iterations},
             {"residual", number(s.residual)},
             {"energy", number(s.energy)},
             {"load_work", number(s.load_work)},
             {"weight_hypothesis", to_string(s.hypothesis)},
             {"warnings", s.warnings}};
}

inline void to_json(Json& j, const ErrorNorms& e) { j = Json{{"l2", number(e.l2)}, {"energy", number(e.energy)}}; }

inline void to_json(Json& j, const RateEstimate& r)
{
    j = Json{{"order", number(r.order)}, {"orders", numbers(r.orders)}, {"conclusive", r.conclusive}};
}

inline void to_json(Json& j, const ProbeReport& r)
{
    Json ratios = Json::array();
    for (const auto& [e, v] : r.ratios)
        ratios.push_back(Json::array({number(e), number(v)}));
    j = Json{{"s", number(r.s)},
             {"family", to_string(r.family)},
             {"verdict", to_string(r.verdict)},
             {"slope", number(r.slope)},
             {"ratios", ratios}};
}

}// namespace wsob
