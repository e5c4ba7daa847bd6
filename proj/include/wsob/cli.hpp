#pragma once

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "report.hpp"

namespace wsob::cli
{

using wsob::to_string;

enum class Command
{
    ApCheck,
    Exponents,
    Distortion,
    Mollify,
    Solve,
    Probe,
    Report
};

inline constexpr std::array<std::pair<Command, std::string_view>, 7> kCommands{{
    {Command::ApCheck, "ap-check"},
    {Command::Exponents, "exponents"},
    {Command::Distortion, "distortion"},
    {Command::Mollify, "mollify"},
    {Command::Solve, "solve"},
    {Command::Probe, "probe"},
    {Command::Report, "report"},
}};

inline std::string to_string(Command c)
{
    for (const auto& [k, name] : kCommands)
        if (k == c)
            return std::string(name);
    return "?";
}

inline std::optional<Command> parse_command(std::string_view s)
{
    for (const auto& [k, name] : kCommands)
        if (name == s)
            return k;
    return std::nullopt;
}

enum ExitCode : int
{
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kValidityError = 3,
    kInconclusive = 4
};

struct ConfigError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

////////////////////////////////////////////////////////////////////////////////
//
// Config file: INI sections named after commands, typed access, unknown keys
// rejected
//
////////////////////////////////////////////////////////////////////////////////

using KeyValues = std::map<std::string, std::string>;

namespace detail
{
inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep = ',')
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto k = s.find(sep, start);
        out.push_back(trim(s.substr(start, k == std::string_view::npos ? std::string_view::npos : k - start)));
        if (k == std::string_view::npos)
            break;
        start = k + 1;
    }
    return out;
}

inline std::optional<double> to_real(std::string_view s)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

inline std::optional<long long> to_integer(std::string_view s)
{
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        return std::nullopt;
    return v;
}
}// namespace detail

class Section
{
public:
    Section(std::string name, KeyValues kv)
        : name_(std::move(name))
        , kv_(std::move(kv))
    {
    }

    const std::string& name() const noexcept { return name_; }
    const KeyValues& values() const noexcept { return kv_; }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string text(const std::string& key) const
    {
        const auto it = kv_.find(key);
        if (it == kv_.end())
            fail(key, "missing required key");
        used_.insert(key);
        return it->second;
    }

    std::string text(const std::string& key, const std::string& fallback) const
    {
        return has(key) ? text(key) : fallback;
    }

    double real(const std::string& key) const
    {
        const auto v = detail::to_real(text(key));
        if (!v)
            fail(key, "not a finite number");
        return *v;
    }

    double real(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }

    int integer(const std::string& key) const
    {
        const auto v = detail::to_integer(text(key));
        if (!v || *v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max())
            fail(key, "not an integer");
        return static_cast<int>(*v);
    }

    int integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

    Rational rational(const std::string& key) const
    {
        try {
            return parse_rational(text(key));
        } catch (const InputError&) {
            fail(key, "not a decimal or a/b rational");
        }
    }

    std::vector<double> reals(const std::string& key) const
    {
        std::vector<double> out;
        for (const auto& item : detail::split(text(key))) {
            const auto v = detail::to_real(item);
            if (!v)
                fail(key, "list entry '" + item + "' is not a finite number");
            out.push_back(*v);
        }
        return out;
    }

    std::vector<double> reals(const std::string& key, std::vector<double> fallback) const
    {
        return has(key) ? reals(key) : fallback;
    }

    std::string choice(const std::string& key, const std::vector<std::string>& options,
                       const std::string& fallback) const
    {
        const std::string v = text(key, fallback);
        if (std::find(options.begin(), options.end(), v) == options.end())
            fail(key, "'" + v + "' is not one of the accepted values");
        return v;
    }

    // every key must have been read
    void finish() const
    {
        for (const auto& [k, v] : kv_)
            if (!used_.count(k))
                fail(k, "unknown key");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const
    {
        throw ConfigError("[" + name_ + "] " + key + ": " + what);
    }

private:
    std::string name_;
    KeyValues kv_;
    mutable std::set<std::string> used_;
};

struct Config
{
    std::filesystem::path directory;// relative paths in the config resolve against this
    std::map<std::string, KeyValues> sections;

    const KeyValues* find(const std::string& name) const
    {
        const auto it = sections.find(name);
        return it == sections.end() ? nullptr : &it->second;
    }
};

inline Config parse_config(std::istream& is, std::filesystem::path directory = {})
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ptree_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    Config cfg;
    cfg.directory = std::move(directory);
    for (const auto& [name, sec] : tree) {
        if (sec.empty())
            throw ConfigError("config: key '" + name + "' outside a section");
        const auto cmd = parse_command(name);
        if (!cmd || *cmd == Command::Report)
            throw ConfigError("config: unknown section [" + name + "]");
        KeyValues kv;
        for (const auto& [k, v] : sec)
            kv[k] = detail::trim(v.data());
        cfg.sections[name] = std::move(kv);
    }
    if (cfg.sections.empty())
        throw ConfigError("config: no sections");
    return cfg;
}

inline Config load_config(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("config: cannot open " + path.string());
    return parse_config(is, path.parent_path());
}

////////////////////////////////////////////////////////////////////////////////
//
// Command outcomes
//
////////////////////////////////////////////////////////////////////////////////

struct Outcome
{
    Json result = Json::object();
    std::map<std::string, std::string> files;// extra outputs, name -> content
    int status = kOk;

    void raise(int code)
    {
        // validity outranks inconclusiveness
        if (code == kValidityError || (code == kInconclusive && status == kOk))
            status = code;
    }
};

inline const char* status_name(int code)
{
    switch (code) {
        case kOk: return "ok";
        case kValidityError: return "validity";
        case kInconclusive: return "inconclusive";
        default: return "error";
    }
}

namespace detail
{
inline std::string csv_number(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline Weight parse_weight(const Section& s, int n)
{
    const std::string kind = s.choice("weight", {"polynomial", "tabulated"}, "polynomial");
    try {
        if (kind == "polynomial")
            return Weight::polynomial(n, s.real("alpha", 0.0));
        return Weight::tabulated(n, s.reals("profile_radii"), s.reals("profile_values"));
    } catch (const InputError& e) {
        s.fail("weight", e.what());
    }
}

inline int parse_dim(const Section& s, int lo = 2, int hi = kMaxDim)
{
    const int n = s.integer("n", 2);
    if (n < lo || n > hi)
        s.fail("n", "dimension out of range");
    return n;
}
}// namespace detail

// ap-check ////////////////////////////////////////////////////////////////////

struct ApCheckArgs
{
    Weight weight = Weight::constant(2);
    double p = 2.0;
    BallFamily family;
};

inline ApCheckArgs parse_ap_check(const Section& s, std::uint64_t seed)
{
    ApCheckArgs a;
    const int n = detail::parse_dim(s, 2);
    a.weight = detail::parse_weight(s, n);
    a.p = s.real("p");
    if (!(a.p > 1.0))
        s.fail("p", "need p > 1");
    a.family.min_radius = s.real("min_radius", a.family.min_radius);
    a.family.max_radius = s.real("max_radius", a.family.max_radius);
    a.family.radius_count = s.integer("radius_count", a.family.radius_count);
    a.family.random_count = s.integer("random_count", a.family.random_count);
    if (!(a.family.min_radius > 0.0) || !(a.family.max_radius >= a.family.min_radius) || a.family.radius_count < 1 ||
        a.family.random_count < 0)
        s.fail("min_radius", "need 0 < min_radius <= max_radius, radius_count >= 1, random_count >= 0");
    a.family.seed = seed;
    s.finish();
    return a;
}

inline Outcome run_ap_check(const ApCheckArgs& a)
{
    Outcome out;
    const auto rep = ap_check(a.weight, a.p, a.family);
    out.result = rep;
    const auto balls = sample_balls(a.weight, a.family);
    std::ostringstream csv;
    csv << "ball,radius";
    for (int i = 0; i < a.weight.dim(); ++i)
        csv << ",c" << i;
    csv << ",ratio\n";
    for (std::size_t k = 0; k < balls.size(); ++k) {
        csv << k << ',' << detail::csv_number(balls[k].radius());
        for (int i = 0; i < a.weight.dim(); ++i)
            csv << ',' << detail::csv_number(balls[k].center()[i]);
        csv << ',' << detail::csv_number(rep.ratios[k]) << '\n';
    }
    out.files["balls.csv"] = csv.str();
    if (rep.verdict == ApVerdict::Inconclusive)
        out.raise(kInconclusive);
    return out;
}

// exponents ///////////////////////////////////////////////////////////////////

struct ExponentsArgs
{
    std::vector<Formula> formulas{Formula::Thm6};
    int m = 1;
    std::optional<EmbeddingQuery<Rational>> query;
    std::optional<Rational> s, p0, q0, thm9_s;
    std::optional<std::filesystem::path> batch;
};

namespace detail
{
inline const std::vector<std::pair<std::string, Formula>>& formula_names()
{
    static const std::vector<std::pair<std::string, Formula>> names{
        {"thm6", Formula::Thm6}, {"cor2", Formula::Cor2}, {"thm8", Formula::Thm8}, {"besov", Formula::Besov}};
    return names;
}

inline ThresholdReport<Rational> threshold(Formula f, const EmbeddingQuery<Rational>& q)
{
    switch (f) {
        case Formula::Cor2: return cor2_threshold(q);
        case Formula::Thm8: return thm8_threshold(q);
        case Formula::Besov: return besov_threshold(q);
        default: return thm6_threshold(q);
    }
}

inline EmbeddingQuery<Rational> make_query(int n, Rational p, Rational alpha, Rational gamma, int m)
{
    return {n, std::move(p), std::move(alpha), std::move(gamma), m};
}
}// namespace detail

inline ExponentsArgs parse_exponents(const Section& s, const Config& cfg)
{
    ExponentsArgs a;
    if (s.has("formulas")) {
        a.formulas.clear();
        for (const auto& name : detail::split(s.text("formulas"))) {
            const auto& names = detail::formula_names();
            const auto it = std::find_if(names.begin(), names.end(), [&](const auto& kv) { return kv.first == name; });
            if (it == names.end())
                s.fail("formulas", "unknown formula '" + name + "'");
            a.formulas.push_back(it->second);
        }
    }
    a.m = s.integer("m", 1);
    if (s.has("batch")) {
        for (const char* k : {"n", "p", "alpha", "gamma", "sigma", "s", "p0", "q0", "thm9_s"})
            if (s.has(k))
                s.fail(k, "batch runs take queries from the batch file only");
        std::filesystem::path path = s.text("batch");
        a.batch = path.is_absolute() ? path : cfg.directory / path;
        s.finish();
        return a;
    }
    const int n = s.integer("n");
    const Rational p = s.rational("p");
    const Rational alpha = s.has("alpha") ? s.rational("alpha") : Rational(0);
    if (s.has("gamma") == s.has("sigma"))
        s.fail("gamma", "give exactly one of gamma and sigma");
    const Rational gamma = s.has("gamma") ? s.rational("gamma") : s.rational("sigma") * Rational(n - 1) + Rational(1);
    a.query = detail::make_query(n, p, alpha, gamma, a.m);
    if (s.has("s"))
        a.s = s.rational("s");
    if (s.has("p0") != s.has("q0"))
        s.fail("p0", "p0 and q0 go together");
    if (s.has("p0")) {
        a.p0 = s.rational("p0");
        a.q0 = s.rational("q0");
    }
    if (s.has("thm9_s"))
        a.thm9_s = s.rational("thm9_s");
    s.finish();
    return a;
}

namespace detail
{
inline Json query_json(const EmbeddingQuery<Rational>& q)
{
    return Json{{"n", q.n},
                {"p", exact(q.p)},
                {"alpha", exact(q.alpha)},
                {"gamma", exact(q.gamma)},
                {"sigma", exact(q.sigma())},
                {"m", q.m}};
}

inline std::string csv_field(std::string s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char c : s)
        q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

inline std::string join(const std::vector<std::string>& v, const char* sep)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? sep : "") + v[i];
    return out;
}

// rows "n,p,alpha,gamma[,m]" after a header line
inline std::vector<EmbeddingQuery<Rational>> read_batch(const std::filesystem::path& path, int default_m)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("batch: cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line))
        throw ConfigError("batch: empty file");
    const auto header = split(line);
    const bool with_m = header.size() == 5;
    if (header.size() < 4 || header.size() > 5 || header[0] != "n" || header[1] != "p" || header[2] != "alpha" ||
        header[3] != "gamma" || (with_m && header[4] != "m"))
        throw ConfigError("batch: header must be n,p,alpha,gamma[,m]");
    std::vector<EmbeddingQuery<Rational>> out;
    int row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (trim(line).empty())
            continue;
        const auto f = split(line);
        if (f.size() != header.size())
            throw ConfigError("batch: row " + std::to_string(row) + " has the wrong number of fields");
        const auto n = to_integer(f[0]);
        const auto m = with_m ? to_integer(f[4]) : std::optional<long long>(default_m);
        if (!n || !m)
            throw ConfigError("batch: row " + std::to_string(row) + ": n and m must be integers");
        try {
            out.push_back(make_query(static_cast<int>(*n), parse_rational(f[1]), parse_rational(f[2]),
                                     parse_rational(f[3]), static_cast<int>(*m)));
        } catch (const InputError& e) {
            throw ConfigError("batch: row " + std::to_string(row) + ": " + e.what());
        }
    }
    return out;
}
}// namespace detail

inline Outcome run_exponents(const ExponentsArgs& a)
{
    Outcome out;
    if (a.batch) {
        const auto queries = detail::read_batch(*a.batch, a.m);
        std::ostringstream csv;
        csv << "n,p,alpha,gamma,m,formula,valid,s_max_exact,s_max,validity\n";
        int invalid = 0;
        for (const auto& q : queries) {
            for (Formula f : a.formulas) {
                const auto r = detail::threshold(f, q);
                invalid += r.valid() ? 0 : 1;
                csv << q.n << ',' << to_string(q.p) << ',' << to_string(q.alpha) << ',' << to_string(q.gamma) << ','
                    << q.m << ',' << to_string(f) << ',' << (r.valid() ? "true" : "false") << ',';
                if (r.valid())
                    csv << (r.s_max.infinite ? "inf" : to_string(r.s_max.value)) << ','
                        << detail::csv_number(r.s_max.as_double());
                else
                    csv << ',';
                csv << ',' << detail::csv_field(detail::join(r.validity, "; ")) << '\n';
            }
        }
        out.files["exponents.csv"] = csv.str();
        out.result = Json{{"batch", a.batch->filename().string()},
                          {"queries", queries.size()},
                          {"rows", queries.size() * a.formulas.size()},
                          {"invalid_rows", invalid}};
        return out;
    }

    const auto& q = *a.query;
    out.result["query"] = detail::query_json(q);
    Json th = Json::array();
    for (Formula f : a.formulas) {
        const auto r = detail::threshold(f, q);
        if (!r.valid())
            out.raise(kValidityError);
        th.push_back(r);
    }
    out.result["thresholds"] = th;
    if (a.s) {
        const auto r = thm6_report(q, *a.s);
        if (!r.valid())
            out.raise(kValidityError);
        out.result["witness_query"] = Json{{"s", exact(*a.s)}, {"report", r}};
    }
    if (a.p0) {
        Json t{{"p0", exact(*a.p0)}, {"q0", exact(*a.q0)}};
        try {
            t["lemma3"] = exact(lemma3_transfer(*a.p0, *a.q0, q.p));
        } catch (const ValidityError& e) {
            t["lemma3"] = Json{{"valid", false}, {"validity", std::vector<std::string>{e.what()}}};
            out.raise(kValidityError);
        }
        const auto c = cor4_bound(*a.p0, *a.q0, q.p, q.m);
        if (!c.valid())
            out.raise(kValidityError);
        t["bound"] = c;
        out.result["transfer"] = t;
    }
    if (a.thm9_s) {
        const auto r = thm9_sstar(q.p, *a.thm9_s, q.m);
        if (!r.valid())
            out.raise(kValidityError);
        out.result["thm9"] = Json{{"s", exact(*a.thm9_s)}, {"report", r}};
    }
    return out;
}

// distortion //////////////////////////////////////////////////////////////////

struct DistortionArgs
{
    int n = 2;
    double p = 2, q = 1, r = 2, s = 1, a = 1, alpha = 0, gamma = 2;
    std::vector<double> q_list, s_list;
};

inline DistortionArgs parse_distortion(const Section& s)
{
    DistortionArgs d;
    d.n = detail::parse_dim(s);
    d.p = s.real("p");
    d.q = s.real("q");
    d.r = s.real("r");
    d.s = s.real("s");
    d.a = s.real("a");
    d.alpha = s.real("alpha", 0.0);
    d.gamma = s.real("gamma");
    d.q_list = s.reals("q_list", {});
    d.s_list = s.reals("s_list", {});
    if (!(d.gamma >= d.n))
        s.fail("gamma", "need gamma >= n");
    if (!(d.a > 0.0 && d.a <= 1.0))
        s.fail("a", "need 0 < a <= 1");
    auto check_q = [&](double q) {
        if (!(q > 0.0 && q < d.p))
            s.fail("q", "need 0 < q < p");
    };
    auto check_s = [&](double v) {
        if (!(v > 0.0 && v < d.r))
            s.fail("s", "need 0 < s < r");
    };
    check_q(d.q);
    check_s(d.s);
    for (double v : d.q_list)
        check_q(v);
    for (double v : d.s_list)
        check_s(v);
    s.finish();
    return d;
}

inline Outcome run_distortion(const DistortionArgs& d)
{
    Outcome out;
    const CuspMap map(d.a, probe_domain(d.n, d.gamma));
    const auto rep = distortion_report(d.p, d.q, d.r, d.s, map, d.alpha);
    out.result["report"] = rep;
    if (rep.Ia.verdict == Verdict::Inconclusive || rep.Ja.verdict == Verdict::Inconclusive)
        out.raise(kInconclusive);
    if (!d.q_list.empty() || !d.s_list.empty()) {
        std::ostringstream csv;
        csv << "integral,exponent,verdict,value\n";
        Json sweep = Json::array();
        auto emit = [&](const char* which, const std::vector<SweepPoint>& pts) {
            for (const auto& pt : pts) {
                csv << which << ',' << detail::csv_number(pt.exponent) << ',' << to_string(pt.result.verdict) << ','
                    << detail::csv_number(pt.result.value) << '\n';
                sweep.push_back(Json{{"integral", which},
                                     {"exponent", number(pt.exponent)},
                                     {"verdict", to_string(pt.result.verdict)}});
                if (pt.result.verdict == Verdict::Inconclusive)
                    out.raise(kInconclusive);
            }
        };
        emit("Ia", sweep_Ia(d.p, d.q_list, map, d.alpha));
        emit("Ja", sweep_Ja(d.r, d.s_list, map, d.alpha));
        out.result["sweep"] = sweep;
        out.files["sweep.csv"] = csv.str();
    }
    return out;
}

// mollify /////////////////////////////////////////////////////////////////////

// Test functions g(k . x) with k_i = 3/(i+1), so D^a f = k^a g^{(|a|)}(k . x);
// "kink" is Lipschitz only and skips the commutation check.
struct CorpusFunction
{
    ScalarField f;
    std::function<double(const Point&, const MultiIndex&)> derivative;// empty for kink
};

inline CorpusFunction corpus_function(const std::string& name, int n)
{
    auto kdot = [n](const Point& x) {
        double t = 0.0;
        for (int i = 0; i < n; ++i)
            t += 3.0 / (i + 1) * x[i];
        return t;
    };
    auto kpow = [](const MultiIndex& a) {
        double c = 1.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            c *= std::pow(3.0 / static_cast<double>(i + 1), a[i]);
        return c;
    };
    auto order = [](const MultiIndex& a) {
        int m = 0;
        for (int v : a)
            m += v;
        return m;
    };
    if (name == "exp")
        return {[=](const Point& x) { return std::exp(0.3 * kdot(x)); },
                [=](const Point& x, const MultiIndex& a) {
                    return std::pow(0.3, order(a)) * kpow(a) * std::exp(0.3 * kdot(x));
                }};
    if (name == "sine")
        return {[=](const Point& x) { return std::sin(kdot(x)); },
                [=](const Point& x, const MultiIndex& a) {
                    const double t = kdot(x);
                    const int m = order(a) % 4;
                    const double g = m == 0 ? std::sin(t) : m == 1 ? std::cos(t) : m == 2 ? -std::sin(t) : -std::cos(t);
                    return kpow(a) * g;
                }};
    if (name == "cubic")
        return {[=](const Point& x) { return std::pow(0.3 * kdot(x), 3); },
                [=](const Point& x, const MultiIndex& a) {
                    const double t = 0.3 * kdot(x);
                    const int m = order(a);
                    const double g = m == 0 ? t * t * t : m == 1 ? 3.0 * t * t : m == 2 ? 6.0 * t : 6.0;
                    return std::pow(0.3, m) * kpow(a) * g;
                }};
    return {[](const Point& x) { return std::abs(x[0] - 1.0 / 3.0); }, {}};
}

struct MollifyArgs
{
    int n = 2;
    std::string domain = "square";
    std::string function = "sine";
    double delta = 0.1;
    double p = 2.0;
    Weight weight = Weight::constant(2);
    std::vector<double> radii{0.08, 0.04, 0.02};
    int levels = 8;
    int samples_per_axis = 6;
    double step = 1e-4;
};

inline MollifyArgs parse_mollify(const Section& s)
{
    MollifyArgs a;
    a.n = detail::parse_dim(s, 1, 3);
    a.domain = s.choice("domain", {"square", "cusp"}, a.domain);
    if (a.domain == "cusp" && a.n < 2)
        s.fail("domain", "the cusp needs n >= 2");
    a.function = s.choice("function", {"exp", "sine", "cubic", "kink"}, a.function);
    a.delta = s.real("delta", a.delta);
    a.p = s.real("p", a.p);
    a.weight = detail::parse_weight(s, a.n);
    a.radii = s.reals("radii", a.radii);
    a.levels = s.integer("levels", a.levels);
    a.samples_per_axis = s.integer("samples_per_axis", a.samples_per_axis);
    a.step = s.real("step", a.step);
    if (!(a.p >= 1.0))
        s.fail("p", "need p >= 1");
    if (a.radii.empty())
        s.fail("radii", "need at least one radius");
    for (std::size_t i = 0; i < a.radii.size(); ++i)
        if (!(a.radii[i] > 0.0 && a.radii[i] < a.delta) || (i > 0 && !(a.radii[i] < a.radii[i - 1])))
            s.fail("radii", "radii must decrease inside (0, delta)");
    if (a.levels < 1 || a.levels > 12)
        s.fail("levels", "need 1 <= levels <= 12");
    if (a.samples_per_axis < 1)
        s.fail("samples_per_axis", "need at least 1");
    if (!(a.step > 0.0))
        s.fail("step", "need step > 0");
    s.finish();
    return a;
}

inline Outcome run_mollify(const MollifyArgs& a)
{
    Outcome out;
    const auto domain = a.domain == "square" ? PolytopeDomain::unit_cube(a.n) : PolytopeDomain::lipschitz_cusp(a.n);
    const auto fn = corpus_function(a.function, a.n);
    if (fn.derivative) {
        const auto samples = inset_samples(domain, a.delta, a.samples_per_axis);
        std::vector<MultiIndex> indices;
        for (int i = 0; i < a.n; ++i) {
            MultiIndex e(static_cast<std::size_t>(a.n), 0);
            e[static_cast<std::size_t>(i)] = 1;
            indices.push_back(e);
            for (int j = i; j < a.n; ++j) {
                MultiIndex e2 = e;
                e2[static_cast<std::size_t>(j)] += 1;
                indices.push_back(e2);
            }
        }
        Json comm = Json::array();
        double worst = 0.0;
        for (const auto& idx : indices) {
            CommutationReport rep;
            for (double r : a.radii) {
                const MollifySpec spec{r, a.delta, a.p, a.weight};
                const auto c = commutation_check(
                    fn.f, [&](const Point& x) { return fn.derivative(x, idx); }, idx, spec, samples, domain, a.step);
                rep.max_discrepancy = std::max(rep.max_discrepancy, c.max_discrepancy);
                rep.max_derivative = std::max(rep.max_derivative, c.max_derivative);
                rep.samples = c.samples;
            }
            worst = std::max(worst, rep.max_discrepancy);
            comm.push_back(Json{{"index", idx}, {"report", rep}});
        }
        out.result["commutation"] = comm;
        out.result["max_discrepancy"] = number(worst);
    }
    const auto seq = convergence_test(fn.f, a.weight, a.p, a.delta, a.radii, domain, a.levels);
    std::ostringstream csv;
    csv << "r,norm\n";
    bool decreasing = true;
    for (std::size_t k = 0; k < seq.size(); ++k) {
        csv << detail::csv_number(seq[k].r) << ',' << detail::csv_number(seq[k].norm) << '\n';
        decreasing = decreasing && (k == 0 || seq[k].norm < seq[k - 1].norm);
    }
    out.result["convergence"] = seq;
    out.result["decreasing"] = decreasing;
    out.files["convergence.csv"] = csv.str();
    return out;
}

// solve ///////////////////////////////////////////////////////////////////////

struct SolveArgs
{
    std::string domain = "square";
    double h = 1.0 / 16.0;
    double grading = 1.0;
    double gamma1 = 2.0;
    double eps_geo = 1e-3;
    std::optional<std::filesystem::path> mesh_file;
    double alpha = 0.0;
    std::string rhs = "constant";
    double load = 1.0;
    SolverOptions solver;
};

inline SolveArgs parse_solve(const Section& s, const Config& cfg)
{
    SolveArgs a;
    a.domain = s.choice("domain", {"square", "cusp", "file"}, a.domain);
    if (a.domain == "file") {
        std::filesystem::path path = s.text("mesh");
        a.mesh_file = path.is_absolute() ? path : cfg.directory / path;
    } else {
        a.h = s.real("h", a.h);
        a.grading = s.real("grading", a.grading);
        if (!(a.h > 0.0 && a.h <= 0.5))
            s.fail("h", "need 0 < h <= 0.5");
        if (!(a.grading >= 1.0))
            s.fail("grading", "need grading >= 1");
    }
    if (a.domain == "cusp") {
        a.gamma1 = s.real("gamma1", a.gamma1);
        a.eps_geo = s.real("eps_geo", a.eps_geo);
        if (!(a.gamma1 >= 1.0))
            s.fail("gamma1", "need gamma1 >= 1");
        if (!(a.eps_geo > 0.0 && a.eps_geo < 1.0))
            s.fail("eps_geo", "need 0 < eps_geo < 1");
    }
    a.alpha = s.real("alpha", a.alpha);
    a.rhs = s.choice("rhs", {"constant", "manufactured"}, a.rhs);
    if (a.rhs == "constant")
        a.load = s.real("load", a.load);
    else if (a.domain != "square")
        s.fail("rhs", "the manufactured solution lives on the unit square");
    a.solver.tol = s.real("tol", a.solver.tol);
    a.solver.max_iterations = s.integer("max_iterations", a.solver.max_iterations);
    if (!(a.solver.tol > 0.0) || a.solver.max_iterations < 0)
        s.fail("tol", "need tol > 0 and max_iterations >= 0");
    s.finish();
    return a;
}

namespace detail
{
constexpr double kPi = 3.14159265358979323846;

inline double sinsin(const Point& x) { return std::sin(kPi * x[0]) * std::sin(kPi * x[1]); }

inline std::array<double, 2> grad_sinsin(const Point& x)
{
    return {kPi * std::cos(kPi * x[0]) * std::sin(kPi * x[1]), kPi * std::sin(kPi * x[0]) * std::cos(kPi * x[1])};
}

// -div(|x|^a grad u) for u = sin(pi x) sin(pi y)
inline Field2 manufactured_load(double a)
{
    return [a](const Point& x) {
        const double r = x.norm();
        const auto g = grad_sinsin(x);
        const double radial = a == 0.0 ? 0.0 : a * std::pow(r, a - 2.0) * (x[0] * g[0] + x[1] * g[1]);
        return -radial + 2.0 * kPi * kPi * std::pow(r, a) * sinsin(x);
    };
}
}// namespace detail

inline Outcome run_solve(const SolveArgs& a)
{
    Outcome out;
    Mesh mesh;
    if (a.mesh_file) {
        std::ifstream is(*a.mesh_file);
        if (!is)
            throw ConfigError("[solve] mesh: cannot open " + a.mesh_file->string());
        try {
            mesh = read_mesh(is);
        } catch (const InputError& e) {
            throw ConfigError(std::string("[solve] mesh: ") + e.what());
        }
    } else if (a.domain == "square") {
        mesh = triangulate_square(a.h, a.grading);
    } else {
        mesh = triangulate_cusp(a.gamma1, a.h, a.eps_geo, a.grading);
    }
    const Weight w = Weight::polynomial(2, a.alpha);
    const Field2 f = a.rhs == "manufactured" ? detail::manufactured_load(a.alpha)
                                             : Field2([v = a.load](const Point&) { return v; });
    try {
        const auto sol = solve_dirichlet(mesh, w, f, a.solver);
        out.result["solution"] = sol;
        out.result["weak_residual"] = number(weak_residual(sol, w, f));
        if (a.rhs == "manufactured")
            out.result["errors"] = solution_errors(sol, w, detail::sinsin, detail::grad_sinsin);
        std::ostringstream csv;
        write_solution_csv(csv, sol);
        out.files["solution.csv"] = csv.str();
    } catch (const SolverError& e) {
        out.result["error"] = e.what();
        out.raise(kInconclusive);
    }
    return out;
}

// probe ///////////////////////////////////////////////////////////////////////

struct ProbeArgs
{
    EmbeddingQuery<double> query;
    std::vector<double> s_list;
    ProbeOptions options;
    double margin = 0.2;
};

inline ProbeArgs parse_probe(const Section& s)
{
    ProbeArgs a;
    a.query.n = detail::parse_dim(s);
    a.query.p = s.real("p");
    a.query.alpha = s.real("alpha", 0.0);
    a.query.gamma = s.real("gamma");
    a.s_list = s.reals("s");
    a.options.family = s.choice("family", {"tip-bump", "power-spike"}, "tip-bump") == "tip-bump" ? Family::TipBump
                                                                                                  : Family::PowerSpike;
    const double eps_max = s.real("eps_max", 1e-1);
    const double eps_min = s.real("eps_min", 1e-5);
    const int per_decade = s.integer("points_per_decade", 2);
    a.margin = s.real("margin", a.margin);
    if (!(a.query.p > 1.0) || !(a.query.gamma >= a.query.n))
        s.fail("p", "need p > 1 and gamma >= n");
    for (double v : a.s_list)
        if (!(v >= 1.0))
            s.fail("s", "need s >= 1");
    if (!(eps_max < 1.0 && eps_min > 0.0 && eps_max / eps_min >= 1e4 * (1.0 - 1e-9)))
        s.fail("eps_min", "the eps schedule must span at least 4 decades inside (0, 1)");
    if (per_decade < 1 || per_decade > 20)
        s.fail("points_per_decade", "need 1 <= points_per_decade <= 20");
    if (!(a.margin > 0.0 && a.margin < 1.0))
        s.fail("margin", "need 0 < margin < 1");
    const double decades = std::log10(eps_max / eps_min);
    const int steps = static_cast<int>(std::lround(decades * per_decade));
    for (int k = 0; k <= steps; ++k)
        a.options.eps.push_back(std::pow(10.0, std::log10(eps_max) - decades * k / steps));
    s.finish();
    return a;
}

inline Outcome run_probe(const ProbeArgs& a)
{
    Outcome out;
    const auto th = thm6_threshold(a.query);
    const double s_star = th.valid() ? th.s_max.as_double() : kInf;
    const auto reps = sweep_probe(a.query, a.s_list, a.options);
    std::ostringstream csv;
    csv << "s,eps,ratio\n";
    for (const auto& r : reps) {
        for (const auto& [e, v] : r.ratios)
            csv << detail::csv_number(r.s) << ',' << detail::csv_number(e) << ',' << detail::csv_number(v) << '\n';
        if (r.verdict == ProbeVerdict::Inconclusive)
            out.raise(kInconclusive);
    }
    out.result["threshold"] = number(s_star);
    out.result["threshold_valid"] = th.valid();
    out.result["consistent"] = th.valid() && consistent_with_threshold(reps, s_star, a.margin);
    out.result["margin"] = number(a.margin);
    out.result["probes"] = reps;
    out.files["probe.csv"] = csv.str();
    return out;
}

////////////////////////////////////////////////////////////////////////////////
//
// Driver
//
////////////////////////////////////////////////////////////////////////////////

struct RunOptions
{
    std::filesystem::path out_dir = "wsob-out";
    std::uint64_t seed = 1;
};

struct RunResult
{
    int exit_code = kOk;
    Json report;
    std::map<std::string, std::string> files;// includes report.json
};

namespace detail
{
using Job = std::function<Outcome()>;

// parse first so a bad config fails before any computation or output
inline Job prepare(Command c, const Section& s, const Config& cfg, std::uint64_t seed)
{
    switch (c) {
        case Command::ApCheck: return [a = parse_ap_check(s, seed)] { return run_ap_check(a); };
        case Command::Exponents: return [a = parse_exponents(s, cfg)] { return run_exponents(a); };
        case Command::Distortion: return [a = parse_distortion(s)] { return run_distortion(a); };
        case Command::Mollify: return [a = parse_mollify(s)] { return run_mollify(a); };
        case Command::Solve: return [a = parse_solve(s, cfg)] { return run_solve(a); };
        case Command::Probe: return [a = parse_probe(s)] { return run_probe(a); };
        default: throw ConfigError("report is not a section");
    }
}

inline Outcome execute(const Job& job)
{
    try {
        return job();
    } catch (const ValidityError& e) {
        Outcome o;
        o.result["error"] = e.what();
        o.status = kValidityError;
        return o;
    } catch (const EvaluationError& e) {
        Outcome o;
        o.result["error"] = e.what();
        o.status = kInconclusive;
        return o;
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}
}// namespace detail

// Runs one command (or every section for `report`) and returns the report and
// files without touching the filesystem; ConfigError propagates.
inline RunResult evaluate(Command c, const Config& cfg, const RunOptions& opt)
{
    std::vector<std::pair<std::string, detail::Job>> jobs;
    for (const auto& [cmd, name] : kCommands) {
        const std::string key(name);
        if (cmd == Command::Report || (c != Command::Report && cmd != c))
            continue;
        const KeyValues* kv = cfg.find(key);
        if (!kv) {
            if (c != Command::Report)
                throw ConfigError("config: missing section [" + key + "]");
            continue;
        }
        jobs.emplace_back(key, detail::prepare(cmd, Section(key, *kv), cfg, opt.seed));
    }

    RunResult rr;
    Json config = Json::object();
    for (const auto& [name, job] : jobs)
        config[name] = cfg.sections.at(name);
    Outcome total;
    Json result = Json::object();
    for (const auto& [name, job] : jobs) {
        Outcome o = detail::execute(job);
        total.raise(o.status);
        if (c == Command::Report) {
            result[name] = Json{{"status", status_name(o.status)}, {"result", o.result}};
            for (auto& [f, content] : o.files)
                rr.files[name + "_" + f] = std::move(content);
        } else {
            result = std::move(o.result);
            rr.files = std::move(o.files);
        }
    }
    rr.exit_code = total.status;
    rr.report = Json{{"schema", kReportSchema},
                     {"command", to_string(c)},
                     {"seed", opt.seed},
                     {"config", config},
                     {"status", status_name(total.status)},
                     {"result", result}};
    rr.files["report.json"] = rr.report.dump(2) + "\n";
    return rr;
}

inline void write_outputs(const RunResult& rr, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    for (const auto& [name, content] : rr.files) {
        std::ofstream os(dir / name, std::ios::binary);
        os << content;
        if (!os)
            throw std::runtime_error("cannot write " + (dir / name).string());
    }
}

inline RunResult run(Command c, const Config& cfg, const RunOptions& opt)
{
    RunResult rr = evaluate(c, cfg, opt);
    write_outputs(rr, opt.out_dir);
    return rr;
}

}// namespace wsob::cli
