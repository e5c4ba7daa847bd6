#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "wsob/core.hpp"
#include "wsob/geometry.hpp"
#include "wsob/parallel.hpp"
#include "wsob/weights.hpp"

namespace wsob
{

////////////////////////////////////////////////////////////////////////////////
//
// Triangle meshes of the unit square or a truncated 2-D cusp
//
////////////////////////////////////////////////////////////////////////////////

using Vertex = std::array<double, 2>;
using Triangle = std::array<int, 3>;

struct Mesh
{
    enum class Shape
    {
        Box,
        Cusp,
        Imported
    };

    std::vector<Vertex> vertices;
    std::vector<Triangle> triangles;
    std::vector<char> boundary;// per vertex
    double h = 0.0;            // max edge length

    Shape shape = Shape::Imported;
    Vertex lo{0.0, 0.0}, hi{1.0, 1.0};// Box
    double gamma1 = 1.0;               // Cusp
    double eps_geo = 1e-3;             // Cusp truncation height

    std::size_t vertex_count() const noexcept { return vertices.size(); }
    std::size_t triangle_count() const noexcept { return triangles.size(); }

    // signed area, positive for counterclockwise
    double area(std::size_t t) const
    {
        const auto& [a, b, c] = triangles[t];
        const Vertex &p = vertices[a], &q = vertices[b], &r = vertices[c];
        return 0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]));
    }

    double total_area() const
    {
        double s = 0.0;
        for (std::size_t t = 0; t < triangles.size(); ++t)
            s += area(t);
        return s;
    }

    double edge(int i, int j) const { return std::hypot(vertices[i][0] - vertices[j][0], vertices[i][1] - vertices[j][1]); }

    double max_edge() const
    {
        double m = 0.0;
        for (const auto& t : triangles)
            m = std::max({m, edge(t[0], t[1]), edge(t[1], t[2]), edge(t[2], t[0])});
        return m;
    }

    // shortest edge among triangles touching vertex v
    double min_edge_at(int v) const
    {
        double m = kInf;
        for (const auto& t : triangles)
            for (int k = 0; k < 3; ++k)
                if (t[k] == v)
                    m = std::min({m, edge(t[k], t[(k + 1) % 3]), edge(t[k], t[(k + 2) % 3])});
        return m;
    }

    // index of the vertex closest to p
    int nearest_vertex(const Vertex& p) const
    {
        int best = 0;
        double d = kInf;
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            const double e = std::hypot(vertices[i][0] - p[0], vertices[i][1] - p[1]);
            if (e < d) {
                d = e;
                best = static_cast<int>(i);
            }
        }
        return best;
    }
};

namespace detail
{

// structured (nx+1) x (ny+1) grid mapped through `place`; every cell split
// along the diagonal from its lower-left corner
template <class Place>
Mesh structured_mesh(int nx, int ny, Place&& place)
{
    Mesh m;
    m.vertices.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            m.vertices.push_back(place(static_cast<double>(i) / nx, static_cast<double>(j) / ny));
            m.boundary.push_back(i == 0 || j == 0 || i == nx || j == ny);
        }
    auto id = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    m.h = m.max_edge();
    return m;
}

}// namespace detail

//
// Rectangle [lo, hi] with max edge <= h. grading > 1 clusters vertices toward
// the lower-left corner through x = lo + (hi - lo) xi^grading.
//
inline Mesh triangulate_box(const Vertex& lo, const Vertex& hi, double h, double grading = 1.0)
{
    if (!(h > 0.0))
        throw InputError("triangulate: h must be positive");
    if (!(hi[0] > lo[0] && hi[1] > lo[1]))
        throw InputError("triangulate: degenerate rectangle");
    if (!(grading >= 1.0))
        throw InputError("triangulate: grading must be >= 1");
    const double wx = hi[0] - lo[0], wy = hi[1] - lo[1];
    int nx = std::max(1, static_cast<int>(std::ceil(grading * wx * std::sqrt(2.0) / h)));
    int ny = std::max(1, static_cast<int>(std::ceil(grading * wy * std::sqrt(2.0) / h)));
    Mesh m;
    for (;;) {
        m = detail::structured_mesh(nx, ny, [&](double xi, double eta) {
            return Vertex{lo[0] + wx * std::pow(xi, grading), lo[1] + wy * std::pow(eta, grading)};
        });
        if (m.h <= h)
            break;
        ++nx;
        ++ny;
    }
    m.shape = Mesh::Shape::Box;
    m.lo = lo;
    m.hi = hi;
    return m;
}

inline Mesh triangulate_square(double h, double grading = 1.0)
{
    return triangulate_box({0.0, 0.0}, {1.0, 1.0}, h, grading);
}

//
// {eps < x_2 < 1, 0 < x_1 < x_2^gamma1} through x_2 = eps + (1 - eps) eta^grading,
// x_1 = xi x_2^gamma1.
//
inline Mesh triangulate_cusp(double gamma1, double h, double eps_geo = 1e-3, double grading = 1.0)
{
    if (!(h > 0.0))
        throw InputError("triangulate: h must be positive");
    if (!(gamma1 >= 1.0))
        throw InputError("triangulate: cusp exponent must be >= 1");
    if (!(eps_geo > 0.0 && eps_geo < 1.0))
        throw InputError("triangulate: truncation height must lie in (0, 1)");
    if (!(grading >= 1.0))
        throw InputError("triangulate: grading must be >= 1");
    if (!(std::pow(eps_geo, gamma1) > 0.0))
        throw InputError("triangulate: truncated cusp section is degenerate");

    int nx = std::max(1, static_cast<int>(std::ceil(std::sqrt(2.0) / h)));
    int ny = std::max(1, static_cast<int>(std::ceil(std::sqrt(2.0) * grading * (1.0 - eps_geo) / h)));
    Mesh m;
    for (;;) {
        m = detail::structured_mesh(nx, ny, [&](double xi, double eta) {
            const double y = eps_geo + (1.0 - eps_geo) * std::pow(eta, grading);
            return Vertex{xi * std::pow(y, gamma1), y};
        });
        if (m.h <= h)
            break;
        nx += 1 + nx / 8;
        ny += 1 + ny / 8;
    }
    m.shape = Mesh::Shape::Cusp;
    m.gamma1 = gamma1;
    m.eps_geo = eps_geo;
    return m;
}

////////////////////////////////////////////////////////////////////////////////
//
// Mesh text format
//
//   wsob-mesh 1
//   vertices N
//   x y boundary        (N lines)
//   triangles M
//   a b c               (M lines)
//
////////////////////////////////////////////////////////////////////////////////

inline void write_mesh(std::ostream& os, const Mesh& m)
{
    std::ostringstream s;
    s.precision(17);
    s << "wsob-mesh 1\nvertices " << m.vertices.size() << '\n';
    for (std::size_t i = 0; i < m.vertices.size(); ++i)
        s << m.vertices[i][0] << ' ' << m.vertices[i][1] << ' ' << int(m.boundary[i]) << '\n';
    s << "triangles " << m.triangles.size() << '\n';
    for (const auto& t : m.triangles)
        s << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    os << s.str();
}

inline Mesh read_mesh(std::istream& is)
{
    auto fail = [](const std::string& what) -> Mesh { throw InputError("read_mesh: " + what); };
    std::string tag;
    int version = 0;
    if (!(is >> tag >> version) || tag != "wsob-mesh" || version != 1)
        return fail("missing 'wsob-mesh 1' header");
    std::size_t nv = 0, nt = 0;
    if (!(is >> tag >> nv) || tag != "vertices")
        return fail("expected vertex count");
    Mesh m;
    m.vertices.resize(nv);
    m.boundary.resize(nv);
    for (std::size_t i = 0; i < nv; ++i) {
        int b = 0;
        if (!(is >> m.vertices[i][0] >> m.vertices[i][1] >> b) || (b != 0 && b != 1))
            return fail("bad vertex line " + std::to_string(i));
        m.boundary[i] = static_cast<char>(b);
    }
    if (!(is >> tag >> nt) || tag != "triangles")
        return fail("expected triangle count");
    m.triangles.resize(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        auto& tri = m.triangles[t];
        if (!(is >> tri[0] >> tri[1] >> tri[2]))
            return fail("bad triangle line " + std::to_string(t));
        for (int v : tri)
            if (v < 0 || static_cast<std::size_t>(v) >= nv)
                return fail("triangle index out of range");
        if (!(m.area(t) > 0.0))
            return fail("triangle " + std::to_string(t) + " is not positively oriented");
    }
    m.h = m.max_edge();
    return m;
}

////////////////////////////////////////////////////////////////////////////////
//
// Assembly of  int w grad u . grad v  and  int f v  for P1 elements
//
// Both use the mid-edge rule (exact for quadratics), so a weight that is
// singular at a vertex is never evaluated there.
//
////////////////////////////////////////////////////////////////////////////////

using Field2 = std::function<double(const Point&)>;

struct LinearSystem
{
    Eigen::SparseMatrix<double> full;     // all vertices
    Eigen::VectorXd full_load;
    Eigen::SparseMatrix<double> stiffness;// interior rows and columns
    Eigen::VectorXd load;
    std::vector<int> unknown;             // vertex -> unknown index, -1 on the boundary
    std::vector<int> vertex;              // unknown -> vertex
};

namespace detail
{

struct ElementData
{
    std::array<std::array<double, 2>, 3> grad;// gradients of the three hats
    double area;
    std::array<Point, 3> mid;                 // midpoints of edges (0,1), (1,2), (2,0)
};

inline ElementData element(const Mesh& m, std::size_t t)
{
    const auto& tri = m.triangles[t];
    const Vertex& a = m.vertices[tri[0]];
    const Vertex& b = m.vertices[tri[1]];
    const Vertex& c = m.vertices[tri[2]];
    ElementData e;
    e.area = m.area(t);
    const double inv = 1.0 / (2.0 * e.area);
    e.grad[0] = {(b[1] - c[1]) * inv, (c[0] - b[0]) * inv};
    e.grad[1] = {(c[1] - a[1]) * inv, (a[0] - c[0]) * inv};
    e.grad[2] = {(a[1] - b[1]) * inv, (b[0] - a[0]) * inv};
    e.mid[0] = Point{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
    e.mid[1] = Point{0.5 * (b[0] + c[0]), 0.5 * (b[1] + c[1])};
    e.mid[2] = Point{0.5 * (c[0] + a[0]), 0.5 * (c[1] + a[1])};
    return e;
}

inline double mean_weight(const Weight& w, const ElementData& e)
{
    double s = 0.0;
    for (const Point& x : e.mid) {
        const double v = w(x);
        if (!(v > 0.0) || !std::isfinite(v))
            throw EvaluationError("assemble: weight is not positive and finite at a quadrature node");
        s += v;
    }
    return s / 3.0;
}

}// namespace detail

inline LinearSystem assemble(const Mesh& mesh, const Weight& w, const Field2& f)
{
    if (w.dim() != 2)
        throw InputError("assemble: weight must be two-dimensional");
    const std::size_t nt = mesh.triangles.size(), nv = mesh.vertices.size();
    if (nt == 0)
        throw InputError("assemble: empty mesh");

    std::vector<std::array<double, 9>> ke(nt);
    std::vector<std::array<double, 3>> fe(nt);
    parallel_for(nt, [&](std::size_t t) {
        const auto e = detail::element(mesh, t);
        if (!(e.area > 0.0))
            throw InputError("assemble: triangle with nonpositive orientation");
        const double wa = detail::mean_weight(w, e) * e.area;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                ke[t][3 * i + j] = wa * (e.grad[i][0] * e.grad[j][0] + e.grad[i][1] * e.grad[j][1]);
        // hat i is 1/2 at the two midpoints of its own edges
        const double f01 = f(e.mid[0]), f12 = f(e.mid[1]), f20 = f(e.mid[2]);
        fe[t] = {e.area / 6.0 * (f01 + f20), e.area / 6.0 * (f01 + f12), e.area / 6.0 * (f12 + f20)};
    });

    LinearSystem sys;
    sys.unknown.assign(nv, -1);
    for (std::size_t v = 0; v < nv; ++v)
        if (!mesh.boundary[v]) {
            sys.unknown[v] = static_cast<int>(sys.vertex.size());
            sys.vertex.push_back(static_cast<int>(v));
        }
    const auto ni = static_cast<Eigen::Index>(sys.vertex.size());

    std::vector<Eigen::Triplet<double>> full, inner;
    full.reserve(9 * nt);
    inner.reserve(9 * nt);
    sys.full_load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nv));
    sys.load = Eigen::VectorXd::Zero(ni);
    for (std::size_t t = 0; t < nt; ++t) {
        const auto& tri = mesh.triangles[t];
        for (int i = 0; i < 3; ++i) {
            sys.full_load[tri[i]] += fe[t][i];
            const int ui = sys.unknown[tri[i]];
            if (ui >= 0)
                sys.load[ui] += fe[t][i];
            for (int j = 0; j < 3; ++j) {
                full.emplace_back(tri[i], tri[j], ke[t][3 * i + j]);
                const int uj = sys.unknown[tri[j]];
                if (ui >= 0 && uj >= 0)
                    inner.emplace_back(ui, uj, ke[t][3 * i + j]);
            }
        }
    }
    sys.full.resize(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(nv));
    sys.full.setFromTriplets(full.begin(), full.end());
    sys.stiffness.resize(ni, ni);
    sys.stiffness.setFromTriplets(inner.begin(), inner.end());
    return sys;
}

////////////////////////////////////////////////////////////////////////////////
//
// Weak solution of  int w grad u . grad phi = int f phi,  u = 0 on the boundary
//
////////////////////////////////////////////////////////////////////////////////

struct SolverOptions
{
    double tol = 1e-10;
    int max_iterations = 0;// 0: 10 x unknowns
};

struct FemSolution
{
    Mesh mesh;
    std::vector<double> values;// per vertex, zero on the boundary
    double residual = 0.0;     // relative residual reported by the solver
    int iterations = 0;
    double energy = 0.0;       // int w |grad u_h|^2
    double load_work = 0.0;    // F(u_h)
    Verdict hypothesis = Verdict::Inconclusive;// finiteness of int w^{-n/2}
    std::vector<std::string> warnings;
};

// Finiteness of int w^{-1} over the meshed domain. Weights are radial about the
// origin, so when the origin lies in the closed domain the verdict is taken on
// the covering ball centered there (the domain holds a fixed sector of it).
inline IntegralVerdict theorem10_for(const Mesh& mesh, const Weight& w)
{
    double lo0 = kInf, lo1 = kInf, hi0 = -kInf, hi1 = -kInf, reach = 0.0;
    for (const auto& v : mesh.vertices) {
        lo0 = std::min(lo0, v[0]);
        lo1 = std::min(lo1, v[1]);
        hi0 = std::max(hi0, v[0]);
        hi1 = std::max(hi1, v[1]);
        reach = std::max(reach, std::hypot(v[0], v[1]));
    }
    const bool origin_in_box = lo0 <= 0.0 && hi0 >= 0.0 && lo1 <= 0.0 && hi1 >= 0.0;
    if (mesh.shape == Mesh::Shape::Cusp)
        return theorem10_condition(w, CuspRegion(CuspDomain(2, {mesh.gamma1})));
    if (origin_in_box)
        return theorem10_condition(w, Ball(Point{0.0, 0.0}, reach));
    return theorem10_condition(w, Box(Point{lo0, lo1}, Point{hi0, hi1}));
}

inline FemSolution solve_dirichlet(const Mesh& mesh, const Weight& w, const Field2& f, const SolverOptions& opt = {})
{
    if (!(opt.tol > 0.0))
        throw InputError("solve_dirichlet: tolerance must be positive");
    FemSolution sol;
    sol.mesh = mesh;
    const auto hyp = theorem10_for(mesh, w);
    sol.hypothesis = hyp.verdict;
    if (!hyp.finite())
        sol.warnings.push_back(std::string("integral of w^{-n/2} is ") + to_string(hyp.verdict));

    const LinearSystem sys = assemble(mesh, w, f);
    const auto ni = sys.stiffness.rows();
    sol.values.assign(mesh.vertices.size(), 0.0);
    if (ni == 0)
        return sol;

    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(opt.tol);
    cg.setMaxIterations(opt.max_iterations > 0 ? opt.max_iterations : static_cast<int>(10 * ni));
    cg.compute(sys.stiffness);
    const Eigen::VectorXd u = cg.solve(sys.load);
    sol.iterations = static_cast<int>(cg.iterations());
    sol.residual = cg.error();
    if (cg.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "solve_dirichlet: CG did not converge (iterations " << cg.iterations() << ", relative residual "
            << cg.error() << ", unknowns " << ni << ")";
        throw SolverError(msg.str());
    }
    for (Eigen::Index k = 0; k < ni; ++k)
        sol.values[sys.vertex[k]] = u[k];
    sol.energy = u.dot(sys.stiffness * u);
    sol.load_work = sys.load.dot(u);
    return sol;
}

//
// max-type relative residual of the Galerkin equations over the tested hats:
// ||K u - F||_T / max(||K u||_T, ||F||_T) in the Euclidean norm over T
// (default T: every interior vertex)
//
inline double weak_residual(const FemSolution& sol, const Weight& w, const Field2& f,
                            const std::vector<int>& test_vertices = {})
{
    const LinearSystem sys = assemble(sol.mesh, w, f);
    Eigen::VectorXd u(static_cast<Eigen::Index>(sol.values.size()));
    for (std::size_t v = 0; v < sol.values.size(); ++v)
        u[static_cast<Eigen::Index>(v)] = sol.values[v];
    const Eigen::VectorXd ku = sys.full * u;

    std::vector<int> tests = test_vertices;
    if (tests.empty())
        tests = sys.vertex;
    double r2 = 0.0, a2 = 0.0, b2 = 0.0;
    for (int v : tests) {
        if (v < 0 || static_cast<std::size_t>(v) >= sol.values.size() || sol.mesh.boundary[v])
            throw InputError("weak_residual: test hats must sit on interior vertices");
        const double a = ku[v], b = sys.full_load[v];
        r2 += (a - b) * (a - b);
        a2 += a * a;
        b2 += b * b;
    }
    const double scale = std::sqrt(std::max(a2, b2));
    return scale == 0.0 ? std::sqrt(r2) : std::sqrt(r2) / scale;
}

////////////////////////////////////////////////////////////////////////////////
//
// Errors against a known solution
//
////////////////////////////////////////////////////////////////////////////////

using Gradient2 = std::function<std::array<double, 2>(const Point&)>;

struct ErrorNorms
{
    double l2 = 0.0;    // ||u_h - u||_{L_2}
    double energy = 0.0;// (int w |grad(u_h - u)|^2)^{1/2}
};

// 7-point degree-5 rule on each triangle
inline ErrorNorms solution_errors(const FemSolution& sol, const Weight& w, const Field2& u, const Gradient2& grad_u)
{
    static constexpr double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
    static constexpr double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
    static constexpr std::array<std::array<double, 4>, 7> rule{{
        {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225},
        {a1, b1, b1, w1},
        {b1, a1, b1, w1},
        {b1, b1, a1, w1},
        {a2, b2, b2, w2},
        {b2, a2, b2, w2},
        {b2, b2, a2, w2},
    }};
    const Mesh& m = sol.mesh;
    std::vector<double> el2(m.triangles.size()), een(m.triangles.size());
    parallel_for(m.triangles.size(), [&](std::size_t t) {
        const auto& tri = m.triangles[t];
        const auto e = detail::element(m, t);
        std::array<double, 2> gh{0.0, 0.0};
        for (int k = 0; k < 3; ++k) {
            gh[0] += sol.values[tri[k]] * e.grad[k][0];
            gh[1] += sol.values[tri[k]] * e.grad[k][1];
        }
        double s2 = 0.0, se = 0.0;
        for (const auto& q : rule) {
            Point x(2);
            double uh = 0.0;
            for (int k = 0; k < 3; ++k) {
                x[0] += q[k] * m.vertices[tri[k]][0];
                x[1] += q[k] * m.vertices[tri[k]][1];
                uh += q[k] * sol.values[tri[k]];
            }
            const double d = uh - u(x);
            const auto g = grad_u(x);
            const double gx = gh[0] - g[0], gy = gh[1] - g[1];
            s2 += q[3] * d * d;
            se += q[3] * w(x) * (gx * gx + gy * gy);
        }
        el2[t] = s2 * e.area;
        een[t] = se * e.area;
    });
    ErrorNorms out;
    for (std::size_t t = 0; t < el2.size(); ++t) {
        out.l2 += el2[t];
        out.energy += een[t];
    }
    out.l2 = std::sqrt(out.l2);
    out.energy = std::sqrt(out.energy);
    return out;
}

struct RateEstimate
{
    double order = 0.0;         // mean of the successive orders
    std::vector<double> orders; // log(e_k / e_{k+1}) / log(h_k / h_{k+1})
    bool conclusive = false;    // false when the errors are not strictly decreasing
};

inline RateEstimate convergence_rate(const std::vector<double>& errors, const std::vector<double>& hs)
{
    if (errors.size() != hs.size() || errors.size() < 2)
        throw InputError("convergence_rate: need >= 2 matching (h, error) pairs");
    RateEstimate r;
    r.conclusive = true;
    for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
        if (!(hs[k + 1] < hs[k]) || !(errors[k] > 0.0) || !(errors[k + 1] > 0.0))
            throw InputError("convergence_rate: h must decrease and errors must be positive");
        if (!(errors[k + 1] < errors[k]))
            r.conclusive = false;
        r.orders.push_back(std::log(errors[k] / errors[k + 1]) / std::log(hs[k] / hs[k + 1]));
    }
    for (double o : r.orders)
        r.order += o;
    r.order /= static_cast<double>(r.orders.size());
    return r;
}

// solution as CSV rows x,y,u
inline void write_solution_csv(std::ostream& os, const FemSolution& sol)
{
    std::ostringstream s;
    s.precision(17);
    s << "x,y,u\n";
    for (std::size_t i = 0; i < sol.values.size(); ++i)
        s << sol.mesh.vertices[i][0] << ',' << sol.mesh.vertices[i][1] << ',' << sol.values[i] << '\n';
    os << s.str();
}

}// namespace wsob
