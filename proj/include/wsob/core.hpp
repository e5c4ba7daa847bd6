#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>

namespace wsob
{

inline constexpr int kMaxDim = 6;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

//
// error categories; the CLI maps them onto exit codes
//
struct InputError : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

// evaluation outside the set where a quantity is defined (e.g. |x|^a at 0, a<0)
struct DomainError : std::domain_error
{
    using std::domain_error::domain_error;
};

// an integrand produced a non-finite value at an interior node
struct EvaluationError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

// a formula precondition does not hold
struct ValidityError : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

//
// Point in R^n, n <= kMaxDim, stored inline.
//
class Point
{
public:
    Point() = default;

    explicit Point(int dim)
        : dim_(dim)
    {
        if (dim < 1 || dim > kMaxDim)
            throw InputError("point dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    }

    Point(std::initializer_list<double> xs)
        : Point(static_cast<int>(xs.size()))
    {
        std::copy(xs.begin(), xs.end(), c_.begin());
    }

    static Point from(std::span<const double> xs)
    {
        Point p(static_cast<int>(xs.size()));
        std::copy(xs.begin(), xs.end(), p.c_.begin());
        return p;
    }

    int dim() const noexcept { return dim_; }
    double& operator[](int i) noexcept { return c_[static_cast<std::size_t>(i)]; }
    double operator[](int i) const noexcept { return c_[static_cast<std::size_t>(i)]; }

    // last coordinate; the cusp axis x_n
    double last() const noexcept { return c_[static_cast<std::size_t>(dim_ - 1)]; }

    std::span<const double> coords() const noexcept { return {c_.data(), static_cast<std::size_t>(dim_)}; }

    double norm2() const noexcept
    {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i)
            s += c_[i] * c_[i];
        return s;
    }

    double norm() const noexcept { return std::sqrt(norm2()); }

    Point& operator+=(const Point& o) noexcept
    {
        for (int i = 0; i < dim_; ++i)
            c_[i] += o.c_[i];
        return *this;
    }

    Point& operator-=(const Point& o) noexcept
    {
        for (int i = 0; i < dim_; ++i)
            c_[i] -= o.c_[i];
        return *this;
    }

    Point& operator*=(double s) noexcept
    {
        for (int i = 0; i < dim_; ++i)
            c_[i] *= s;
        return *this;
    }

    friend Point operator+(Point a, const Point& b) noexcept { return a += b; }
    friend Point operator-(Point a, const Point& b) noexcept { return a -= b; }
    friend Point operator*(double s, Point a) noexcept { return a *= s; }

    friend bool operator==(const Point& a, const Point& b) noexcept
    {
        if (a.dim_ != b.dim_)
            return false;
        for (int i = 0; i < a.dim_; ++i)
            if (a.c_[i] != b.c_[i])
                return false;
        return true;
    }

private:
    std::array<double, kMaxDim> c_{};
    int dim_ = 0;
};

inline double distance(const Point& a, const Point& b) noexcept { return (a - b).norm(); }

inline double dot(const Point& a, const Point& b) noexcept
{
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        s += a[i] * b[i];
    return s;
}

inline void require_dim(const Point& x, int n, const char* what)
{
    if (x.dim() != n)
        throw InputError(std::string(what) + ": expected a point of dimension " + std::to_string(n) + ", got "
                         + std::to_string(x.dim()));
}

// surface area of the unit sphere S^{n-1}
inline double unit_sphere_area(int n)
{
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

inline double unit_ball_volume(int n) { return unit_sphere_area(n) / n; }

inline double ball_volume(int n, double radius) { return unit_ball_volume(n) * std::pow(radius, n); }

}// namespace wsob
