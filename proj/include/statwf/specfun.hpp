// SPDX-License-Identifier: Apache-2.0
//
// statwf - power loading for parallel SIMO fading channels
// Copyright (C) 2026 The statwf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef STATWF_SPECFUN_HPP
#define STATWF_SPECFUN_HPP

#include "statwf/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <string>
#include <utility>
#include <vector>

namespace statwf
{

enum class QuadratureMethod
{
    laguerre, // fixed-node generalized Gauss-Laguerre, node doubling until agreement
    adaptive  // globally adaptive Gauss-Kronrod (7/15) on a segmented half line
};

struct QuadratureSpec
{
    QuadratureMethod method = QuadratureMethod::adaptive;
    int node_count = 128;
    double rel_tol = 1e-9;

    void validate() const
    {
        if (!(rel_tol > 0.0) || !std::isfinite(rel_tol))
            throw domain_error("QuadratureSpec: rel_tol must be positive");
        if (node_count < 2)
            throw domain_error("QuadratureSpec: node_count must be at least 2");
    }
};

// Scalar function of the gain variable, plus the points where it is not smooth.
struct Integrand
{
    std::function<double(double)> fn;
    std::vector<double> breakpoints;

    static Integrand identity() { return {[](double g) { return g; }, {}}; }
    static Integrand square() { return {[](double g) { return g * g; }, {}}; }

    // log(1 + c*g)
    static Integrand log1p_scaled(double c)
    {
        return {[c](double g) { return std::log1p(c * g); }, {}};
    }

    // 1{g >= x}
    static Integrand indicator_ge(double x)
    {
        return {[x](double g) { return g >= x ? 1.0 : 0.0; }, {x}};
    }
};

// ---------------------------------------------------------------------------
// Gamma function and regularized incomplete gamma
// ---------------------------------------------------------------------------

inline double log_gamma(double a)
{
    if (!(a > 0.0) || !std::isfinite(a))
        throw domain_error("log_gamma: argument must be positive and finite");
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(a, &sign);
#else
    return std::lgamma(a);
#endif
}

namespace detail
{

// ln Gamma(a) - [(a - 1/2) ln a - a + ln(2 pi)/2], valid for a >= 10.
inline double stirling_correction(double a)
{
    const double r = 1.0 / a;
    const double r2 = r * r;
    return r * (1.0 / 12.0 +
                r2 * (-1.0 / 360.0 +
                      r2 * (1.0 / 1260.0 +
                            r2 * (-1.0 / 1680.0 +
                                  r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360360.0 + r2 * (1.0 / 156.0)))))));
}

// log(1 + t) - t without cancellation near t = 0.
inline double log1pmx(double t)
{
    if (std::abs(t) > 0.5)
        return std::log1p(t) - t;
    // log(1+t) = 2 atanh(u), u = t / (2 + t); 2u - t = -t u.
    const double u = t / (2.0 + t);
    const double u2 = u * u;
    double term = u * u2;
    double tail = 0.0;
    for (int k = 1; k < 60; ++k)
    {
        const double add = term / (2 * k + 1);
        tail += add;
        if (std::abs(add) <= 1e-17 * std::abs(tail))
            break;
        term *= u2;
    }
    return -t * u + 2.0 * tail;
}

// ln( x^a e^{-x} / Gamma(a) ), accurate for large a when x is close to a.
inline double log_gamma_prefactor(double a, double x)
{
    if (a < 10.0)
        return a * std::log(x) - x - log_gamma(a);
    const double t = (x - a) / a;
    return a * log1pmx(t) + 0.5 * std::log(a / (2.0 * std::numbers::pi)) - stirling_correction(a);
}

inline int incomplete_gamma_iteration_cap(double a)
{
    return 2000 + static_cast<int>(50.0 * std::sqrt(a));
}

// Lower regularized P(a, x) by power series; use for x < a + 1.
inline double reg_gamma_p_series(double a, double x)
{
    const int cap = incomplete_gamma_iteration_cap(a);
    double sum = 1.0;
    double term = 1.0;
    for (int k = 1; k <= cap; ++k)
    {
        term *= x / (a + k);
        sum += term;
        if (term < sum * std::numeric_limits<double>::epsilon() * 0.5)
            return std::exp(log_gamma_prefactor(a, x) - std::log(a)) * sum;
    }
    throw numeric_error("reg_gamma_q: series did not converge", term / sum);
}

// Upper regularized Q(a, x) by modified Lentz continued fraction; use for x >= a + 1.
inline double reg_gamma_q_cf(double a, double x)
{
    constexpr double tiny = 1e-300;
    const int cap = incomplete_gamma_iteration_cap(a);
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= cap; ++i)
    {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny)
            d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < std::numeric_limits<double>::epsilon())
            return std::exp(log_gamma_prefactor(a, x)) * h;
    }
    throw numeric_error("reg_gamma_q: continued fraction did not converge");
}

inline void check_incomplete_gamma_args(double a, double x)
{
    if (!(a > 0.0) || !std::isfinite(a))
        throw domain_error("incomplete gamma: shape must be positive and finite");
    if (!(x >= 0.0))
        throw domain_error("incomplete gamma: argument must be nonnegative");
}

} // namespace detail

/// Normalized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
inline double reg_gamma_q(double a, double x)
{
    detail::check_incomplete_gamma_args(a, x);
    if (x == 0.0)
        return 1.0;
    if (std::isinf(x))
        return 0.0;
    if (x < a + 1.0)
        return std::clamp(1.0 - detail::reg_gamma_p_series(a, x), 0.0, 1.0);
    return std::clamp(detail::reg_gamma_q_cf(a, x), 0.0, 1.0);
}

/// Normalized lower incomplete gamma P(a, x) = 1 - Q(a, x).
inline double reg_gamma_p(double a, double x)
{
    detail::check_incomplete_gamma_args(a, x);
    if (x == 0.0)
        return 0.0;
    if (std::isinf(x))
        return 1.0;
    if (x < a + 1.0)
        return std::clamp(detail::reg_gamma_p_series(a, x), 0.0, 1.0);
    return std::clamp(1.0 - detail::reg_gamma_q_cf(a, x), 0.0, 1.0);
}

/// Exponential integral E1(x) = int_x^inf e^{-t}/t dt.
inline double exp_integral_e1(double x)
{
    if (!(x > 0.0))
        throw domain_error("exp_integral_e1: argument must be positive");
    if (std::isinf(x))
        return 0.0;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (x <= 1.0)
    {
        // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
        double sum = 0.0;
        double fact = 1.0;
        for (int k = 1; k < 100; ++k)
        {
            fact *= -x / k;
            const double add = fact / k;
            sum += add;
            if (std::abs(add) < std::abs(sum) * eps)
                break;
        }
        return -std::numbers::egamma - std::log(x) - sum;
    }
    constexpr double tiny = 1e-300;
    double b = x + 1.0;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i)
    {
        const double an = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        const double del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < eps)
            return h * std::exp(-x);
    }
    throw numeric_error("exp_integral_e1: continued fraction did not converge");
}

// ---------------------------------------------------------------------------
// Expectations against the gamma density
// ---------------------------------------------------------------------------

namespace detail
{

struct LaguerreRule
{
    std::vector<double> nodes;
    std::vector<double> weights; // sum to one: weights of the Gamma(alpha + 1, 1) density
};

// Golub-Welsch on the Jacobi matrix of the generalized Laguerre polynomials.
inline LaguerreRule make_laguerre_rule(int n, double alpha)
{
    Eigen::VectorXd diag(n);
    Eigen::VectorXd sub(n - 1);
    for (int i = 0; i < n; ++i)
        diag(i) = 2.0 * i + 1.0 + alpha;
    for (int i = 1; i < n; ++i)
        sub(i - 1) = std::sqrt(i * (i + alpha));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success)
        throw numeric_error("gauss-laguerre: eigen decomposition failed");
    LaguerreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int j = 0; j < n; ++j)
    {
        rule.nodes[j] = solver.eigenvalues()(j);
        const double v = solver.eigenvectors()(0, j);
        rule.weights[j] = v * v;
    }
    return rule;
}

inline const LaguerreRule &laguerre_rule(int n, double alpha)
{
    thread_local std::map<std::pair<int, double>, LaguerreRule> cache;
    auto key = std::make_pair(n, alpha);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, make_laguerre_rule(n, alpha)).first;
    return it->second;
}

inline constexpr int max_laguerre_nodes = 1024;

inline double laguerre_expectation(const Integrand &f, double shape, double scale, const QuadratureSpec &quad)
{
    auto evaluate = [&](int n) {
        const LaguerreRule &rule = laguerre_rule(n, shape - 1.0);
        double sum = 0.0;
        for (int j = 0; j < n; ++j)
        {
            if (rule.weights[j] == 0.0)
                continue;
            const double value = f.fn(scale * rule.nodes[j]);
            if (!std::isfinite(value))
                throw numeric_error("gamma_expectation: integrand not finite at a quadrature node");
            sum += rule.weights[j] * value;
        }
        return sum;
    };
    int n = quad.node_count;
    double previous = evaluate(n);
    while (2 * n <= max_laguerre_nodes)
    {
        n *= 2;
        const double current = evaluate(n);
        const double diff = std::abs(current - previous);
        if (diff <= quad.rel_tol * std::abs(current) || diff == 0.0)
            return current;
        previous = current;
    }
    throw numeric_error("gamma_expectation: gauss-laguerre node doubling did not reach rel_tol");
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr double kronrod_x[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kronrod_w[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gauss_w[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment
{
    double lo, hi, value, error;
    bool operator<(const Segment &other) const { return error < other.error; }
};

template <class F>
Segment gauss_kronrod_15(const F &g, double lo, double hi)
{
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double fc = g(center);
    double kronrod = fc * kronrod_w[7];
    double gauss = fc * gauss_w[3];
    for (int j = 0; j < 7; ++j)
    {
        const double dx = half * kronrod_x[j];
        const double pair = g(center - dx) + g(center + dx);
        kronrod += kronrod_w[j] * pair;
        if (j % 2 == 1)
            gauss += gauss_w[j / 2] * pair;
    }
    kronrod *= half;
    gauss *= half;
    if (!std::isfinite(kronrod))
        throw numeric_error("gamma_expectation: integrand not finite");
    return {lo, hi, kronrod, std::abs(kronrod - gauss)};
}

inline constexpr int max_adaptive_segments = 5000;

template <class F>
double adaptive_integral(const F &g, const std::vector<double> &points, double rel_tol, double abs_tol = 1e-300)
{
    std::priority_queue<Segment> queue;
    double total = 0.0;
    double total_error = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
    {
        Segment s = gauss_kronrod_15(g, points[i], points[i + 1]);
        total += s.value;
        total_error += s.error;
        queue.push(s);
    }
    double settled_error = 0.0;
    int segments = static_cast<int>(queue.size());
    while (!queue.empty() && total_error + settled_error > std::max(rel_tol * std::abs(total), abs_tol))
    {
        Segment worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (!(mid > worst.lo && mid < worst.hi) || worst.hi - worst.lo < 1e-13 * std::max(1.0, std::abs(worst.lo)))
        {
            // Segment cannot be resolved further in double precision.
            total_error -= worst.error;
            settled_error += worst.error;
            continue;
        }
        if (++segments > max_adaptive_segments)
            throw numeric_error("gamma_expectation: adaptive quadrature exceeded segment limit",
                                (total_error + settled_error) / std::max(std::abs(total), 1e-300));
        Segment left = gauss_kronrod_15(g, worst.lo, mid);
        Segment right = gauss_kronrod_15(g, mid, worst.hi);
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        queue.push(left);
        queue.push(right);
    }
    return total;
}

inline double adaptive_expectation(const Integrand &f, double shape, double scale, const QuadratureSpec &quad)
{
    // Work in the standardized variable t = gain / scale, t ~ Gamma(shape, 1).
    const double center = std::max(shape - 1.0, 0.0);
    const double spread = std::sqrt(shape);
    const double t_max = center + 40.0 * spread + 40.0;

    std::vector<double> t_points = {0.0, t_max};
    for (double k : {-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0})
        t_points.push_back(center + k * spread);
    for (double b : f.breakpoints)
        t_points.push_back(b / scale);
    std::erase_if(t_points, [&](double t) { return !(t >= 0.0 && t <= t_max); });
    std::sort(t_points.begin(), t_points.end());
    t_points.erase(std::unique(t_points.begin(), t_points.end()), t_points.end());

    auto checked = [&](double gain) {
        const double value = f.fn(gain);
        if (!std::isfinite(value))
            throw numeric_error("gamma_expectation: integrand not finite");
        return value;
    };

    double body = 0.0;
    if (shape >= 1.0)
    {
        const double log_norm = log_gamma(shape);
        auto g = [&](double t) {
            double density;
            if (t == 0.0)
                density = shape == 1.0 ? 1.0 : 0.0;
            else
                density = shape < 10.0 ? std::exp((shape - 1.0) * std::log(t) - t - log_norm)
                                       : std::exp(log_gamma_prefactor(shape, t)) / t;
            return density == 0.0 ? 0.0 : checked(scale * t) * density;
        };
        body = adaptive_integral(g, t_points, quad.rel_tol);
    }
    else
    {
        // u = t^shape removes the integrable singularity of the density at zero.
        const double inv_shape = 1.0 / shape;
        const double log_norm = log_gamma(shape + 1.0);
        std::vector<double> u_points;
        for (double t : t_points)
            u_points.push_back(std::pow(t, shape));
        auto g = [&](double u) {
            const double t = std::pow(u, inv_shape);
            const double density = std::exp(-t - log_norm);
            return density == 0.0 ? 0.0 : checked(scale * t) * density;
        };
        body = adaptive_integral(g, u_points, quad.rel_tol);
    }

    // Tail beyond t_max, mapped onto [0, 1).
    auto tail_g = [&](double s) {
        const double t = t_max + s / (1.0 - s);
        const double jac = 1.0 / ((1.0 - s) * (1.0 - s));
        const double density = std::exp((shape - 1.0) * std::log(t) - t - log_gamma(shape));
        return density == 0.0 ? 0.0 : checked(scale * t) * density * jac;
    };
    const double tail = adaptive_integral(tail_g, {0.0, 0.5, 1.0}, quad.rel_tol, quad.rel_tol * std::abs(body) + 1e-300);
    return body + tail;
}

} // namespace detail

/// E[f(g)] for g ~ Gamma(shape, scale), density g^{k-1} e^{-g/scale} / (scale^k Gamma(k)).
inline double gamma_expectation(const Integrand &f, double shape, double scale, const QuadratureSpec &quad = {})
{
    quad.validate();
    if (!(shape > 0.0) || !std::isfinite(shape) || !(scale > 0.0) || !std::isfinite(scale))
        throw domain_error("gamma_expectation: shape and scale must be positive and finite");
    if (quad.method == QuadratureMethod::laguerre)
        return detail::laguerre_expectation(f, shape, scale, quad);
    return detail::adaptive_expectation(f, shape, scale, quad);
}

} // namespace statwf

#endif
