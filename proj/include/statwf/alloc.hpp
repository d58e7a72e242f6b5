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

#ifndef STATWF_ALLOC_HPP
#define STATWF_ALLOC_HPP

#include "statwf/channel.hpp"
#include "statwf/errors.hpp"
#include "statwf/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace statwf
{

enum class Strategy
{
    statistical_waterfill,
    instantaneous_waterfill,
    equal,
    optimal,
    custom
};

inline std::string_view to_string(Strategy s)
{
    switch (s)
    {
    case Strategy::statistical_waterfill: return "statistical-waterfill";
    case Strategy::instantaneous_waterfill: return "instantaneous-waterfill";
    case Strategy::equal: return "equal";
    case Strategy::optimal: return "optimal";
    case Strategy::custom: return "custom";
    }
    return "unknown";
}

inline std::optional<Strategy> parse_strategy(std::string_view name)
{
    for (Strategy s : {Strategy::statistical_waterfill, Strategy::instantaneous_waterfill, Strategy::equal,
                       Strategy::optimal, Strategy::custom})
        if (to_string(s) == name)
            return s;
    return std::nullopt;
}

struct PowerAllocation
{
    std::vector<double> powers;
    std::optional<double> water_level;
    Strategy strategy = Strategy::custom;

    std::size_t size() const { return powers.size(); }
    double total() const { return std::accumulate(powers.begin(), powers.end(), 0.0); }
    std::size_t active_count() const
    {
        return static_cast<std::size_t>(std::count_if(powers.begin(), powers.end(), [](double p) { return p > 0.0; }));
    }
};

/// Exact active-set waterfilling P_n = (nu - n0/g_n)^+ with sum P_n = p_total.
/// With g = mean gains this is statistical waterfilling, with realized gains
/// it is instantaneous waterfilling.
inline PowerAllocation waterfill(std::span<const double> gains, double n0, double p_total,
                                 Strategy tag = Strategy::statistical_waterfill)
{
    if (gains.empty())
        throw domain_error("waterfill: no subchannels");
    if (!(n0 > 0.0) || !(p_total > 0.0) || !std::isfinite(p_total))
        throw domain_error("waterfill: n0 and p_total must be positive");
    for (double g : gains)
        if (!(g > 0.0) || !std::isfinite(g))
            throw domain_error("waterfill: every gain must be positive and finite");

    const std::size_t n = gains.size();
    std::vector<double> threshold(n);
    for (std::size_t i = 0; i < n; ++i)
        threshold[i] = n0 / gains[i];
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return threshold[a] < threshold[b]; });

    // Largest prefix whose last member still gets positive power. Tied
    // thresholds enter together: a partial tie group is valid only if the
    // whole group is.
    double prefix = 0.0;
    double level = 0.0;
    std::size_t active = 0;
    for (std::size_t k = 1; k <= n; ++k)
    {
        prefix += threshold[order[k - 1]];
        const double candidate = (p_total + prefix) / static_cast<double>(k);
        if (candidate > threshold[order[k - 1]])
        {
            level = candidate;
            active = k;
        }
        else
            break;
    }

    PowerAllocation out;
    out.strategy = tag;
    out.water_level = level;
    out.powers.assign(n, 0.0);
    for (std::size_t k = 0; k < active; ++k)
        out.powers[order[k]] = level - threshold[order[k]];
    return out;
}

inline PowerAllocation equal_power(std::size_t n, double p_total)
{
    if (n == 0)
        throw domain_error("equal_power: n must be at least 1");
    if (!(p_total > 0.0))
        throw domain_error("equal_power: p_total must be positive");
    PowerAllocation out;
    out.strategy = Strategy::equal;
    out.powers.assign(n, p_total / static_cast<double>(n));
    return out;
}

/// Nonnegative weights rescaled to spend exactly p_total.
inline PowerAllocation custom_allocation(std::span<const double> weights, double p_total)
{
    if (weights.empty())
        throw domain_error("custom_allocation: no subchannels");
    double sum = 0.0;
    for (double w : weights)
    {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw domain_error("custom_allocation: weights must be nonnegative and finite");
        sum += w;
    }
    if (!(sum > 0.0))
        throw domain_error("custom_allocation: weights sum to zero");
    PowerAllocation out;
    out.strategy = Strategy::custom;
    out.powers.resize(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        out.powers[i] = p_total * weights[i] / sum;
    return out;
}

/// E[g / (n0 + p g)], the derivative of E[log(1 + p g / n0)] in p.
inline double marginal_utility(const SubchannelSpec &spec, double p, double n0, const QuadratureSpec &quad = {})
{
    if (p == 0.0)
        return mean_gain(spec) / n0;
    Integrand f{[p, n0](double g) { return g / (n0 + p * g); }, {}};
    return gamma_expectation(f, spec.shape(), spec.theta, quad);
}

inline double marginal_utility_slope(const SubchannelSpec &spec, double p, double n0, const QuadratureSpec &quad = {})
{
    Integrand f{[p, n0](double g) {
                    const double r = g / (n0 + p * g);
                    return -r * r;
                },
                {}};
    return gamma_expectation(f, spec.shape(), spec.theta, quad);
}

struct OptimizerLimits
{
    int outer_iterations = 200;
    int inner_iterations = 100;
};

namespace detail
{

// Power p >= 0 solving marginal_utility(p) = lambda, zero when the subchannel is inactive.
inline double invert_marginal(const SubchannelSpec &spec, double lambda, double n0, const QuadratureSpec &quad,
                              int max_steps)
{
    const double mu = mean_gain(spec);
    if (mu / n0 <= lambda)
        return 0.0;
    // Jensen: E[g/(n0+pg)] <= mu/(n0+p mu), so 1/lambda - n0/mu brackets the root from above.
    double lo = 0.0;
    double hi = 1.0 / lambda - n0 / mu;
    double p = 0.5 * hi;
    for (int step = 0; step < max_steps; ++step)
    {
        const double h = marginal_utility(spec, p, n0, quad) - lambda;
        if (h > 0.0)
            lo = p;
        else
            hi = p;
        if (h == 0.0 || hi - lo <= 1e-14 * hi)
            return p;
        const double slope = marginal_utility_slope(spec, p, n0, quad);
        double next = p - h / slope;
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - p) <= 1e-14 * hi)
            return next;
        p = next;
    }
    throw numeric_error("optimal_scsit_allocation: inner root-find did not converge", hi - lo);
}

} // namespace detail

/// Maximizes sum_n E[log(1 + P_n g_n / n0)] over the power simplex by bisection
/// on the KKT multiplier.
inline PowerAllocation optimal_scsit_allocation(const ParallelChannel &channel, double tol = 1e-8,
                                                const QuadratureSpec &quad = {}, OptimizerLimits limits = {})
{
    channel.validate();
    if (!(tol > 0.0))
        throw domain_error("optimal_scsit_allocation: tol must be positive");
    const std::size_t n = channel.size();
    const double budget = channel.p_total;

    auto powers_at = [&](double lambda) {
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i)
            p[i] = detail::invert_marginal(channel.subchannels[i], lambda, channel.n0, quad, limits.inner_iterations);
        return p;
    };
    auto sum = [](const std::vector<double> &p) { return std::accumulate(p.begin(), p.end(), 0.0); };

    const std::vector<double> mu = mean_gains(channel);
    double lambda_max = 0.0;
    for (double m : mu)
        lambda_max = std::max(lambda_max, m / channel.n0);
    // Statistical waterfilling spends at most p_total at lambda = 1/nu.
    const auto stat = waterfill(mu, channel.n0, budget);
    double lambda_hi = std::min(lambda_max, 1.0 / *stat.water_level);
    double lambda_lo = 0.5 * lambda_hi;
    std::vector<double> p = powers_at(lambda_lo);
    int iterations = 0;
    while (sum(p) < budget)
    {
        lambda_hi = lambda_lo;
        lambda_lo *= 0.5;
        p = powers_at(lambda_lo);
        if (++iterations > limits.outer_iterations)
            throw numeric_error("optimal_scsit_allocation: could not bracket the multiplier", budget - sum(p));
    }

    double residual = std::abs(sum(p) - budget);
    while (residual > tol * budget)
    {
        if (++iterations > limits.outer_iterations)
            throw numeric_error("optimal_scsit_allocation: multiplier bisection did not converge", residual / budget);
        const double lambda = std::sqrt(lambda_lo * lambda_hi);
        p = powers_at(lambda);
        const double total = sum(p);
        if (total > budget)
            lambda_lo = lambda;
        else
            lambda_hi = lambda;
        residual = std::abs(total - budget);
    }

    const double scale = budget / sum(p);
    for (double &x : p)
        x *= scale;
    PowerAllocation out;
    out.strategy = Strategy::optimal;
    out.powers = std::move(p);
    return out;
}

} // namespace statwf

#endif
