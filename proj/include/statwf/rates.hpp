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

#ifndef STATWF_RATES_HPP
#define STATWF_RATES_HPP

#include "statwf/alloc.hpp"
#include "statwf/channel.hpp"
#include "statwf/errors.hpp"
#include "statwf/numerics.hpp"
#include "statwf/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace statwf
{

// All rates are in nats.

inline double pointwise_mi(double gain, double p, double n0)
{
    if (!(gain >= 0.0) || !(p >= 0.0) || !(n0 > 0.0))
        throw domain_error("pointwise_mi: need gain >= 0, p >= 0, n0 > 0");
    return std::log1p(p * gain / n0);
}

/// E[log(1 + p g / n0)] for g ~ Gamma(m L, theta).
inline double ergodic_mi(const SubchannelSpec &spec, double p, double n0, const QuadratureSpec &quad = {})
{
    spec.validate();
    if (!(p >= 0.0) || !(n0 > 0.0))
        throw domain_error("ergodic_mi: need p >= 0 and n0 > 0");
    if (p == 0.0)
        return 0.0;
    return gamma_expectation(Integrand::log1p_scaled(p / n0), spec.shape(), spec.theta, quad);
}

namespace detail
{
inline void check_dimensions(const ParallelChannel &channel, const PowerAllocation &alloc)
{
    if (channel.size() != alloc.size())
        throw domain_error("allocation has " + std::to_string(alloc.size()) + " powers for " +
                           std::to_string(channel.size()) + " subchannels");
}
} // namespace detail

/// sum_n log(1 + P_n mu_n / n0); an upper bound on the rate of any SCSIT allocation,
/// and on capacity when alloc is statistical waterfilling.
inline double jensen_upper(const ParallelChannel &channel, const PowerAllocation &alloc)
{
    detail::check_dimensions(channel, alloc);
    double sum = 0.0;
    for (std::size_t i = 0; i < channel.size(); ++i)
        sum += pointwise_mi(mean_gain(channel.subchannels[i]), alloc.powers[i], channel.n0);
    return sum;
}

/// sum_n E[log(1 + P_n g_n / n0)]
inline double exact_rate(const ParallelChannel &channel, const PowerAllocation &alloc, const QuadratureSpec &quad = {})
{
    detail::check_dimensions(channel, alloc);
    double sum = 0.0;
    for (std::size_t i = 0; i < channel.size(); ++i)
        sum += ergodic_mi(channel.subchannels[i], alloc.powers[i], channel.n0, quad);
    return sum;
}

// Rules for the free parameter a_n > 0 of the Markov lower bound.
struct ExplicitA
{
    std::vector<double> a;
};
struct AlphaRule
{
    double alpha = 0.5; // a_n = log(1 + alpha beta_n L), beta_n = P_n theta_n m_n / n0
};
struct NumericMax
{
};
using ARule = std::variant<NumericMax, AlphaRule, ExplicitA>;

/// a F(n0 (e^a - 1) / p) with F the gain CCDF.
inline double markov_term(const SubchannelSpec &spec, double p, double n0, double a)
{
    if (p == 0.0)
        return 0.0;
    if (!(a > 0.0))
        throw domain_error("markov_lower: a_n must be positive where power is positive");
    const double x = (n0 / p) * std::expm1(a) / spec.theta;
    return a * reg_gamma_q(spec.shape(), x);
}

namespace detail
{

// Maximizes a -> a Q(k, c (e^a - 1)) on (0, 50]: coarse log-spaced scan, then
// golden-section on the bracket around the best grid point.
template <class F>
double maximize_on_log_grid(const F &objective, double lo, double hi)
{
    constexpr int grid = 96;
    const double log_lo = std::log(lo);
    const double step = (std::log(hi) - log_lo) / (grid - 1);
    int best = 0;
    double best_value = -1.0;
    for (int i = 0; i < grid; ++i)
    {
        const double v = objective(std::exp(log_lo + step * i));
        if (v > best_value)
        {
            best_value = v;
            best = i;
        }
    }
    double a = std::exp(log_lo + step * std::max(best - 1, 0));
    double b = std::exp(log_lo + step * std::min(best + 1, grid - 1));
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-12 * b; ++it)
    {
        if (f1 >= f2)
        {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = objective(x1);
        }
        else
        {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = objective(x2);
        }
    }
    const double candidate = f1 >= f2 ? x1 : x2;
    const double grid_best = std::exp(log_lo + step * best);
    return objective(candidate) >= objective(grid_best) ? candidate : grid_best;
}

} // namespace detail

inline constexpr double markov_a_max = 50.0;

/// Best a for one subchannel's Markov term.
inline double markov_optimal_a(const SubchannelSpec &spec, double p, double n0)
{
    auto objective = [&](double a) { return markov_term(spec, p, n0, a); };
    return detail::maximize_on_log_grid(objective, 1e-10, markov_a_max);
}

inline double alpha_rule_a(const SubchannelSpec &spec, double p, double n0, double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw domain_error("alpha rule: alpha must lie in (0, 1)");
    const double beta = p * spec.theta * spec.m / n0;
    return std::log1p(alpha * beta * static_cast<double>(spec.L));
}

/// sum_n a_n Q(m_n L, (n0 / P_n)(e^{a_n} - 1) / theta_n)
inline double markov_lower(const ParallelChannel &channel, const PowerAllocation &alloc, const ARule &rule = NumericMax{})
{
    detail::check_dimensions(channel, alloc);
    if (const auto *explicit_a = std::get_if<ExplicitA>(&rule); explicit_a && explicit_a->a.size() != channel.size())
        throw domain_error("markov_lower: explicit a list has the wrong length");
    double sum = 0.0;
    for (std::size_t i = 0; i < channel.size(); ++i)
    {
        const auto &spec = channel.subchannels[i];
        const double p = alloc.powers[i];
        if (p == 0.0)
            continue;
        double a = 0.0;
        if (const auto *e = std::get_if<ExplicitA>(&rule))
            a = e->a[i];
        else if (const auto *r = std::get_if<AlphaRule>(&rule))
            a = alpha_rule_a(spec, p, channel.n0, r->alpha);
        else
            a = markov_optimal_a(spec, p, channel.n0);
        sum += markov_term(spec, p, channel.n0, a);
    }
    return sum;
}

/// (1/S) sum_s sum_n log(1 + P_n g_{s,n} / n0), pairwise-summed over snapshots.
inline double empirical_rate(const GainMatrix &gains, const PowerAllocation &alloc, double n0)
{
    if (gains.snapshots == 0)
        throw domain_error("empirical_rate: empty snapshot set");
    if (gains.subchannels != alloc.size())
        throw domain_error("empirical_rate: gain matrix and allocation sizes differ");
    std::vector<double> per_snapshot(gains.snapshots);
    for (std::size_t s = 0; s < gains.snapshots; ++s)
    {
        double sum = 0.0;
        for (std::size_t n = 0; n < gains.subchannels; ++n)
            sum += pointwise_mi(gains(s, n), alloc.powers[n], n0);
        per_snapshot[s] = sum;
    }
    return pairwise_sum(per_snapshot) / static_cast<double>(gains.snapshots);
}

/// Markov bound against each subchannel's empirical gain distribution, with a_n
/// maximized exactly over the sample (the optimum sits at a = log(1 + P g / n0)
/// for some sample g).
inline double empirical_markov_lower(const GainMatrix &gains, const PowerAllocation &alloc, double n0)
{
    if (gains.snapshots == 0)
        throw domain_error("empirical_markov_lower: empty snapshot set");
    if (gains.subchannels != alloc.size())
        throw domain_error("empirical_markov_lower: gain matrix and allocation sizes differ");
    const double s_count = static_cast<double>(gains.snapshots);
    double sum = 0.0;
    for (std::size_t n = 0; n < gains.subchannels; ++n)
    {
        if (alloc.powers[n] == 0.0)
            continue;
        std::vector<double> col = gains.column(n);
        std::sort(col.begin(), col.end());
        double best = 0.0;
        for (std::size_t j = 0; j < col.size(); ++j)
        {
            if (j > 0 && col[j] == col[j - 1])
                continue;
            const double a = pointwise_mi(col[j], alloc.powers[n], n0);
            best = std::max(best, a * static_cast<double>(col.size() - j) / s_count);
        }
        sum += best;
    }
    return sum;
}

/// Percent gap 100 (upper - lower) / lower.
inline double mpe(double c_upper, double c_lower)
{
    if (!(c_lower >= 0.0) || !std::isfinite(c_upper))
        throw domain_error("mpe: bounds must be finite and nonnegative");
    if (c_lower == 0.0)
        throw metric_error("mpe: undefined for a zero lower bound");
    if (c_upper < c_lower)
        throw domain_error("mpe: upper bound is below the lower bound");
    return 100.0 * (c_upper - c_lower) / c_lower;
}

struct RatioParams
{
    double m = 1.0;
    double L = 1.0;
    double beta = 1.0;
    double alpha = 0.5;

    void validate() const
    {
        if (!(m > 0.0) || !(L >= 1.0) || !(beta > 0.0))
            throw domain_error("RatioParams: need m > 0, L >= 1, beta > 0");
        if (!(alpha > 0.0 && alpha < 1.0))
            throw domain_error("RatioParams: alpha must lie in (0, 1)");
    }
};

/// Single-subchannel ratio of the alpha-rule Markov bound to the Jensen bound:
/// r_L = log(1 + alpha beta L) / log(1 + beta L) * Q(m L, alpha m L).
inline double ratio_rl(const RatioParams &params)
{
    params.validate();
    const double bl = params.beta * params.L;
    const double ml = params.m * params.L;
    return std::log1p(params.alpha * bl) / std::log1p(bl) * reg_gamma_q(ml, params.alpha * ml);
}

/// Leading-order large-L factors of r_L: 1 + log(alpha)/log(L) ...
inline double rl_log_term(double alpha, double L)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw domain_error("rl_expansion: alpha must lie in (0, 1)");
    if (!(L >= 2.0))
        throw domain_error("rl_expansion: the logarithmic term needs L >= 2");
    return 1.0 + std::log(alpha) / std::log(L);
}

/// ... and 1 - (alpha e^{1-alpha})^{mL} / ((1 - alpha) sqrt(2 pi m L)).
inline double rl_gamma_term(double m, double L, double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw domain_error("rl_expansion: alpha must lie in (0, 1)");
    if (!(m > 0.0) || !(L >= 1.0))
        throw domain_error("rl_expansion: need m > 0 and L >= 1");
    const double ml = m * L;
    const double log_base = std::log(alpha) + 1.0 - alpha;
    return 1.0 - std::exp(ml * log_base) / ((1.0 - alpha) * std::sqrt(2.0 * std::numbers::pi * ml));
}

struct RlExpansion
{
    double log_term;
    double gamma_term;
    double product() const { return log_term * gamma_term; }
};

inline RlExpansion rl_expansion(double m, double L, double alpha)
{
    return {rl_log_term(alpha, L), rl_gamma_term(m, L, alpha)};
}

/// Capacity of the deterministic parallel channel with gains fixed at mu_n,
/// waterfilled. Used as the normalizer for plotted rates.
inline double awgn_reference(const ParallelChannel &channel)
{
    channel.validate();
    const auto mu = mean_gains(channel);
    return jensen_upper(channel, waterfill(mu, channel.n0, channel.p_total));
}

/// Per-subchannel transmit SNR P / (N n0) in dB -> total power budget.
inline double power_for_snr_db(double snr_db, std::size_t n_subchannels, double n0)
{
    return std::pow(10.0, snr_db / 10.0) * static_cast<double>(n_subchannels) * n0;
}

inline ParallelChannel at_snr_db(ParallelChannel channel, double snr_db)
{
    channel.p_total = power_for_snr_db(snr_db, channel.size(), channel.n0);
    return channel;
}

/// How the powers being evaluated are chosen.
struct AllocationRule
{
    Strategy strategy = Strategy::statistical_waterfill;
    std::vector<double> custom_weights; // used when strategy == custom
};

inline PowerAllocation allocate(const AllocationRule &rule, const ParallelChannel &channel,
                                const QuadratureSpec &quad = {})
{
    channel.validate();
    switch (rule.strategy)
    {
    case Strategy::statistical_waterfill:
        return waterfill(mean_gains(channel), channel.n0, channel.p_total);
    case Strategy::equal:
        return equal_power(channel.size(), channel.p_total);
    case Strategy::optimal:
        return optimal_scsit_allocation(channel, 1e-8, quad);
    case Strategy::custom:
        if (rule.custom_weights.size() != channel.size())
            throw domain_error("custom allocation: weight list length does not match the channel");
        return custom_allocation(rule.custom_weights, channel.p_total);
    case Strategy::instantaneous_waterfill:
        break;
    }
    throw domain_error("instantaneous waterfilling needs realized gains, not channel statistics");
}

struct BoundsReport
{
    double snr_db = 0.0;
    Strategy strategy = Strategy::statistical_waterfill;
    double c_upper = 0.0;        // Jensen bound at statistical waterfilling
    double c_lower_exact = 0.0;  // E[sum I] at the strategy's powers
    double c_lower_markov = 0.0; // Markov bound at the strategy's powers
    double mpe_percent = 0.0;
    double c_awgn_ref = 0.0;
    double normalized_upper = 0.0;
    double normalized_lower = 0.0;
};

/// Rate fields divided by ln 2; normalized values and MPE are unit-free.
inline BoundsReport to_bits(BoundsReport r)
{
    for (double *field : {&r.c_upper, &r.c_lower_exact, &r.c_lower_markov, &r.c_awgn_ref})
        *field /= std::numbers::ln2;
    return r;
}

inline BoundsReport finish_report(BoundsReport r)
{
    r.mpe_percent = mpe(r.c_upper, r.c_lower_exact);
    r.normalized_upper = r.c_upper / r.c_awgn_ref;
    r.normalized_lower = r.c_lower_exact / r.c_awgn_ref;
    return r;
}

/// Bounds for one channel (p_total already set) under one allocation rule.
inline BoundsReport evaluate_bounds(const ParallelChannel &channel, const AllocationRule &rule, double snr_db,
                                    const ARule &a_rule = NumericMax{}, const QuadratureSpec &quad = {})
{
    const PowerAllocation stat = waterfill(mean_gains(channel), channel.n0, channel.p_total);
    const PowerAllocation alloc = rule.strategy == Strategy::statistical_waterfill ? stat : allocate(rule, channel, quad);
    BoundsReport r;
    r.snr_db = snr_db;
    r.strategy = rule.strategy;
    r.c_upper = jensen_upper(channel, stat);
    r.c_lower_exact = exact_rate(channel, alloc, quad);
    r.c_lower_markov = markov_lower(channel, alloc, a_rule);
    r.c_awgn_ref = r.c_upper;
    return finish_report(r);
}

/// Bounds from snapshot gains for a given allocation; the upper bound uses
/// statistical waterfilling on the supplied means.
inline BoundsReport evaluate_bounds_empirical(const GainMatrix &gains, const std::vector<double> &means, double n0,
                                              double p_total, const PowerAllocation &alloc, double snr_db)
{
    if (means.size() != gains.subchannels)
        throw domain_error("evaluate_bounds_empirical: means and gains sizes differ");
    const PowerAllocation stat = waterfill(means, n0, p_total);
    BoundsReport r;
    r.snr_db = snr_db;
    r.strategy = alloc.strategy;
    for (std::size_t n = 0; n < means.size(); ++n)
        r.c_upper += pointwise_mi(means[n], stat.powers[n], n0);
    r.c_lower_exact = empirical_rate(gains, alloc, n0);
    r.c_lower_markov = empirical_markov_lower(gains, alloc, n0);
    r.c_awgn_ref = r.c_upper;
    return finish_report(r);
}

/// Same, with the expectation replaced by an average over realized gains.
inline BoundsReport evaluate_bounds_empirical(const GainMatrix &gains, const std::vector<double> &means, double n0,
                                              double p_total, const AllocationRule &rule, double snr_db)
{
    if (means.size() != gains.subchannels)
        throw domain_error("evaluate_bounds_empirical: means and gains sizes differ");
    const PowerAllocation stat = waterfill(means, n0, p_total);
    PowerAllocation alloc;
    switch (rule.strategy)
    {
    case Strategy::statistical_waterfill: alloc = stat; break;
    case Strategy::equal: alloc = equal_power(means.size(), p_total); break;
    case Strategy::custom:
        if (rule.custom_weights.size() != means.size())
            throw domain_error("custom allocation: weight list length does not match the channel");
        alloc = custom_allocation(rule.custom_weights, p_total);
        break;
    default:
        throw domain_error(std::string("strategy '") + std::string(to_string(rule.strategy)) +
                           "' is not available for measured data");
    }
    return evaluate_bounds_empirical(gains, means, n0, p_total, alloc, snr_db);
}

struct ConvergencePoint
{
    unsigned L;
    double c_upper;
    double c_lower_exact;
    double mpe_percent;
};

struct ConvergenceStudy
{
    std::vector<ConvergencePoint> points;
    double slope = 0.0; // least-squares slope of log MPE against log L
};

/// MPE as a function of L. `profile` builds the channel for each L; its power
/// budget is replaced by the one implied by snr_db.
inline ConvergenceStudy convergence_study(const std::function<ParallelChannel(unsigned)> &profile,
                                          const AllocationRule &rule, std::span<const unsigned> l_list,
                                          double snr_db, const QuadratureSpec &quad = {})
{
    if (l_list.size() < 3)
        throw domain_error("convergence_study: needs at least three L values");
    for (std::size_t i = 1; i < l_list.size(); ++i)
        if (l_list[i] <= l_list[i - 1])
            throw domain_error("convergence_study: L values must be strictly increasing");
    ConvergenceStudy study;
    std::vector<double> log_l, log_mpe;
    for (unsigned L : l_list)
    {
        const ParallelChannel channel = at_snr_db(profile(L), snr_db);
        const PowerAllocation stat = waterfill(mean_gains(channel), channel.n0, channel.p_total);
        const PowerAllocation alloc =
            rule.strategy == Strategy::statistical_waterfill ? stat : allocate(rule, channel, quad);
        ConvergencePoint pt{L, jensen_upper(channel, stat), exact_rate(channel, alloc, quad), 0.0};
        pt.mpe_percent = mpe(pt.c_upper, pt.c_lower_exact);
        study.points.push_back(pt);
        log_l.push_back(std::log(static_cast<double>(L)));
        log_mpe.push_back(std::log(pt.mpe_percent));
    }
    study.slope = least_squares_slope(log_l, log_mpe);
    return study;
}

} // namespace statwf

#endif
