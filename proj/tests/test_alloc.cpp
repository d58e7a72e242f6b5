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

#include <catch_amalgamated.hpp>

#include "statwf/alloc.hpp"
#include "statwf/random.hpp"
#include "statwf/rates.hpp"

#include <cmath>
#include <numeric>
#include <vector>

using namespace statwf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{

double log_objective(std::span<const double> gains, std::span<const double> powers, double n0)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < gains.size(); ++i)
        sum += std::log1p(powers[i] * gains[i] / n0);
    return sum;
}

std::vector<double> random_simplex(Stream &rng, std::size_t n, double total)
{
    std::vector<double> w(n);
    for (auto &x : w)
        x = rng.exponential();
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto &x : w)
        x *= total / s;
    return w;
}

void check_kkt(std::span<const double> gains, double n0, double p, const PowerAllocation &a)
{
    REQUIRE(a.water_level);
    const double nu = *a.water_level;
    CHECK_THAT(a.total(), WithinRel(p, 1e-12));
    for (std::size_t i = 0; i < gains.size(); ++i)
    {
        CHECK(a.powers[i] >= 0.0);
        if (a.powers[i] > 0.0)
            CHECK_THAT(a.powers[i], WithinAbs(nu - n0 / gains[i], 1e-12 * std::max(1.0, nu)));
        else
            CHECK(nu <= n0 / gains[i]);
    }
}

} // namespace

TEST_CASE("waterfill hand-solved instances")
{
    SECTION("single subchannel")
    {
        const std::vector<double> g = {2.0};
        const auto a = waterfill(g, 0.5, 3.0);
        CHECK(a.powers[0] == 3.0);
        CHECK_THAT(*a.water_level, WithinRel(3.25, 1e-15));
    }
    SECTION("two subchannels")
    {
        const std::vector<double> g = {1.0, 2.0};
        const auto a = waterfill(g, 1.0, 1.0);
        CHECK_THAT(a.powers[0], WithinAbs(0.25, 1e-12));
        CHECK_THAT(a.powers[1], WithinAbs(0.75, 1e-12));
        CHECK_THAT(*a.water_level, WithinAbs(1.25, 1e-12));
        CHECK(a.strategy == Strategy::statistical_waterfill);
    }
    SECTION("inactive third subchannel")
    {
        const std::vector<double> g = {1.0, 4.0, 0.1};
        const auto a = waterfill(g, 1.0, 1.0);
        CHECK_THAT(a.powers[0], WithinAbs(0.125, 1e-12));
        CHECK_THAT(a.powers[1], WithinAbs(0.875, 1e-12));
        CHECK(a.powers[2] == 0.0);
        CHECK_THAT(*a.water_level, WithinAbs(1.125, 1e-12));
        CHECK(a.active_count() == 2);
    }
    SECTION("tied thresholds activate together")
    {
        const std::vector<double> g = {4.0, 1.0, 1.0};
        // Budget exactly fills the strongest channel up to the tie: nu = 1.
        const auto edge = waterfill(g, 1.0, 0.75);
        CHECK(edge.powers[1] == edge.powers[2]);
        const auto a = waterfill(g, 1.0, 1.75);
        CHECK(a.powers[1] == a.powers[2]);
        CHECK_THAT(a.powers[1], WithinAbs(1.0 / 3.0, 1e-12));
        check_kkt(g, 1.0, 1.75, a);
    }
    SECTION("domain errors")
    {
        const std::vector<double> bad = {1.0, 0.0};
        CHECK_THROWS_AS(waterfill(bad, 1.0, 1.0), domain_error);
        const std::vector<double> neg = {-1.0};
        CHECK_THROWS_AS(waterfill(neg, 1.0, 1.0), domain_error);
        const std::vector<double> empty;
        CHECK_THROWS_AS(waterfill(empty, 1.0, 1.0), domain_error);
    }
}

TEST_CASE("waterfill KKT properties on random instances", "[property]")
{
    Stream rng(stream_key(2718, {}));
    for (int trial = 0; trial < 1000; ++trial)
    {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 24);
        std::vector<double> g(n);
        for (auto &x : g)
            x = std::exp(4.0 * rng.uniform() - 2.0);
        const double n0 = std::exp(2.0 * rng.uniform() - 1.0);
        const double p = std::exp(6.0 * rng.uniform() - 3.0);
        const auto a = waterfill(g, n0, p);
        check_kkt(g, n0, p, a);

        // Scaling gains and noise together changes nothing.
        const double k = std::exp(4.0 * rng.uniform() - 2.0);
        std::vector<double> gk = g;
        for (auto &x : gk)
            x *= k;
        const auto b = waterfill(gk, n0 * k, p);
        for (std::size_t i = 0; i < n; ++i)
            CHECK_THAT(b.powers[i], WithinAbs(a.powers[i], 1e-12 * p));
    }
}

TEST_CASE("waterfill maximizes the mean-gain objective", "[property]")
{
    Stream rng(stream_key(31415, {}));
    for (int instance = 0; instance < 20; ++instance)
    {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 10);
        std::vector<double> g(n);
        for (auto &x : g)
            x = std::exp(3.0 * rng.uniform() - 1.5);
        const double p = std::exp(4.0 * rng.uniform() - 2.0);
        const auto a = waterfill(g, 1.0, p);
        const double best = log_objective(g, a.powers, 1.0);
        for (int k = 0; k < 1000; ++k)
        {
            const auto w = random_simplex(rng, n, p);
            CHECK(log_objective(g, w, 1.0) <= best + 1e-12);
        }
    }
}

TEST_CASE("equal_power")
{
    const auto a = equal_power(4, 1.0);
    CHECK(a.powers == std::vector<double>(4, 0.25));
    CHECK(a.total() == 1.0);
    CHECK(equal_power(1, 2.5).powers == std::vector<double>{2.5});
    CHECK_THROWS_AS(equal_power(0, 1.0), domain_error);
}

TEST_CASE("custom_allocation rescales weights")
{
    const std::vector<double> w = {1.0, 3.0, 0.0};
    const auto a = custom_allocation(w, 2.0);
    CHECK_THAT(a.powers[0], WithinRel(0.5, 1e-15));
    CHECK_THAT(a.powers[1], WithinRel(1.5, 1e-15));
    CHECK(a.powers[2] == 0.0);
    CHECK(a.strategy == Strategy::custom);
    const std::vector<double> zero = {0.0, 0.0};
    CHECK_THROWS_AS(custom_allocation(zero, 1.0), domain_error);
}

TEST_CASE("strategy tags round-trip")
{
    for (Strategy s : {Strategy::statistical_waterfill, Strategy::instantaneous_waterfill, Strategy::equal,
                       Strategy::optimal, Strategy::custom})
        CHECK(parse_strategy(to_string(s)) == s);
    CHECK_FALSE(parse_strategy("waterfill").has_value());
}

TEST_CASE("optimal_scsit_allocation: identical subchannels get equal power")
{
    ParallelChannel ch;
    ch.subchannels.assign(5, SubchannelSpec{0.7, 1.5, 2, {}});
    ch.n0 = 1.0;
    ch.p_total = 3.0;
    const auto a = optimal_scsit_allocation(ch);
    CHECK(a.strategy == Strategy::optimal);
    CHECK_THAT(a.total(), WithinRel(3.0, 1e-12));
    for (double p : a.powers)
        CHECK_THAT(p, WithinRel(0.6, 1e-6));
}

TEST_CASE("optimal_scsit_allocation matches a simplex grid search", "[oracle]")
{
    // Objective evaluated with the fixed-node Laguerre rule, independent of
    // the adaptive quadrature inside the optimizer.
    const QuadratureSpec oracle_quad{QuadratureMethod::laguerre, 128, 1e-11};
    auto objective = [&](const ParallelChannel &ch, double p1) {
        const double p2 = ch.p_total - p1;
        double v = 0.0;
        if (p1 > 0)
            v += gamma_expectation(Integrand::log1p_scaled(p1 / ch.n0), ch.subchannels[0].shape(),
                                   ch.subchannels[0].theta, oracle_quad);
        if (p2 > 0)
            v += gamma_expectation(Integrand::log1p_scaled(p2 / ch.n0), ch.subchannels[1].shape(),
                                   ch.subchannels[1].theta, oracle_quad);
        return v;
    };
    auto grid_argmax = [&](const ParallelChannel &ch) {
        double best_p = 0.0, best_v = -1.0;
        for (int i = 0; i <= 1000; ++i)
        {
            const double p1 = ch.p_total * i / 1000.0;
            const double v = objective(ch, p1);
            if (v > best_v)
            {
                best_v = v;
                best_p = p1;
            }
        }
        return best_p;
    };

    ParallelChannel ch{{SubchannelSpec{1.0, 1.0, 2, {}}, SubchannelSpec{0.25, 1.0, 2, {}}}, 1.0, 1.0};
    const auto a = optimal_scsit_allocation(ch);
    const double grid_p1 = grid_argmax(ch);
    CHECK_THAT(a.powers[0], WithinAbs(grid_p1, 5e-3));
    CHECK_THAT(a.powers[1], WithinAbs(1.0 - grid_p1, 5e-3));

    // With a weak second channel the optimum can be a corner.
    ParallelChannel corner{{SubchannelSpec{1.0, 1.0, 2, {}}, SubchannelSpec{0.02, 1.0, 2, {}}}, 1.0, 0.5};
    const auto c = optimal_scsit_allocation(corner);
    CHECK_THAT(c.powers[0], WithinAbs(grid_argmax(corner), 5e-3));
}

TEST_CASE("optimal_scsit_allocation equalizes marginal utilities")
{
    const auto ch = at_snr_db(build_decay_profile({12, 5e9, 6e9, 3.0, 1.0, 2, 1.0, 1.0}), 0.0);
    const auto a = optimal_scsit_allocation(ch);
    double lambda = -1.0;
    for (std::size_t i = 0; i < ch.size(); ++i)
    {
        const double mu = marginal_utility(ch.subchannels[i], a.powers[i], ch.n0);
        if (a.powers[i] > 0.0)
        {
            if (lambda < 0)
                lambda = mu;
            CHECK_THAT(mu, WithinRel(lambda, 1e-6));
        }
    }
    for (std::size_t i = 0; i < ch.size(); ++i)
        if (a.powers[i] == 0.0)
            CHECK(mean_gain(ch.subchannels[i]) / ch.n0 <= lambda * (1 + 1e-6));
}

TEST_CASE("optimal_scsit_allocation dominates suboptimal strategies", "[property]")
{
    Stream rng(stream_key(1618, {}));
    for (int instance = 0; instance < 20; ++instance)
    {
        ParallelChannel ch;
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 6);
        for (std::size_t i = 0; i < n; ++i)
        {
            const double m = std::array{0.5, 1.0, 2.0}[static_cast<std::size_t>(rng.uniform() * 3)];
            const unsigned L = 1 + static_cast<unsigned>(rng.uniform() * 4);
            ch.subchannels.push_back({std::exp(3.0 * rng.uniform() - 1.5), m, L, {}});
        }
        ch.n0 = 1.0;
        ch.p_total = std::exp(4.0 * rng.uniform() - 2.0) * n;
        const auto opt = optimal_scsit_allocation(ch);
        const double r_opt = exact_rate(ch, opt);
        const double r_wf = exact_rate(ch, waterfill(mean_gains(ch), ch.n0, ch.p_total));
        const double r_eq = exact_rate(ch, equal_power(n, ch.p_total));
        CHECK(r_opt >= r_wf - 1e-10);
        CHECK(r_opt >= r_eq - 1e-10);
    }
}

TEST_CASE("optimal allocation flattens as L grows at fixed scale", "[property]")
{
    auto deviation = [](unsigned L) {
        ParallelChannel ch;
        for (double theta : {1.0, 0.6, 0.3, 0.1})
            ch.subchannels.push_back({theta, 1.0, L, {}});
        ch.n0 = 1.0;
        ch.p_total = 4.0;
        const auto a = optimal_scsit_allocation(ch);
        double dev = 0.0;
        for (double p : a.powers)
            dev = std::max(dev, std::abs(p - 1.0));
        return dev;
    };
    const double d2 = deviation(2), d8 = deviation(8), d64 = deviation(64);
    CHECK(d8 < d2);
    CHECK(d64 < d8);
}
