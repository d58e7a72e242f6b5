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

// Acceptance driver: `acceptance [N]` checks criterion N (1-8), or all of them,
// printing one PASS/FAIL line per criterion. Exit status is 1 if any fails.

#include "cli_app.hpp"
#include "statwf/statwf.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace statwf;
namespace fs = std::filesystem;

namespace
{

struct Outcome
{
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string &what)
    {
        if (!ok)
        {
            if (pass)
                detail.clear();
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string &what)
    {
        if (pass)
            detail += (detail.empty() ? "" : "; ") + what;
    }
};

std::string num(double v, int digits = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

int run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "statwf");
    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

fs::path scratch(const std::string &name)
{
    const fs::path dir = fs::temp_directory_path() / "statwf_acceptance";
    fs::create_directories(dir);
    return dir / name;
}

// Default mpe-study through the command line: every row with L >= 4 below 5%.
Outcome criterion_1()
{
    Outcome o;
    const fs::path csv = scratch("mpe_study.csv");
    const auto t0 = std::chrono::steady_clock::now();
    const int code = run_cli({"mpe-study", "-o", csv.string(), "--snr-db", "-10,5", "--l", "1,2,4,8,16", "--bins",
                              "64", "--exponent", "3", "--m", "1", "--strategies", "statistical-waterfill"});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(code == 0, "mpe-study exit code " + std::to_string(code));
    if (code != 0)
        return o;
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    double worst = 0.0;
    std::string worst_at;
    while (std::getline(in, line))
    {
        std::istringstream ls(line);
        std::string f[5];
        for (auto &x : f)
            std::getline(ls, x, ',');
        const unsigned L = static_cast<unsigned>(std::stoul(f[0]));
        const double value = std::stod(f[4]);
        if (L >= 4)
        {
            o.require(value < 5.0, "MPE " + num(value, 5) + "% at L=" + f[0] + ", " + f[1] + " dB");
            if (value > worst)
            {
                worst = value;
                worst_at = "L=" + f[0] + ", " + f[1] + " dB";
            }
        }
    }
    o.require(seconds < 60.0, "runtime " + num(seconds, 3) + " s");
    o.note("max MPE over L>=4 is " + num(worst, 5) + "% (" + worst_at + "), runtime " + num(seconds, 3) + " s");
    return o;
}

// Convergence in L for statistical waterfilling versus a fixed custom allocation.
Outcome criterion_2()
{
    Outcome o;
    const std::vector<unsigned> ls = {1, 2, 4, 8, 16};
    auto profile = [](unsigned L) { return build_decay_profile({64, 5e9, 6e9, 3.0, 1.0, L, 1.0, 1.0}); };
    const auto wf = convergence_study(profile, {}, ls, 5.0);
    for (std::size_t i = 1; i < wf.points.size(); ++i)
        o.require(wf.points[i].mpe_percent < wf.points[i - 1].mpe_percent,
                  "MPE not decreasing at L=" + std::to_string(wf.points[i].L));
    const double ratio = wf.points[3].mpe_percent / wf.points[2].mpe_percent;
    o.require(ratio < 0.6, "MPE(8)/MPE(4) = " + num(ratio));

    std::vector<double> ramp(64);
    for (std::size_t n = 0; n < ramp.size(); ++n)
        ramp[n] = static_cast<double>(n + 1);
    const auto fixed = convergence_study(profile, {Strategy::custom, ramp}, ls, 5.0);
    o.require(wf.slope < fixed.slope, "slope " + num(wf.slope) + " not below custom slope " + num(fixed.slope));
    o.note("MPE(8)/MPE(4) = " + num(ratio, 4) + ", slope " + num(wf.slope, 4) + " vs custom " + num(fixed.slope, 4));
    return o;
}

// Markov <= exact <= Jensen on randomized instances.
Outcome criterion_3()
{
    Outcome o;
    Stream rng(stream_key(3, {}));
    double min_slack = INFINITY;
    for (int instance = 0; instance < 200; ++instance)
    {
        ParallelChannel ch;
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 16);
        for (std::size_t i = 0; i < n; ++i)
        {
            const double m = std::array{0.5, 1.0, 2.0, 4.0}[static_cast<std::size_t>(rng.uniform() * 4)];
            const unsigned L = 1 + static_cast<unsigned>(rng.uniform() * 8);
            ch.subchannels.push_back({0.1 + 9.9 * rng.uniform(), m, L, {}});
        }
        ch = at_snr_db(ch, -20.0 + 40.0 * rng.uniform());
        std::vector<double> w(n);
        for (auto &x : w)
            x = rng.exponential();
        for (const auto &alloc : {waterfill(mean_gains(ch), ch.n0, ch.p_total), equal_power(n, ch.p_total),
                                  custom_allocation(w, ch.p_total)})
        {
            const double exact = exact_rate(ch, alloc);
            const double up = jensen_upper(ch, alloc);
            for (double low : {markov_lower(ch, alloc), markov_lower(ch, alloc, AlphaRule{0.5})})
                min_slack = std::min(min_slack, exact - low);
            min_slack = std::min(min_slack, up - exact);
        }
    }
    o.require(min_slack >= -1e-9, "minimum slack " + num(min_slack) + " nats");
    o.note("200 instances x 3 allocations, minimum slack " + num(min_slack, 3) + " nats");
    return o;
}

// Limit and large-L expansion of the single-subchannel bound ratio.
Outcome criterion_4()
{
    Outcome o;
    const double r = ratio_rl({1.0, 1e5, 1.0, 0.5});
    o.require(r >= 0.98, "ratio_rl(L=1e5) = " + num(r, 6) + " < 0.98");
    double worst = 0.0;
    for (double L : {1e4, 2e4, 5e4, 1e5, 1e6, 1e7, 1e8})
        worst = std::max(worst, std::abs(ratio_rl({1.0, L, 1.0, 0.5}) - rl_expansion(1.0, L, 0.5).product()));
    o.require(worst <= 0.02, "expansion gap " + num(worst) + " for L >= 1e4");

    Stream rng(stream_key(4, {}));
    double worst_identity = 0.0;
    for (int i = 0; i < 20; ++i)
    {
        const double theta = std::exp(4.0 * rng.uniform() - 2.0);
        const double m = std::array{0.5, 1.0, 2.0, 4.0}[static_cast<std::size_t>(rng.uniform() * 4)];
        const unsigned L = 1 + static_cast<unsigned>(rng.uniform() * 32);
        const double p = std::exp(6.0 * rng.uniform() - 3.0);
        const double alpha = 0.05 + 0.9 * rng.uniform();
        const ParallelChannel ch{{SubchannelSpec{theta, m, L, {}}}, 1.0, p};
        PowerAllocation a;
        a.powers = {p};
        const double direct = markov_lower(ch, a, AlphaRule{alpha}) / jensen_upper(ch, a);
        const double closed = ratio_rl({m, static_cast<double>(L), p * theta * m, alpha});
        worst_identity = std::max(worst_identity, std::abs(closed - direct) / direct);
    }
    o.require(worst_identity <= 1e-12, "identity relative gap " + num(worst_identity));
    o.note("ratio_rl(1e5) = " + num(r, 6) + ", expansion gap " + num(worst, 3) + ", identity gap " +
           num(worst_identity, 3));
    return o;
}

// Quadrature against seeded Monte Carlo, plus the closed form e*E1(1).
Outcome criterion_5()
{
    Outcome o;
    Stream params(stream_key(5, {}));
    double worst_z = 0.0;
    for (std::uint64_t draw = 0; draw < 20; ++draw)
    {
        const double m = std::array{0.5, 1.0, 2.0, 4.0}[static_cast<std::size_t>(params.uniform() * 4)];
        const SubchannelSpec s{0.1 + 9.9 * params.uniform(), m, 1 + static_cast<unsigned>(params.uniform() * 8), {}};
        const double p = std::pow(10.0, -2.0 + 4.0 * params.uniform());
        const std::size_t S = 1000000;
        Stream rng(stream_key(5, {draw}));
        std::vector<double> v(S);
        for (auto &x : v)
            x = pointwise_mi(rng.gamma(s.shape(), s.theta), p, 1.0);
        const double mean = pairwise_sum(v) / S;
        double ss = 0.0;
        for (double x : v)
            ss += (x - mean) * (x - mean);
        const double se = std::sqrt(ss / (S - 1) / S);
        const double z = std::abs(ergodic_mi(s, p, 1.0) - mean) / se;
        worst_z = std::max(worst_z, z);
        o.require(z < 3.0, "draw " + std::to_string(draw) + " off by " + num(z, 3) + " SE");
    }
    const double closed = ergodic_mi({1.0, 1.0, 1, {}}, 1.0, 1.0);
    o.require(std::abs(closed - 0.5963474) <= 1e-6, "e*E1(1) case gave " + num(closed, 10));
    o.note("largest deviation " + num(worst_z, 3) + " SE over 20 draws; e*E1(1) case " + num(closed, 10));
    return o;
}

// Waterfilling: hand-solved cases, KKT conditions and dominance.
Outcome criterion_6()
{
    Outcome o;
    const std::vector<double> g1 = {1.0, 2.0}, g2 = {1.0, 4.0, 0.1};
    const auto a1 = waterfill(g1, 1.0, 1.0);
    const auto a2 = waterfill(g2, 1.0, 1.0);
    o.require(std::abs(a1.powers[0] - 0.25) <= 1e-12 && std::abs(a1.powers[1] - 0.75) <= 1e-12 &&
                  std::abs(*a1.water_level - 1.25) <= 1e-12,
              "gains [1,2] case");
    o.require(std::abs(a2.powers[0] - 0.125) <= 1e-12 && std::abs(a2.powers[1] - 0.875) <= 1e-12 &&
                  a2.powers[2] == 0.0 && std::abs(*a2.water_level - 1.125) <= 1e-12,
              "gains [1,4,0.1] case");

    Stream rng(stream_key(6, {}));
    int kkt_failures = 0, dominance_failures = 0;
    for (int instance = 0; instance < 1000; ++instance)
    {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 16);
        std::vector<double> g(n);
        for (auto &x : g)
            x = std::exp(6.0 * rng.uniform() - 3.0);
        const double n0 = std::exp(2.0 * rng.uniform() - 1.0);
        const double p = std::exp(6.0 * rng.uniform() - 3.0);
        const auto a = waterfill(g, n0, p);
        const double nu = *a.water_level;
        bool ok = std::abs(a.total() - p) <= 1e-12 * p;
        for (std::size_t i = 0; i < n; ++i)
        {
            if (a.powers[i] > 0.0)
                ok = ok && std::abs(a.powers[i] + n0 / g[i] - nu) <= 1e-12 * nu;
            else
                ok = ok && n0 / g[i] >= nu * (1.0 - 1e-12);
        }
        kkt_failures += !ok;
        auto utility = [&](const std::vector<double> &powers) {
            double u = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                u += std::log1p(powers[i] * g[i] / n0);
            return u;
        };
        const double best = utility(a.powers);
        for (int k = 0; k < 1000; ++k)
        {
            std::vector<double> w(n);
            double sum = 0.0;
            for (auto &x : w)
                sum += x = rng.exponential();
            for (auto &x : w)
                x *= p / sum;
            if (utility(w) > best + 1e-12 * std::max(1.0, best))
            {
                ++dominance_failures;
                break;
            }
        }
    }
    o.require(kkt_failures == 0, std::to_string(kkt_failures) + " instances violate the KKT conditions");
    o.require(dominance_failures == 0, std::to_string(dominance_failures) + " instances beaten by a random allocation");
    o.note("hand cases exact, 1000 instances satisfy KKT and dominate 1000 random allocations each");
    return o;
}

// Optimal SCSIT allocation against a grid search and the simpler strategies.
Outcome criterion_7()
{
    Outcome o;
    const QuadratureSpec oracle_quad{QuadratureMethod::laguerre, 128, 1e-11};
    Stream rng(stream_key(7, {}));
    double worst_gap = 0.0, worst_dominance = INFINITY;
    for (int instance = 0; instance < 20; ++instance)
    {
        ParallelChannel ch;
        for (int i = 0; i < 2; ++i)
        {
            const double m = std::array{0.5, 1.0, 2.0, 4.0}[static_cast<std::size_t>(rng.uniform() * 4)];
            ch.subchannels.push_back({std::exp(3.0 * rng.uniform() - 1.5), m, 1 + static_cast<unsigned>(rng.uniform() * 4), {}});
        }
        ch.n0 = 1.0;
        ch.p_total = 0.2 + 3.8 * rng.uniform();
        const std::size_t steps = static_cast<std::size_t>(std::floor(ch.p_total / 1e-3));
        double best_p = 0.0, best_v = -1.0;
        for (std::size_t k = 0; k <= steps; ++k)
        {
            const double p1 = std::min(ch.p_total, 1e-3 * static_cast<double>(k));
            PowerAllocation g;
            g.powers = {p1, ch.p_total - p1};
            const double v = exact_rate(ch, g, oracle_quad);
            if (v > best_v)
            {
                best_v = v;
                best_p = p1;
            }
        }
        const auto opt = optimal_scsit_allocation(ch);
        const double gap = std::max(std::abs(opt.powers[0] - best_p), std::abs(opt.powers[1] - (ch.p_total - best_p)));
        worst_gap = std::max(worst_gap, gap);
        o.require(gap <= 5e-3, "instance " + std::to_string(instance) + " differs from the grid by " + num(gap));
        const double r_opt = exact_rate(ch, opt);
        const double margin = std::min(r_opt - exact_rate(ch, waterfill(mean_gains(ch), ch.n0, ch.p_total)),
                                       r_opt - exact_rate(ch, equal_power(2, ch.p_total)));
        worst_dominance = std::min(worst_dominance, margin);
        o.require(margin >= -1e-12, "instance " + std::to_string(instance) + " is dominated by " + num(-margin));
    }
    o.note("largest grid gap " + num(worst_gap, 3) + ", smallest rate margin " + num(worst_dominance, 3));
    return o;
}

// Ingestion pipeline on synthetic data, normalization and malformed inputs.
Outcome criterion_8()
{
    Outcome o;
    const auto ch = build_decay_profile({64, 5e9, 6e9, 3.0, 1.0, 2, 1.0, 1.0});
    const std::size_t S = 10000;
    const fs::path csv = scratch("synthetic.csv");
    {
        std::ofstream out(csv, std::ios::binary);
        write_channel_csv(out, generate_synthetic(ch, S, 8));
    }
    std::ifstream in(csv, std::ios::binary);
    const SnapshotSet raw = parse_channel_csv(in);
    const SnapshotSet norm = normalize_unit_mean(raw);
    const auto mu = empirical_means(simo_gains(norm));
    // The synthetic channel has unit average mean gain, so one coefficient
    // carries mean power 1/L. After normalization to unit mean power per
    // coefficient the combined gain of bin n has mean L * mu_n.
    const double L = static_cast<double>(raw.branches);
    double worst_z = 0.0;
    for (std::size_t n = 0; n < ch.size(); ++n)
    {
        const auto &s = ch.subchannels[n];
        const double sigma = L * std::sqrt(s.shape()) * s.theta / std::sqrt(static_cast<double>(S));
        worst_z = std::max(worst_z, std::abs(mu[n] - L * mean_gain(s)) / sigma);
    }
    o.require(worst_z < 4.0, "per-bin mean off by " + num(worst_z, 3) + " sigma");
    const double pooled = pooled_mean_power(norm);
    o.require(std::abs(pooled - 1.0) <= 1e-12, "pooled mean after normalization " + num(pooled, 17));
    const SnapshotSet twice = normalize_unit_mean(norm);
    double drift = 0.0;
    for (std::size_t i = 0; i < norm.coeffs.size(); ++i)
        drift = std::max(drift, std::abs(twice.coeffs[i] - norm.coeffs[i]) / std::max(1.0, std::abs(norm.coeffs[i])));
    o.require(drift <= 1e-12, "normalization not idempotent, drift " + num(drift));

    int rejected = 0, files = 0;
    for (const auto &entry : fs::directory_iterator(fs::path(STATWF_FIXTURES) / "malformed"))
    {
        ++files;
        const int code = run_cli({"ingest", "-i", entry.path().string()});
        rejected += code == 2;
        o.require(code == 2, entry.path().filename().string() + " exit code " + std::to_string(code));
    }
    o.require(files > 0, "no malformed fixtures found");
    o.note("worst bin " + num(worst_z, 3) + " sigma, pooled mean " + num(pooled, 17) + ", " + std::to_string(rejected) +
           "/" + std::to_string(files) + " malformed files rejected with exit 2");
    return o;
}

} // namespace

int main(int argc, char **argv)
{
    const std::array<std::function<Outcome()>, 8> criteria = {criterion_1, criterion_2, criterion_3, criterion_4,
                                                              criterion_5, criterion_6, criterion_7, criterion_8};
    std::vector<int> selected;
    if (argc > 1)
    {
        const int k = std::atoi(argv[1]);
        if (k < 1 || k > 8)
        {
            std::fprintf(stderr, "usage: acceptance [1-8]\n");
            return 2;
        }
        selected.push_back(k);
    }
    else
        for (int k = 1; k <= 8; ++k)
            selected.push_back(k);

    bool all = true;
    for (int k : selected)
    {
        Outcome o;
        try
        {
            o = criteria[k - 1]();
        }
        catch (const std::exception &e)
        {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::printf("criterion %d: %s - %s\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
