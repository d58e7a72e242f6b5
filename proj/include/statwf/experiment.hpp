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

#ifndef STATWF_EXPERIMENT_HPP
#define STATWF_EXPERIMENT_HPP

#include "statwf/alloc.hpp"
#include "statwf/channel.hpp"
#include "statwf/errors.hpp"
#include "statwf/ingest.hpp"
#include "statwf/numerics.hpp"
#include "statwf/rates.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace statwf
{

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

inline constexpr const char *workers_env = "STATWF_WORKERS";

inline unsigned worker_count()
{
    if (const char *env = std::getenv(workers_env); env && *env)
    {
        unsigned n = 0;
        const std::string_view text(env);
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
        if (ec == std::errc() && ptr == text.data() + text.size() && n > 0)
            return n;
        throw domain_error(std::string(workers_env) + " must be a positive integer");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Evaluates fn(0..count-1) on a pool; results keep index order. If any task
/// throws, the exception of the lowest failing index is rethrown.
template <class F>
auto parallel_map(std::size_t count, F fn, unsigned workers = worker_count())
{
    using R = decltype(fn(std::size_t{}));
    std::vector<std::optional<R>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++)
        {
            try
            {
                slots[i].emplace(fn(i));
            }
            catch (...)
            {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), count));
    if (n_threads <= 1)
        work();
    else
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_threads; ++t)
            pool.emplace_back(work);
    }
    for (auto &e : errors)
        if (e)
            std::rethrow_exception(e);
    std::vector<R> out;
    out.reserve(count);
    for (auto &s : slots)
        out.push_back(std::move(*s));
    return out;
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct MeasuredSource
{
    std::string path;
    std::optional<double> f_min_hz;
    std::optional<double> f_max_hz;
    std::vector<std::size_t> branches; // empty: all branches
};

struct ExperimentConfig
{
    double f_lo_hz = 5e9;
    double f_hi_hz = 6e9;
    std::size_t n_bins = 64;
    double decay_exponent = 3.0;
    double m = 1.0;
    double n0 = 1.0;
    std::vector<unsigned> l_values;     // empty: command default
    std::vector<double> snr_db_values;  // empty: command default
    std::size_t n_snapshots = 10000;
    std::uint64_t seed = 1;
    std::vector<std::string> strategies = {"statistical-waterfill", "equal"};
    std::vector<double> custom_weights;
    std::string a_rule = "numeric";     // numeric | alpha
    double alpha = 0.5;
    std::string lower_bound = "quadrature"; // quadrature | monte-carlo
    std::string rate_units = "nats";    // nats | bits
    std::string output_path;
    std::optional<MeasuredSource> measured;

    static constexpr std::size_t full_scale_bins = 588;
};

inline std::vector<double> default_sweep_snr_db()
{
    std::vector<double> out;
    for (int s = -20; s <= 20; ++s)
        out.push_back(s);
    return out;
}

inline std::vector<double> default_study_snr_db() { return {-10.0, 5.0}; }
inline std::vector<unsigned> default_sweep_l() { return {4}; }
inline std::vector<unsigned> default_study_l() { return {1, 2, 4, 8, 16}; }

inline void to_json(nlohmann::json &j, const MeasuredSource &m)
{
    j = nlohmann::json{{"path", m.path}, {"branches", m.branches}};
    j["f_min_hz"] = m.f_min_hz ? nlohmann::json(*m.f_min_hz) : nlohmann::json(nullptr);
    j["f_max_hz"] = m.f_max_hz ? nlohmann::json(*m.f_max_hz) : nlohmann::json(nullptr);
}

inline void to_json(nlohmann::json &j, const ExperimentConfig &c)
{
    j = nlohmann::json{{"f_lo_hz", c.f_lo_hz},
                       {"f_hi_hz", c.f_hi_hz},
                       {"n_bins", c.n_bins},
                       {"decay_exponent", c.decay_exponent},
                       {"m", c.m},
                       {"n0", c.n0},
                       {"l_values", c.l_values},
                       {"snr_db_values", c.snr_db_values},
                       {"n_snapshots", c.n_snapshots},
                       {"seed", c.seed},
                       {"strategies", c.strategies},
                       {"custom_weights", c.custom_weights},
                       {"a_rule", c.a_rule},
                       {"alpha", c.alpha},
                       {"lower_bound", c.lower_bound},
                       {"rate_units", c.rate_units},
                       {"output_path", c.output_path}};
    j["measured"] = c.measured ? nlohmann::json(*c.measured) : nlohmann::json(nullptr);
}

/// Reads a config document; unknown keys are rejected.
inline ExperimentConfig config_from_json(const nlohmann::json &j)
{
    if (!j.is_object())
        throw domain_error("config: top level must be a JSON object");
    ExperimentConfig c;
    try
    {
        for (auto it = j.begin(); it != j.end(); ++it)
        {
            const std::string &k = it.key();
            const auto &v = it.value();
            if (k == "f_lo_hz") c.f_lo_hz = v.get<double>();
            else if (k == "f_hi_hz") c.f_hi_hz = v.get<double>();
            else if (k == "n_bins") c.n_bins = v.get<std::size_t>();
            else if (k == "decay_exponent") c.decay_exponent = v.get<double>();
            else if (k == "m") c.m = v.get<double>();
            else if (k == "n0") c.n0 = v.get<double>();
            else if (k == "l_values") c.l_values = v.get<std::vector<unsigned>>();
            else if (k == "snr_db_values") c.snr_db_values = v.get<std::vector<double>>();
            else if (k == "n_snapshots") c.n_snapshots = v.get<std::size_t>();
            else if (k == "seed") c.seed = v.get<std::uint64_t>();
            else if (k == "strategies") c.strategies = v.get<std::vector<std::string>>();
            else if (k == "custom_weights") c.custom_weights = v.get<std::vector<double>>();
            else if (k == "a_rule") c.a_rule = v.get<std::string>();
            else if (k == "alpha") c.alpha = v.get<double>();
            else if (k == "lower_bound") c.lower_bound = v.get<std::string>();
            else if (k == "rate_units") c.rate_units = v.get<std::string>();
            else if (k == "output_path") c.output_path = v.get<std::string>();
            else if (k == "preset")
            {
                if (v.get<std::string>() != "full-scale")
                    throw domain_error("config: unknown preset '" + v.get<std::string>() + "'");
                c.n_bins = ExperimentConfig::full_scale_bins;
            }
            else if (k == "measured")
            {
                if (v.is_null())
                    continue;
                MeasuredSource m;
                for (auto mt = v.begin(); mt != v.end(); ++mt)
                {
                    if (mt.key() == "path") m.path = mt.value().get<std::string>();
                    else if (mt.key() == "f_min_hz") { if (!mt.value().is_null()) m.f_min_hz = mt.value().get<double>(); }
                    else if (mt.key() == "f_max_hz") { if (!mt.value().is_null()) m.f_max_hz = mt.value().get<double>(); }
                    else if (mt.key() == "branches") m.branches = mt.value().get<std::vector<std::size_t>>();
                    else throw domain_error("config: unknown key 'measured." + mt.key() + "'");
                }
                c.measured = m;
            }
            else
                throw domain_error("config: unknown key '" + k + "'");
        }
    }
    catch (const nlohmann::json::exception &e)
    {
        throw domain_error(std::string("config: ") + e.what());
    }
    return c;
}

inline ExperimentConfig load_config(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw domain_error("config: cannot open '" + path + "'");
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::exception &e)
    {
        throw domain_error("config: " + path + ": " + e.what());
    }
    return config_from_json(j);
}

inline void validate(const ExperimentConfig &c)
{
    if (c.strategies.empty())
        throw domain_error("config: strategies must not be empty");
    for (const auto &s : c.strategies)
    {
        const auto parsed = parse_strategy(s);
        if (!parsed || *parsed == Strategy::instantaneous_waterfill)
            throw domain_error("config: unsupported strategy '" + s + "'");
        if (*parsed == Strategy::custom && c.custom_weights.size() != c.n_bins && !c.measured)
            throw domain_error("config: custom strategy needs custom_weights with n_bins entries");
    }
    if (c.a_rule != "numeric" && c.a_rule != "alpha")
        throw domain_error("config: a_rule must be 'numeric' or 'alpha'");
    if (!(c.alpha > 0.0 && c.alpha < 1.0))
        throw domain_error("config: alpha must lie in (0, 1)");
    if (c.lower_bound != "quadrature" && c.lower_bound != "monte-carlo")
        throw domain_error("config: lower_bound must be 'quadrature' or 'monte-carlo'");
    if (c.rate_units != "nats" && c.rate_units != "bits")
        throw domain_error("config: rate_units must be 'nats' or 'bits'");
    if (c.n_snapshots == 0)
        throw domain_error("config: n_snapshots must be positive");
    if (!(c.n0 > 0.0))
        throw domain_error("config: n0 must be positive");
    for (unsigned L : c.l_values)
        if (L == 0)
            throw domain_error("config: every L must be at least 1");
    if (c.measured && c.measured->path.empty())
        throw domain_error("config: measured.path is empty");
    // Channel-shape checks (band, bins, m) are done by build_decay_profile.
    DecayProfile probe{c.n_bins, c.f_lo_hz, c.f_hi_hz, c.decay_exponent, c.m, 1, c.n0, 1.0};
    build_decay_profile(probe);
}

inline ParallelChannel profile_channel(const ExperimentConfig &c, unsigned L, double snr_db)
{
    DecayProfile profile{c.n_bins, c.f_lo_hz, c.f_hi_hz, c.decay_exponent, c.m, L, c.n0, 1.0};
    return at_snr_db(build_decay_profile(profile), snr_db);
}

inline ARule a_rule_of(const ExperimentConfig &c)
{
    if (c.a_rule == "alpha")
        return AlphaRule{c.alpha};
    return NumericMax{};
}

inline AllocationRule rule_of(const ExperimentConfig &c, const std::string &strategy)
{
    return {*parse_strategy(strategy), c.custom_weights};
}

inline double rate_scale(const ExperimentConfig &c) { return c.rate_units == "bits" ? 1.0 / std::numbers::ln2 : 1.0; }

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

struct MeasuredGains
{
    GainMatrix gains;
    std::vector<double> means;
    double normalization = 1.0;
};

inline MeasuredGains load_measured(const MeasuredSource &src)
{
    std::ifstream in(src.path, std::ios::binary);
    if (!in)
        throw parse_error("cannot open '" + src.path + "'", 0);
    const SnapshotSet raw = parse_channel_csv(in, {src.f_min_hz, src.f_max_hz});
    MeasuredGains out;
    out.normalization = normalization_constant(raw);
    const SnapshotSet set = normalize_unit_mean(raw);
    out.gains = src.branches.empty() ? simo_gains(set) : simo_gains(set, src.branches);
    out.means = empirical_means(out.gains);
    return out;
}

struct SweepResult
{
    std::vector<BoundsReport> rows; // ordered by (snr index, strategy index)
    nlohmann::json metadata;
};

inline nlohmann::json common_metadata(const ExperimentConfig &c)
{
    nlohmann::json meta;
    meta["config"] = c;
    meta["snr_definition"] = "P / (N * n0): per-subchannel transmit SNR, mean gains normalized to unit average";
    meta["awgn_normalizer"] = "parallel channel with gains fixed at the mean gains, statistical waterfilling";
    meta["upper_bound"] = "Jensen bound sum log(1 + P_n mu_n / n0) at statistical waterfilling";
    meta["rate_units"] = c.rate_units;
    meta["measurement_normalization"] = "single pooled scale over snapshots, branches and bins; applied before branch selection";
    return meta;
}

inline SweepResult run_bounds_sweep(ExperimentConfig c)
{
    if (c.snr_db_values.empty())
        c.snr_db_values = default_sweep_snr_db();
    if (c.l_values.empty())
        c.l_values = default_sweep_l();
    validate(c);
    const unsigned L = c.l_values.front();
    const QuadratureSpec quad{};

    std::optional<MeasuredGains> measured;
    if (c.measured)
        measured = load_measured(*c.measured);
    std::optional<GainMatrix> sampled;
    if (!measured && c.lower_bound == "monte-carlo")
        sampled = sample_gains(profile_channel(c, L, 0.0), c.n_snapshots, c.seed);

    const std::size_t n_strat = c.strategies.size();
    auto rows = parallel_map(c.snr_db_values.size() * n_strat, [&](std::size_t i) {
        const double snr = c.snr_db_values[i / n_strat];
        const AllocationRule rule = rule_of(c, c.strategies[i % n_strat]);
        if (measured)
        {
            const double p = power_for_snr_db(snr, measured->means.size(), c.n0);
            return evaluate_bounds_empirical(measured->gains, measured->means, c.n0, p, rule, snr);
        }
        const ParallelChannel channel = profile_channel(c, L, snr);
        if (sampled)
            return evaluate_bounds_empirical(*sampled, mean_gains(channel), c.n0, channel.p_total,
                                             allocate(rule, channel, quad), snr);
        return evaluate_bounds(channel, rule, snr, a_rule_of(c), quad);
    });
    if (c.rate_units == "bits")
        for (auto &r : rows)
            r = to_bits(r);

    SweepResult out;
    out.rows = std::move(rows);
    out.metadata = common_metadata(c);
    out.metadata["command"] = "bounds-sweep";
    if (measured)
    {
        out.metadata["source"] = "measured";
        out.metadata["snapshots"] = measured->gains.snapshots;
        out.metadata["pooled_normalization_constant"] = measured->normalization;
        out.metadata["lower_bound"] = "snapshot average; Markov bound on the empirical gain distribution";
    }
    else
    {
        out.metadata["source"] = "decay-profile";
        out.metadata["L"] = L;
        out.metadata["lower_bound"] = c.lower_bound == "monte-carlo" ? "snapshot average over sampled gains"
                                                                     : "expectation by adaptive quadrature";
    }
    return out;
}

struct MpeRow
{
    unsigned L;
    double snr_db;
    double c_upper;
    double c_lower_exact;
    double mpe_percent;
};

struct MpeStudyResult
{
    std::vector<MpeRow> rows; // ordered by (L, snr)
    std::vector<double> slopes; // per snr_db, log MPE against log L
    nlohmann::json metadata;
};

inline MpeStudyResult run_mpe_study(ExperimentConfig c)
{
    if (c.snr_db_values.empty())
        c.snr_db_values = default_study_snr_db();
    if (c.l_values.empty())
        c.l_values = default_study_l();
    validate(c);
    if (c.l_values.size() < 2)
        throw domain_error("mpe-study: needs at least two L values");
    for (std::size_t i = 1; i < c.l_values.size(); ++i)
        if (c.l_values[i] <= c.l_values[i - 1])
            throw domain_error("mpe-study: L values must be strictly increasing");
    if (c.measured)
        throw domain_error("mpe-study: runs on the synthetic decay profile only");
    const AllocationRule rule = rule_of(c, c.strategies.front());
    const QuadratureSpec quad{};
    const std::size_t n_snr = c.snr_db_values.size();

    auto rows = parallel_map(c.l_values.size() * n_snr, [&](std::size_t i) {
        const unsigned L = c.l_values[i / n_snr];
        const double snr = c.snr_db_values[i % n_snr];
        const ParallelChannel channel = profile_channel(c, L, snr);
        const PowerAllocation stat = waterfill(mean_gains(channel), channel.n0, channel.p_total);
        const PowerAllocation alloc =
            rule.strategy == Strategy::statistical_waterfill ? stat : allocate(rule, channel, quad);
        MpeRow row{L, snr, jensen_upper(channel, stat), 0.0, 0.0};
        if (c.lower_bound == "monte-carlo")
            row.c_lower_exact = empirical_rate(sample_gains(channel, c.n_snapshots, c.seed), alloc, channel.n0);
        else
            row.c_lower_exact = exact_rate(channel, alloc, quad);
        row.mpe_percent = mpe(row.c_upper, row.c_lower_exact);
        return row;
    });

    MpeStudyResult out;
    out.metadata = common_metadata(c);
    out.metadata["command"] = "mpe-study";
    out.metadata["strategy"] = c.strategies.front();
    nlohmann::json slopes = nlohmann::json::array();
    for (std::size_t k = 0; k < n_snr; ++k)
    {
        std::vector<double> x, y;
        for (const auto &r : rows)
            if (r.snr_db == c.snr_db_values[k])
            {
                x.push_back(std::log(static_cast<double>(r.L)));
                y.push_back(std::log(r.mpe_percent));
            }
        out.slopes.push_back(least_squares_slope(x, y));
        slopes.push_back({{"snr_db", c.snr_db_values[k]}, {"log_log_slope", out.slopes.back()}});
    }
    out.metadata["mpe_slopes"] = slopes;
    const double scale = rate_scale(c);
    for (auto &r : rows)
    {
        r.c_upper *= scale;
        r.c_lower_exact *= scale;
    }
    out.rows = std::move(rows);
    return out;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline std::string format_number(double v)
{
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string bounds_csv(const std::vector<BoundsReport> &rows)
{
    std::string out = "snr_db,strategy,c_upper,c_lower_exact,c_lower_markov,c_awgn_ref,normalized_upper,"
                      "normalized_lower,mpe_percent\n";
    for (const auto &r : rows)
    {
        out += format_number(r.snr_db) + ',' + std::string(to_string(r.strategy)) + ',' + format_number(r.c_upper) +
               ',' + format_number(r.c_lower_exact) + ',' + format_number(r.c_lower_markov) + ',' +
               format_number(r.c_awgn_ref) + ',' + format_number(r.normalized_upper) + ',' +
               format_number(r.normalized_lower) + ',' + format_number(r.mpe_percent) + '\n';
    }
    return out;
}

inline std::string mpe_csv(const std::vector<MpeRow> &rows)
{
    std::string out = "L,snr_db,c_upper,c_lower_exact,mpe_percent\n";
    for (const auto &r : rows)
        out += std::to_string(r.L) + ',' + format_number(r.snr_db) + ',' + format_number(r.c_upper) + ',' +
               format_number(r.c_lower_exact) + ',' + format_number(r.mpe_percent) + '\n';
    return out;
}

// Output files could not be written.
class output_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

inline void write_text_file(const std::string &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw output_error("cannot open '" + path + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out)
        throw output_error("failed writing '" + path + "'");
}

inline std::string sidecar_path(const std::string &csv_path) { return csv_path + ".meta.json"; }

} // namespace statwf

#endif
