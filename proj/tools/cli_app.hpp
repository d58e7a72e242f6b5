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

#ifndef STATWF_TOOLS_CLI_APP_HPP
#define STATWF_TOOLS_CLI_APP_HPP

#include "statwf/experiment.hpp"
#include "statwf/statwf.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace statwf::cli
{

enum exit_code : int
{
    ok = 0,
    input_error = 2,
    output_failure = 3,
    numeric_failure = 4
};

inline std::vector<double> parse_double_list(const std::string &text, const std::string &what)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        const auto first = item.find_first_not_of(" \t");
        const auto last = item.find_last_not_of(" \t");
        const std::string trimmed = first == std::string::npos ? "" : item.substr(first, last - first + 1);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), v);
        if (trimmed.empty() || ec != std::errc() || ptr != trimmed.data() + trimmed.size() || !std::isfinite(v))
            throw domain_error(what + ": '" + trimmed + "' is not a number");
        out.push_back(v);
    }
    if (out.empty())
        throw domain_error(what + ": empty list");
    return out;
}

inline std::vector<std::size_t> parse_index_list(const std::string &text, const std::string &what)
{
    std::vector<std::size_t> out;
    for (double v : parse_double_list(text, what))
    {
        if (v < 0 || v != std::floor(v))
            throw domain_error(what + ": entries must be nonnegative integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

// Flags shared by the experiment subcommands; each overrides the config file when given.
struct ExperimentFlags
{
    std::string config_path;
    std::string output;
    std::string snr_db;
    std::string l_values;
    std::string strategies;
    std::string custom_weights;
    std::optional<std::size_t> n_bins;
    std::optional<double> decay_exponent;
    std::optional<double> m;
    std::optional<std::size_t> n_snapshots;
    std::optional<std::uint64_t> seed;
    std::string units;
    std::string a_rule;
    std::string lower_bound;
    std::string measured;
    bool full_scale = false;

    void attach(CLI::App &cmd)
    {
        cmd.add_option("--config", config_path, "JSON experiment config");
        cmd.add_option("-o,--output", output, "output CSV path");
        cmd.add_option("--snr-db", snr_db, "comma-separated SNR values in dB");
        cmd.add_option("--l", l_values, "comma-separated branch counts L");
        cmd.add_option("--strategies", strategies, "comma-separated strategy tags");
        cmd.add_option("--custom-weights", custom_weights, "comma-separated weights for the custom strategy");
        cmd.add_option("--bins", n_bins, "number of frequency bins");
        cmd.add_option("--exponent", decay_exponent, "mean-gain decay exponent");
        cmd.add_option("--m", m, "Nakagami shape m");
        cmd.add_option("--snapshots", n_snapshots, "snapshot count for sampled gains");
        cmd.add_option("--seed", seed, "random seed");
        cmd.add_option("--units", units, "rate units: nats or bits");
        cmd.add_option("--a-rule", a_rule, "Markov parameter rule: numeric or alpha");
        cmd.add_option("--lower-bound", lower_bound, "quadrature or monte-carlo");
        cmd.add_option("--measured", measured, "channel CSV to use instead of the decay profile");
        cmd.add_flag("--full-scale", full_scale, "use 588 frequency bins");
    }

    ExperimentConfig resolve() const
    {
        ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        if (full_scale)
            c.n_bins = ExperimentConfig::full_scale_bins;
        if (!output.empty()) c.output_path = output;
        if (!snr_db.empty()) c.snr_db_values = parse_double_list(snr_db, "--snr-db");
        if (!l_values.empty())
        {
            c.l_values.clear();
            for (std::size_t v : parse_index_list(l_values, "--l"))
                c.l_values.push_back(static_cast<unsigned>(v));
        }
        if (!strategies.empty())
        {
            c.strategies.clear();
            std::stringstream ss(strategies);
            std::string item;
            while (std::getline(ss, item, ','))
                c.strategies.push_back(item);
        }
        if (!custom_weights.empty()) c.custom_weights = parse_double_list(custom_weights, "--custom-weights");
        if (n_bins) c.n_bins = *n_bins;
        if (decay_exponent) c.decay_exponent = *decay_exponent;
        if (m) c.m = *m;
        if (n_snapshots) c.n_snapshots = *n_snapshots;
        if (seed) c.seed = *seed;
        if (!units.empty()) c.rate_units = units;
        if (!a_rule.empty()) c.a_rule = a_rule;
        if (!lower_bound.empty()) c.lower_bound = lower_bound;
        if (!measured.empty())
        {
            MeasuredSource src = c.measured.value_or(MeasuredSource{});
            src.path = measured;
            c.measured = src;
        }
        if (c.output_path.empty())
            throw domain_error("an output path is required (--output or output_path in the config)");
        return c;
    }
};

inline void write_outputs(const std::string &csv_path, const std::string &csv, const nlohmann::json &meta)
{
    write_text_file(csv_path, csv);
    write_text_file(sidecar_path(csv_path), meta.dump(2) + "\n");
}

inline nlohmann::json ingest_statistics(const std::string &input, const BandFilter &band,
                                        const std::vector<std::size_t> &branches)
{
    std::ifstream in(input, std::ios::binary);
    if (!in)
        throw parse_error(input + ": cannot open file", 0);
    SnapshotSet raw;
    try
    {
        raw = parse_channel_csv(in, band);
    }
    catch (const parse_error &e)
    {
        throw parse_error(input + ": " + e.what(), 0);
    }
    const double c = normalization_constant(raw);
    const SnapshotSet set = normalize_unit_mean(raw);
    const GainMatrix gains = branches.empty() ? simo_gains(set) : simo_gains(set, branches);
    const auto means = empirical_means(gains);

    nlohmann::json bins = nlohmann::json::array();
    for (std::size_t b = 0; b < set.bins(); ++b)
    {
        nlohmann::json row{{"bin", b}, {"freq_hz", set.freqs_hz[b]}, {"mean_gain", means[b]}};
        try
        {
            const auto col = gains.column(b);
            const GammaFit fit = fit_gamma_moments(col);
            row["fit_shape"] = fit.shape;
            row["fit_scale"] = fit.scale;
        }
        catch (const fit_error &)
        {
            row["fit_shape"] = nullptr;
            row["fit_scale"] = nullptr;
        }
        bins.push_back(row);
    }
    std::vector<std::size_t> used = branches;
    if (used.empty())
        for (std::size_t l = 0; l < set.branches; ++l)
            used.push_back(l);
    return nlohmann::json{{"input", input},
                          {"snapshots", set.snapshots},
                          {"branches_in_file", set.branches},
                          {"branches_used", used},
                          {"bins", set.bins()},
                          {"pooled_normalization_constant", c},
                          {"normalization", "single pooled scale over snapshots, branches and bins; applied before branch selection"},
                          {"per_bin", bins}};
}

/// Runs the command line; returns the process exit code.
inline int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    CLI::App app{"statwf: power loading and capacity bounds for parallel SIMO Nakagami-m channels"};
    app.require_subcommand(1);

    // waterfill
    auto *wf = app.add_subcommand("waterfill", "waterfill power over given mean gains");
    std::string wf_means;
    double wf_n0 = 1.0, wf_p = 1.0;
    wf->add_option("--means", wf_means, "comma-separated positive gains")->required();
    wf->add_option("--n0", wf_n0, "noise variance");
    wf->add_option("--p", wf_p, "total power budget");

    auto *sweep = app.add_subcommand("bounds-sweep", "capacity bounds against SNR, one row per (SNR, strategy)");
    ExperimentFlags sweep_flags;
    sweep_flags.attach(*sweep);

    auto *study = app.add_subcommand("mpe-study", "MPE against the branch count L");
    ExperimentFlags study_flags;
    study_flags.attach(*study);

    auto *ing = app.add_subcommand("ingest", "statistics of a channel CSV");
    std::string ing_input, ing_output, ing_branches;
    std::optional<double> ing_fmin, ing_fmax;
    ing->add_option("-i,--input", ing_input, "channel CSV")->required();
    ing->add_option("-o,--output", ing_output, "statistics JSON (stdout when omitted)");
    ing->add_option("--f-min", ing_fmin, "lowest retained frequency (Hz, inclusive)");
    ing->add_option("--f-max", ing_fmax, "highest retained frequency (Hz, inclusive)");
    ing->add_option("--branches", ing_branches, "comma-separated branch ids to combine");

    auto *gen = app.add_subcommand("gen-synthetic", "write a channel CSV sampled from the decay profile");
    ExperimentFlags gen_flags;
    gen_flags.attach(*gen);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        out << app.help();
        return ok;
    }
    catch (const CLI::CallForAllHelp &e)
    {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    }
    catch (const CLI::ParseError &e)
    {
        err << "statwf: " << e.what() << "\n";
        return input_error;
    }

    try
    {
        if (*wf)
        {
            const auto gains = parse_double_list(wf_means, "--means");
            const PowerAllocation a = waterfill(gains, wf_n0, wf_p);
            out << "subchannel,gain,power\n";
            for (std::size_t i = 0; i < gains.size(); ++i)
                out << i << ',' << format_number(gains[i]) << ',' << format_number(a.powers[i]) << '\n';
            out << "water_level," << format_number(*a.water_level) << '\n';
            out << "active," << a.active_count() << '\n';
        }
        else if (*sweep)
        {
            const ExperimentConfig c = sweep_flags.resolve();
            const SweepResult r = run_bounds_sweep(c);
            write_outputs(c.output_path, bounds_csv(r.rows), r.metadata);
        }
        else if (*study)
        {
            const ExperimentConfig c = study_flags.resolve();
            const MpeStudyResult r = run_mpe_study(c);
            write_outputs(c.output_path, mpe_csv(r.rows), r.metadata);
        }
        else if (*ing)
        {
            const auto branches = ing_branches.empty() ? std::vector<std::size_t>{}
                                                       : parse_index_list(ing_branches, "--branches");
            const nlohmann::json stats = ingest_statistics(ing_input, {ing_fmin, ing_fmax}, branches);
            if (ing_output.empty())
                out << stats.dump(2) << '\n';
            else
                write_text_file(ing_output, stats.dump(2) + "\n");
        }
        else if (*gen)
        {
            ExperimentConfig c = gen_flags.resolve();
            if (c.l_values.empty())
                c.l_values = default_sweep_l();
            validate(c);
            const ParallelChannel channel = profile_channel(c, c.l_values.front(), 0.0);
            const SnapshotSet set = generate_synthetic(channel, c.n_snapshots, c.seed);
            std::ofstream file(c.output_path, std::ios::binary | std::ios::trunc);
            if (!file)
                throw output_error("cannot open '" + c.output_path + "' for writing");
            write_channel_csv(file, set);
            file.flush();
            if (!file)
                throw output_error("failed writing '" + c.output_path + "'");
        }
    }
    catch (const output_error &e)
    {
        err << "statwf: " << e.what() << "\n";
        return output_failure;
    }
    catch (const numeric_error &e)
    {
        err << "statwf: " << e.what() << " (residual " << e.residual() << ")\n";
        return numeric_failure;
    }
    catch (const std::exception &e)
    {
        err << "statwf: " << e.what() << "\n";
        return input_error;
    }
    return ok;
}

} // namespace statwf::cli

#endif
