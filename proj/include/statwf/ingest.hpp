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

#ifndef STATWF_INGEST_HPP
#define STATWF_INGEST_HPP

#include "statwf/channel.hpp"
#include "statwf/errors.hpp"
#include "statwf/numerics.hpp"
#include "statwf/random.hpp"

#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace statwf
{

/// Complex frequency responses indexed by (snapshot, branch, bin).
struct SnapshotSet
{
    std::vector<double> freqs_hz;
    std::size_t branches = 0;
    std::size_t snapshots = 0;
    std::vector<std::complex<double>> coeffs;

    std::size_t bins() const { return freqs_hz.size(); }

    std::size_t index(std::size_t s, std::size_t l, std::size_t b) const { return (s * branches + l) * bins() + b; }
    std::complex<double> &at(std::size_t s, std::size_t l, std::size_t b) { return coeffs[index(s, l, b)]; }
    const std::complex<double> &at(std::size_t s, std::size_t l, std::size_t b) const { return coeffs[index(s, l, b)]; }

    bool operator==(const SnapshotSet &) const = default;
};

struct BandFilter
{
    std::optional<double> f_min_hz;
    std::optional<double> f_max_hz;

    bool admits(double f) const { return (!f_min_hz || f >= *f_min_hz) && (!f_max_hz || f <= *f_max_hz); }
};

inline constexpr std::string_view channel_csv_header = "snapshot,branch,bin,freq_hz,re,im";

namespace detail
{

inline std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;)
    {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos)
        {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

template <class T>
T parse_number(std::string_view field, std::string_view column, std::size_t line)
{
    T value{};
    const char *first = field.data();
    const char *last = field.data() + field.size();
    if (first != last && *first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || field.empty())
        throw parse_error("field '" + std::string(column) + "' is not a valid number: '" + std::string(field) + "'", line);
    if constexpr (std::is_floating_point_v<T>)
        if (!std::isfinite(value))
            throw parse_error("field '" + std::string(column) + "' is not finite", line);
    return value;
}

inline void append_double(std::string &out, double v)
{
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

} // namespace detail

/// Reads the flat channel CSV. Row order is free; every (snapshot, branch, bin)
/// cell must appear exactly once. Bins outside `band` are dropped after the
/// density checks, keeping their order.
inline SnapshotSet parse_channel_csv(std::istream &in, const BandFilter &band = {})
{
    struct Row
    {
        std::size_t s, l, b;
        double f, re, im;
        std::size_t line;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::size_t max_s = 0, max_l = 0, max_b = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (!have_header)
        {
            std::string_view view = line;
            if (view.starts_with("\xEF\xBB\xBF"))
                view.remove_prefix(3);
            if (view != channel_csv_header)
                throw parse_error("expected header '" + std::string(channel_csv_header) + "'", line_no);
            have_header = true;
            continue;
        }
        if (line.empty())
            continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() != 6)
            throw parse_error("expected 6 fields, found " + std::to_string(fields.size()), line_no);
        Row r;
        r.s = detail::parse_number<std::size_t>(fields[0], "snapshot", line_no);
        r.l = detail::parse_number<std::size_t>(fields[1], "branch", line_no);
        r.b = detail::parse_number<std::size_t>(fields[2], "bin", line_no);
        r.f = detail::parse_number<double>(fields[3], "freq_hz", line_no);
        r.re = detail::parse_number<double>(fields[4], "re", line_no);
        r.im = detail::parse_number<double>(fields[5], "im", line_no);
        r.line = line_no;
        max_s = std::max(max_s, r.s);
        max_l = std::max(max_l, r.l);
        max_b = std::max(max_b, r.b);
        rows.push_back(r);
    }
    if (!have_header)
        throw parse_error("missing header line", line_no ? line_no : 1);
    if (rows.empty())
        throw parse_error("no data rows", line_no);

    const std::size_t S = max_s + 1, L = max_l + 1, B = max_b + 1;
    // More implied cells than rows means some are missing. The dense scan that
    // names the first one only runs when the index ranges are plausible.
    if (S > rows.size() || L > rows.size() / S || B > rows.size() / (S * L))
    {
        std::vector<char> seen;
        const std::size_t budget = 4 * rows.size();
        if (S <= budget && L <= budget / S && B <= budget / (S * L))
        {
            seen.assign(S * L * B, 0);
            for (const Row &r : rows)
                seen[(r.s * L + r.l) * B + r.b] = 1;
            for (std::size_t i = 0; i < seen.size(); ++i)
                if (!seen[i])
                    throw parse_error("missing cell (snapshot " + std::to_string(i / (L * B)) + ", branch " +
                                          std::to_string((i / B) % L) + ", bin " + std::to_string(i % B) + ")",
                                      line_no);
        }
        throw parse_error("index ranges imply more cells than rows present; cells are missing", line_no);
    }
    SnapshotSet full;
    full.snapshots = S;
    full.branches = L;
    full.freqs_hz.assign(B, std::nan(""));
    full.coeffs.assign(S * L * B, {});
    std::vector<std::size_t> owner(S * L * B, 0);
    std::vector<std::size_t> freq_line(B, 0);
    for (const Row &r : rows)
    {
        const std::size_t idx = (r.s * L + r.l) * B + r.b;
        if (owner[idx])
            throw parse_error("duplicate cell (snapshot " + std::to_string(r.s) + ", branch " + std::to_string(r.l) +
                                  ", bin " + std::to_string(r.b) + "), first seen on line " + std::to_string(owner[idx]),
                              r.line);
        owner[idx] = r.line;
        full.coeffs[idx] = {r.re, r.im};
        if (!freq_line[r.b])
        {
            full.freqs_hz[r.b] = r.f;
            freq_line[r.b] = r.line;
        }
        else if (full.freqs_hz[r.b] != r.f)
            throw parse_error("bin " + std::to_string(r.b) + " has freq_hz inconsistent with line " +
                                  std::to_string(freq_line[r.b]),
                              r.line);
    }
    for (std::size_t i = 0; i < owner.size(); ++i)
        if (!owner[i])
            throw parse_error("missing cell (snapshot " + std::to_string(i / (L * B)) + ", branch " +
                                  std::to_string((i / B) % L) + ", bin " + std::to_string(i % B) + ")",
                              line_no);
    for (std::size_t b = 1; b < B; ++b)
        if (!(full.freqs_hz[b] > full.freqs_hz[b - 1]))
            throw parse_error("freq_hz must increase strictly with bin index (bin " + std::to_string(b) + ")",
                              freq_line[b]);

    if (!band.f_min_hz && !band.f_max_hz)
        return full;
    std::vector<std::size_t> keep;
    for (std::size_t b = 0; b < B; ++b)
        if (band.admits(full.freqs_hz[b]))
            keep.push_back(b);
    if (keep.empty())
        throw parse_error("band filter selects no bins", 0);
    SnapshotSet out;
    out.snapshots = S;
    out.branches = L;
    for (std::size_t b : keep)
        out.freqs_hz.push_back(full.freqs_hz[b]);
    out.coeffs.resize(S * L * keep.size());
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t k = 0; k < keep.size(); ++k)
                out.at(s, l, k) = full.at(s, l, keep[k]);
    return out;
}

/// Writes the channel CSV (LF endings, shortest round-trip number formatting),
/// rows ordered by snapshot, branch, bin.
inline void write_channel_csv(std::ostream &out, const SnapshotSet &set)
{
    std::string buf;
    buf.reserve(64 * 1024);
    buf.append(channel_csv_header);
    buf.push_back('\n');
    for (std::size_t s = 0; s < set.snapshots; ++s)
        for (std::size_t l = 0; l < set.branches; ++l)
            for (std::size_t b = 0; b < set.bins(); ++b)
            {
                const auto &c = set.at(s, l, b);
                buf.append(std::to_string(s)).push_back(',');
                buf.append(std::to_string(l)).push_back(',');
                buf.append(std::to_string(b)).push_back(',');
                detail::append_double(buf, set.freqs_hz[b]);
                buf.push_back(',');
                detail::append_double(buf, c.real());
                buf.push_back(',');
                detail::append_double(buf, c.imag());
                buf.push_back('\n');
                if (buf.size() > 60 * 1024)
                {
                    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
                    buf.clear();
                }
            }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

/// Pooled mean of |h|^2 over every cell.
inline double pooled_mean_power(const SnapshotSet &set)
{
    std::vector<double> power(set.coeffs.size());
    for (std::size_t i = 0; i < power.size(); ++i)
        power[i] = std::norm(set.coeffs[i]);
    return pairwise_sum(power) / static_cast<double>(power.size());
}

/// Amplitude factor c that brings the pooled mean |h|^2 to one.
inline double normalization_constant(const SnapshotSet &set)
{
    if (set.coeffs.empty())
        throw normalization_error("normalize_unit_mean: empty snapshot set");
    const double mean = pooled_mean_power(set);
    if (!(mean > 0.0) || !std::isfinite(mean))
        throw normalization_error("normalize_unit_mean: all coefficients are zero");
    return 1.0 / std::sqrt(mean);
}

/// One real scale over snapshots, branches, and bins; per-branch ratios are preserved.
inline SnapshotSet normalize_unit_mean(SnapshotSet set)
{
    const double c = normalization_constant(set);
    for (auto &h : set.coeffs)
        h *= c;
    return set;
}

/// gamma(s, bin) = sum over the chosen branches of |h|^2.
inline GainMatrix simo_gains(const SnapshotSet &set, std::span<const std::size_t> branch_ids)
{
    if (branch_ids.empty())
        throw domain_error("simo_gains: branch_ids is empty");
    for (std::size_t l : branch_ids)
        if (l >= set.branches)
            throw domain_error("simo_gains: branch " + std::to_string(l) + " does not exist (have " +
                               std::to_string(set.branches) + ")");
    GainMatrix gains(set.snapshots, set.bins());
    for (std::size_t s = 0; s < set.snapshots; ++s)
        for (std::size_t b = 0; b < set.bins(); ++b)
        {
            double sum = 0.0;
            for (std::size_t l : branch_ids)
                sum += std::norm(set.at(s, l, b));
            gains(s, b) = sum;
        }
    return gains;
}

inline GainMatrix simo_gains(const SnapshotSet &set)
{
    std::vector<std::size_t> all(set.branches);
    for (std::size_t l = 0; l < all.size(); ++l)
        all[l] = l;
    return simo_gains(set, all);
}

/// Per-subchannel mean over snapshots.
inline std::vector<double> empirical_means(const GainMatrix &gains)
{
    if (gains.snapshots == 0)
        throw domain_error("empirical_means: no snapshots");
    std::vector<double> mu(gains.subchannels);
    for (std::size_t n = 0; n < gains.subchannels; ++n)
    {
        const auto col = gains.column(n);
        mu[n] = pairwise_sum(col) / static_cast<double>(gains.snapshots);
    }
    return mu;
}

/// Synthetic measurement: branch l of subchannel n in snapshot s has
/// |h|^2 ~ Gamma(m_n, theta_n) and uniform phase, from the stream (seed, n, s, l).
/// Bins without a center frequency get their index as frequency.
inline SnapshotSet generate_synthetic(const ParallelChannel &channel, std::size_t n_snapshots, std::uint64_t seed)
{
    channel.validate();
    if (n_snapshots == 0)
        throw domain_error("generate_synthetic: n_snapshots must be positive");
    const unsigned L = channel.subchannels.front().L;
    for (const auto &s : channel.subchannels)
        if (s.L != L)
            throw domain_error("generate_synthetic: every subchannel must have the same L");
    SnapshotSet set;
    set.snapshots = n_snapshots;
    set.branches = L;
    for (std::size_t n = 0; n < channel.size(); ++n)
        set.freqs_hz.push_back(channel.subchannels[n].freq_hz.value_or(static_cast<double>(n)));
    for (std::size_t b = 1; b < set.bins(); ++b)
        if (!(set.freqs_hz[b] > set.freqs_hz[b - 1]))
            throw domain_error("generate_synthetic: subchannel frequencies must increase strictly");
    set.coeffs.resize(n_snapshots * L * channel.size());
    for (std::size_t s = 0; s < n_snapshots; ++s)
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t n = 0; n < channel.size(); ++n)
            {
                const auto &spec = channel.subchannels[n];
                Stream stream(stream_key(seed, {n, s, l}));
                const double power = stream.gamma(spec.m, spec.theta);
                const double phase = 2.0 * std::numbers::pi * stream.uniform();
                set.at(s, l, n) = std::polar(std::sqrt(power), phase);
            }
    return set;
}

} // namespace statwf

#endif
