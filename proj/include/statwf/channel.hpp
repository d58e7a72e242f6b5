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

#ifndef STATWF_CHANNEL_HPP
#define STATWF_CHANNEL_HPP

#include "statwf/errors.hpp"
#include "statwf/numerics.hpp"
#include "statwf/random.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace statwf
{

/// Fading law of one SIMO subchannel: the combined gain over L branches is
/// Gamma(shape = m L, scale = theta).
struct SubchannelSpec
{
    double theta = 1.0;
    double m = 1.0;
    unsigned L = 1;
    std::optional<double> freq_hz;

    double shape() const { return m * static_cast<double>(L); }

    void validate() const
    {
        if (!(theta > 0.0) || !std::isfinite(theta))
            throw domain_error("SubchannelSpec: theta must be positive");
        if (!(m >= 0.5) || !std::isfinite(m))
            throw domain_error("SubchannelSpec: m must be at least 0.5");
        if (L < 1)
            throw domain_error("SubchannelSpec: L must be at least 1");
    }
};

struct ParallelChannel
{
    std::vector<SubchannelSpec> subchannels;
    double n0 = 1.0;
    double p_total = 1.0;

    std::size_t size() const { return subchannels.size(); }

    void validate() const
    {
        if (subchannels.empty())
            throw domain_error("ParallelChannel: needs at least one subchannel");
        if (!(n0 > 0.0) || !std::isfinite(n0))
            throw domain_error("ParallelChannel: n0 must be positive");
        if (!(p_total > 0.0) || !std::isfinite(p_total))
            throw domain_error("ParallelChannel: p_total must be positive");
        for (const auto &s : subchannels)
            s.validate();
    }
};

/// Realized gains, row-major over (snapshot, subchannel).
struct GainMatrix
{
    std::size_t snapshots = 0;
    std::size_t subchannels = 0;
    std::vector<double> values;
    std::optional<std::uint64_t> seed;

    GainMatrix() = default;
    GainMatrix(std::size_t s, std::size_t n) : snapshots(s), subchannels(n), values(s * n, 0.0) {}

    double &operator()(std::size_t s, std::size_t n) { return values[s * subchannels + n]; }
    double operator()(std::size_t s, std::size_t n) const { return values[s * subchannels + n]; }

    std::span<const double> snapshot(std::size_t s) const
    {
        return std::span<const double>(values).subspan(s * subchannels, subchannels);
    }

    std::vector<double> column(std::size_t n) const
    {
        std::vector<double> out(snapshots);
        for (std::size_t s = 0; s < snapshots; ++s)
            out[s] = (*this)(s, n);
        return out;
    }
};

/// mu = theta m L
inline double mean_gain(const SubchannelSpec &spec)
{
    spec.validate();
    return spec.theta * spec.m * static_cast<double>(spec.L);
}

inline std::vector<double> mean_gains(const ParallelChannel &channel)
{
    std::vector<double> mu;
    mu.reserve(channel.size());
    for (const auto &s : channel.subchannels)
        mu.push_back(mean_gain(s));
    return mu;
}

enum class FrequencyGrid
{
    bin_centers,   // f_lo + (i + 1/2) (f_hi - f_lo) / n
    band_edges     // f_lo + i (f_hi - f_lo) / (n - 1), endpoints included
};

struct DecayProfile
{
    std::size_t n_bins = 64;
    double f_lo_hz = 5e9;
    double f_hi_hz = 6e9;
    double decay_exponent = 3.0;
    double m = 1.0;
    unsigned L = 1;
    double n0 = 1.0;
    double p_total = 1.0;
    FrequencyGrid grid = FrequencyGrid::bin_centers;
};

/// Mean gains proportional to f^-decay_exponent, rescaled to unit average.
inline ParallelChannel build_decay_profile(const DecayProfile &profile)
{
    if (profile.n_bins < 1)
        throw domain_error("build_decay_profile: n_bins must be at least 1");
    if (!(profile.f_lo_hz > 0.0) || !(profile.f_hi_hz > profile.f_lo_hz) || !std::isfinite(profile.f_hi_hz))
        throw domain_error("build_decay_profile: need 0 < f_lo_hz < f_hi_hz");
    if (!(profile.decay_exponent >= 0.0))
        throw domain_error("build_decay_profile: decay_exponent must be nonnegative");

    const std::size_t n = profile.n_bins;
    const double span_hz = profile.f_hi_hz - profile.f_lo_hz;
    std::vector<double> freqs(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        if (profile.grid == FrequencyGrid::band_edges)
            freqs[i] = n == 1 ? 0.5 * (profile.f_lo_hz + profile.f_hi_hz)
                              : profile.f_lo_hz + span_hz * static_cast<double>(i) / static_cast<double>(n - 1);
        else
            freqs[i] = profile.f_lo_hz + (static_cast<double>(i) + 0.5) * span_hz / static_cast<double>(n);
    }

    // Relative to the first bin so large exponents do not underflow.
    std::vector<double> mu(n);
    for (std::size_t i = 0; i < n; ++i)
        mu[i] = std::pow(freqs[i] / freqs[0], -profile.decay_exponent);
    const double average = pairwise_sum(mu) / static_cast<double>(n);

    ParallelChannel channel;
    channel.n0 = profile.n0;
    channel.p_total = profile.p_total;
    channel.subchannels.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        SubchannelSpec spec;
        spec.m = profile.m;
        spec.L = profile.L;
        spec.theta = (mu[i] / average) / (profile.m * static_cast<double>(profile.L));
        spec.freq_hz = freqs[i];
        channel.subchannels.push_back(spec);
    }
    channel.validate();
    return channel;
}

/// Copy of the channel with every subchannel's L replaced, holding mean gains fixed.
inline ParallelChannel with_branches_fixed_mean(ParallelChannel channel, unsigned L)
{
    for (auto &s : channel.subchannels)
    {
        const double mu = s.theta * s.m * static_cast<double>(s.L);
        s.L = L;
        s.theta = mu / (s.m * static_cast<double>(L));
    }
    channel.validate();
    return channel;
}

/// Entry (s, n) ~ Gamma(m_n L_n, theta_n), drawn from the stream addressed by (seed, n, s).
inline GainMatrix sample_gains(const ParallelChannel &channel, std::size_t n_snapshots, std::uint64_t seed)
{
    channel.validate();
    if (n_snapshots == 0)
        throw domain_error("sample_gains: n_snapshots must be positive");
    GainMatrix gains(n_snapshots, channel.size());
    gains.seed = seed;
    for (std::size_t n = 0; n < channel.size(); ++n)
    {
        const auto &spec = channel.subchannels[n];
        const double shape = spec.shape();
        for (std::size_t s = 0; s < n_snapshots; ++s)
        {
            Stream stream(stream_key(seed, {n, s}));
            gains(s, n) = stream.gamma(shape, spec.theta);
        }
    }
    return gains;
}

struct GammaFit
{
    double shape;
    double scale;
};

/// Method of moments with the (1/n) sample variance: shape = mean^2/var, scale = var/mean.
inline GammaFit fit_gamma_moments(std::span<const double> samples)
{
    if (samples.size() < 2)
        throw fit_error("fit_gamma_moments: need at least two samples");
    const double n = static_cast<double>(samples.size());
    const double mean = pairwise_sum(samples) / n;
    std::vector<double> sq(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        if (!(samples[i] >= 0.0))
            throw fit_error("fit_gamma_moments: samples must be nonnegative");
        sq[i] = (samples[i] - mean) * (samples[i] - mean);
    }
    const double var = pairwise_sum(sq) / n;
    if (!(var > 0.0) || !(mean > 0.0))
        throw fit_error("fit_gamma_moments: degenerate sample (zero variance or zero mean)");
    return {mean * mean / var, var / mean};
}

} // namespace statwf

#endif
