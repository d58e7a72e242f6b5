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

#ifndef STATWF_RANDOM_HPP
#define STATWF_RANDOM_HPP

#include "statwf/errors.hpp"

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace statwf
{

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Key for an independent stream addressed by (seed, counters...).
inline constexpr std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> counters)
{
    std::uint64_t key = splitmix64_mix(seed + 0x9E3779B97F4A7C15ULL);
    for (std::uint64_t c : counters)
        key = splitmix64_mix(key ^ splitmix64_mix(c + 0xD1B54A32D192ED03ULL));
    return key;
}

// SplitMix64 sequence. Meets UniformRandomBitGenerator; all derived variates are
// computed here so output is bit-identical across standard libraries.
class Stream
{
public:
    using result_type = std::uint64_t;

    explicit constexpr Stream(std::uint64_t key) : state_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()()
    {
        state_ += 0x9E3779B97F4A7C15ULL;
        return splitmix64_mix(state_);
    }

    // Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    double exponential() { return -std::log(uniform()); }

    // Standard normal, Marsaglia polar method (one of the pair is discarded).
    double normal()
    {
        double x, y, r;
        do
        {
            x = 2.0 * uniform() - 1.0;
            y = 2.0 * uniform() - 1.0;
            r = x * x + y * y;
        } while (r >= 1.0 || r == 0.0);
        return x * std::sqrt(-2.0 * std::log(r) / r);
    }

    /// Gamma(shape, scale) by Marsaglia-Tsang; shape < 1 uses G(a) = G(a+1) U^{1/a}.
    double gamma(double shape, double scale)
    {
        if (!(shape > 0.0) || !(scale > 0.0))
            throw domain_error("gamma variate: shape and scale must be positive");
        if (shape < 1.0)
        {
            const double boost = std::pow(uniform(), 1.0 / shape);
            return gamma(shape + 1.0, scale) * boost;
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;)
        {
            double x, v;
            do
            {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2)
                return d * v * scale;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v)))
                return d * v * scale;
        }
    }

private:
    std::uint64_t state_;
};

} // namespace statwf

#endif
