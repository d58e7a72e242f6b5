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

#ifndef STATWF_ERRORS_HPP
#define STATWF_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace statwf
{

// Argument outside the mathematical domain of an operation.
class domain_error : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

// Iterative method failed to converge, or produced a non-finite value.
class numeric_error : public std::runtime_error
{
public:
    explicit numeric_error(const std::string &what, double residual = 0.0)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class fit_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// A metric whose denominator vanishes (e.g. MPE against a zero lower bound).
class metric_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class normalization_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Malformed channel data. line() is 1-based; 0 means "whole file".
class parse_error : public std::runtime_error
{
public:
    parse_error(const std::string &what, std::size_t line)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace statwf

#endif
