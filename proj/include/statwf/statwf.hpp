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

#ifndef STATWF_STATWF_HPP
#define STATWF_STATWF_HPP

#include "statwf/alloc.hpp"
#include "statwf/channel.hpp"
#include "statwf/errors.hpp"
#include "statwf/ingest.hpp"
#include "statwf/numerics.hpp"
#include "statwf/random.hpp"
#include "statwf/rates.hpp"
#include "statwf/specfun.hpp"

#endif
