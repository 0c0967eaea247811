// Copyright 2026 The SubMix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SUBMIX_SUBMIX_HPP_
#define SUBMIX_SUBMIX_HPP_

#include "submix/accounting.hpp"
#include "submix/baselines.hpp"
#include "submix/corpus.hpp"
#include "submix/error.hpp"
#include "submix/experiments.hpp"
#include "submix/lm.hpp"
#include "submix/probdist.hpp"
#include "submix/protocol.hpp"
#include "submix/random.hpp"

#endif  // SUBMIX_SUBMIX_HPP_
