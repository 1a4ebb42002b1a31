// Copyright 2026 The tokplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "tokplan/codebook.hpp"
#include "tokplan/errors.hpp"
#include "tokplan/generator.hpp"
#include "tokplan/geometry.hpp"
#include "tokplan/metrics.hpp"
#include "tokplan/policy.hpp"
#include "tokplan/rng.hpp"
#include "tokplan/scenario.hpp"
#include "tokplan/tokenizer.hpp"
#include "tokplan/training.hpp"
