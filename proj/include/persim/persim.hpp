// Copyright 2026 The Persim Authors.
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

#include "persim/als.hpp"
#include "persim/bpr.hpp"
#include "persim/error.hpp"
#include "persim/evalkit.hpp"
#include "persim/factor_model.hpp"
#include "persim/interactions.hpp"
#include "persim/pipeline.hpp"
#include "persim/reranker.hpp"
#include "persim/simcore.hpp"
#include "persim/synthgen.hpp"
