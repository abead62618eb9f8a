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

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace persim::detail {

/// Splits [0, n) into at most `threads` contiguous blocks and runs
/// body(begin, end) for each block on its own thread.
template <typename Body>
void parallel_blocks(std::size_t n, unsigned threads, Body&& body) {
  if (n == 0) return;
  unsigned workers_wanted =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  if (workers_wanted == 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(workers_wanted);
  std::size_t block = (n + workers_wanted - 1) / workers_wanted;
  for (unsigned t = 0; t < workers_wanted; ++t) {
    std::size_t begin = std::min(n, t * block);
    std::size_t end = std::min(n, begin + block);
    workers.emplace_back([&body, &errors, t, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// body(i) for every i in [0, n). Bodies must only write state owned by i.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  parallel_blocks(n, threads, [&body](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) body(i);
  });
}

}  // namespace persim::detail
