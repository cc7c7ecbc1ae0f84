/*
 * Copyright 2026 The embdiag Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include <cstddef>
#include <functional>

namespace embdiag {

// Worker count used by parallel_for. Defaults to EMBDIAG_THREADS when set,
// otherwise std::thread::hardware_concurrency().
std::size_t num_threads();
void set_num_threads(std::size_t n);
std::size_t default_num_threads();

// Calls fn(i) for every i in [0, n). Work is split into contiguous chunks;
// fn must only write to state owned by index i. The first exception thrown
// by any worker is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace embdiag
