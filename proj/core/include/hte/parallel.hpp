/*
 * Copyright 2026 The hte Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef HTE_PARALLEL_HPP_
#define HTE_PARALLEL_HPP_

#include <cstddef>
#include <exception>
#include <functional>

namespace hte {

// Resolves 0 to hardware concurrency.
int resolve_threads(int requested);

// Runs fn(worker, begin, end) over a static partition of [0, n). Each item is
// owned by exactly one worker, so writes to per-item slots are race-free and
// results are independent of the worker count. The first exception thrown by
// any worker is rethrown on the calling thread.
void parallel_for(size_t n, int threads,
                  const std::function<void(int worker, size_t begin, size_t end)>& fn);

}  // namespace hte

#endif  // HTE_PARALLEL_HPP_
