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
#include "hte/parallel.hpp"

#include <algorithm>
#include <mutex>
#include <thread>
#include <vector>

namespace hte {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(size_t n, int threads,
                  const std::function<void(int worker, size_t begin, size_t end)>& fn) {
  if (n == 0) return;
  int workers = resolve_threads(threads);
  workers = static_cast<int>(std::min<size_t>(static_cast<size_t>(workers), n));
  if (workers <= 1) {
    fn(0, 0, n);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));

  const size_t chunk = n / static_cast<size_t>(workers);
  const size_t rem = n % static_cast<size_t>(workers);
  size_t begin = 0;
  for (int w = 0; w < workers; ++w) {
    const size_t len = chunk + (static_cast<size_t>(w) < rem ? 1 : 0);
    const size_t end = begin + len;
    pool.emplace_back([&, w, begin, end]() {
      try {
        fn(w, begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hte
