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
#ifndef HTE_MODEL_IO_HPP_
#define HTE_MODEL_IO_HPP_

#include <string>

#include "hte/forest.hpp"

namespace hte {

// Versioned structured-text (JSON) model artifact: config, schema digest,
// trees with subsample bitmaps, surface profile, and the cached OOB nuisance
// estimates. The in-memory nuisance forests are not persisted.
void save_model(const CausalForestModel& model, const std::string& path);

// Throws SchemaError on format/version mismatch or a corrupted payload
// (the stored digest must match the reloaded trees).
CausalForestModel load_model(const std::string& path);

}  // namespace hte

#endif  // HTE_MODEL_IO_HPP_
