/*
 * Copyright 2026 the cmam authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <string>

namespace cmam {

struct GradCheckConfig {
  std::size_t instances = 100;
  double step = 1e-4;      // central finite-difference step
  double tolerance = 1e-4; // max relative error
  std::uint64_t seed = 1;
  std::size_t max_n = 8;
  std::size_t max_d = 8;
  std::size_t max_k = 4;
  std::size_t max_f = 3;
};

struct GradCheckReport {
  std::size_t instances_run = 0;
  std::size_t comparisons = 0;   // individual parameter gradients checked
  std::size_t failures = 0;
  double worst_rel_err = 0.0;
  std::string worst_site;  // "term/tensor[index]" of the worst comparison
  bool passed() const { return failures == 0 && instances_run > 0; }
};

// Compares analytic gradients of the hinge, orthogonality, spreading, and
// total losses against central finite differences on random small instances.
// Instances are resampled away from hinge/max kinks and selection ties so
// both sides are differentiable at the evaluation point.
GradCheckReport run_gradient_check(const GradCheckConfig& cfg);

}  // namespace cmam
