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
#include "cmam/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "cmam/errors.hpp"
#include "cmam/matrix.hpp"
#include "cmam/model.hpp"
#include "cmam/objective.hpp"
#include "cmam/rng.hpp"

namespace cmam {

namespace {

struct Instance {
  Matrix s;
  Matrix negatives;
  CmamParams params;
};

Matrix random_matrix(std::size_t rows, std::size_t cols, double bound,
                     Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.uniform(-bound, bound);
  return m;
}

Instance sample_instance(const GradCheckConfig& cfg, Rng& rng) {
  Instance inst;
  const std::size_t k = 2 + rng.index(cfg.max_k - 1);
  const std::size_t d = 2 + rng.index(cfg.max_d - 1);
  const std::size_t n = 2 + rng.index(cfg.max_n - 1);
  const std::size_t f = 1 + rng.index(cfg.max_f);
  static const std::size_t kLens[] = {1, 3, 5};

  inst.s = random_matrix(n, d, 1.0, rng);
  inst.negatives = random_matrix(1 + rng.index(3), d, 1.0, rng);

  inst.params.dim = d;
  inst.params.n_aspects = k;
  for (std::size_t i = 0; i < f; ++i) {
    ConvKernel kernel;
    kernel.len = kLens[rng.index(3)];
    kernel.weights = random_matrix(kernel.len * d, k, 0.5, rng);
    kernel.bias.resize(k);
    for (double& v : kernel.bias) v = rng.uniform(-0.5, 0.5);
    inst.params.kernels.push_back(std::move(kernel));
  }
  // A zero head would tie every p at 0.5; randomize it so top-2 is distinct.
  inst.params.head_w = random_matrix(k, d, 0.5, rng);
  inst.params.head_b.resize(k);
  for (double& v : inst.params.head_b) v = rng.uniform(-0.5, 0.5);
  inst.params.aem = random_matrix(k, d, 1.0, rng);
  return inst;
}

// True when every max(0, .) argument, norm, and selection gap clears a
// margin wide enough that a +-step perturbation cannot cross a kink.
bool margins_ok(const Instance& inst, const ForwardState& state,
                const TrainConfig& cfg) {
  constexpr double kKinkMargin = 1e-2;
  constexpr double kGapMargin = 5e-3;
  const std::size_t k = inst.params.n_aspects;

  for (std::size_t i = 0; i < inst.negatives.rows; ++i) {
    const double arg = 1.0 - dot(state.rs, state.ts) +
                       dot(state.rs, inst.negatives.row(i));
    if (std::fabs(arg) <= kKinkMargin) return false;
  }

  Matrix ahat = inst.params.aem;
  for (std::size_t j = 0; j < k; ++j) {
    const double norm = l2_norm(ahat.row(j));
    if (norm <= 0.1) return false;
    for (double& v : ahat.row(j)) v /= norm;
  }
  double frob_sq = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      const double g =
          dot(ahat.row(a), ahat.row(b)) - (a == b ? 1.0 : 0.0);
      frob_sq += g * g;
    }
  }
  const double frob = std::sqrt(frob_sq);
  if (frob <= kKinkMargin) return false;
  if (std::fabs(frob - cfg.ortho_offset_s) <= kKinkMargin) return false;

  std::vector<double> sorted(state.p.begin(), state.p.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  if (sorted[0] - sorted[1] <= kGapMargin) return false;
  if (k > 2 && sorted[1] - sorted[2] <= kGapMargin) return false;

  const auto [j, l] = top_two(state.p);
  std::vector<double> diff1(inst.params.dim);
  std::vector<double> diff2(inst.params.dim);
  for (std::size_t c = 0; c < inst.params.dim; ++c) {
    diff1[c] = state.as_rows(j, c) - inst.params.aem(j, c);
    diff2[c] = state.as_rows(j, c) - state.as_rows(l, c);
  }
  const double d1 = l2_norm(diff1);
  const double d2 = l2_norm(diff2);
  if (d1 <= kKinkMargin || d2 <= kKinkMargin) return false;
  if (std::fabs(1.0 + d1 - d2) <= kKinkMargin) return false;
  return true;
}

LossBreakdown eval(const Instance& inst, const TrainConfig& cfg) {
  const ForwardState state = forward(inst.s, inst.params);
  return total_loss(state, inst.negatives, inst.params.aem, cfg);
}

double pick(const LossBreakdown& loss, LossTerm term) {
  switch (term) {
    case LossTerm::kHinge: return loss.h;
    case LossTerm::kOrtho: return loss.u;
    case LossTerm::kTlas: return loss.t;
    case LossTerm::kTotal: return loss.total;
  }
  return 0.0;
}

const char* term_name(LossTerm term) {
  switch (term) {
    case LossTerm::kHinge: return "hinge";
    case LossTerm::kOrtho: return "ortho";
    case LossTerm::kTlas: return "tlas";
    case LossTerm::kTotal: return "total";
  }
  return "?";
}

}  // namespace

GradCheckReport run_gradient_check(const GradCheckConfig& cfg) {
  if (cfg.instances == 0) throw config_error("gradcheck: zero instances");
  if (cfg.step <= 0.0 || cfg.tolerance <= 0.0) {
    throw config_error("gradcheck: step and tolerance must be positive");
  }
  if (cfg.max_k < 2 || cfg.max_d < 2 || cfg.max_n < 2 || cfg.max_f < 1) {
    throw config_error("gradcheck: degenerate size bounds");
  }

  TrainConfig tcfg;
  tcfg.tlas_enabled = true;
  tcfg.tlas_scale = 1.0;

  static const LossTerm kTerms[] = {LossTerm::kHinge, LossTerm::kOrtho,
                                    LossTerm::kTlas, LossTerm::kTotal};
  Rng rng(cfg.seed);
  GradCheckReport report;

  for (std::size_t run = 0; run < cfg.instances; ++run) {
    Instance inst;
    bool found = false;
    for (std::size_t attempt = 0; attempt < 1000; ++attempt) {
      inst = sample_instance(cfg, rng);
      const ForwardState state = forward(inst.s, inst.params);
      if (margins_ok(inst, state, tcfg)) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw numeric_error("gradcheck: no instance clear of kinks in 1000 "
                          "draws");
    }
    ++report.instances_run;

    const ForwardState state = forward(inst.s, inst.params);
    std::vector<CmamParams> analytic;
    for (LossTerm term : kTerms) {
      analytic.push_back(
          sentence_gradients(state, inst.negatives, inst.params, tcfg, term));
    }
    std::vector<std::vector<ConstTensorRef>> analytic_refs;
    for (const CmamParams& grads : analytic) {
      analytic_refs.push_back(tensor_refs(grads));
    }

    auto refs = tensor_refs(inst.params);
    for (std::size_t ti = 0; ti < refs.size(); ++ti) {
      std::vector<double>& values = *refs[ti].values;
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + cfg.step;
        const LossBreakdown plus = eval(inst, tcfg);
        values[i] = saved - cfg.step;
        const LossBreakdown minus = eval(inst, tcfg);
        values[i] = saved;

        for (std::size_t w = 0; w < 4; ++w) {
          const double fd =
              (pick(plus, kTerms[w]) - pick(minus, kTerms[w])) /
              (2.0 * cfg.step);
          const double a = (*analytic_refs[w][ti].values)[i];
          const double rel = std::fabs(a - fd) /
                             std::max({std::fabs(a), std::fabs(fd), 1e-3});
          ++report.comparisons;
          if (rel > report.worst_rel_err) {
            report.worst_rel_err = rel;
            char site[96];
            std::snprintf(site, sizeof site, "%s/%s[%zu]",
                          term_name(kTerms[w]), refs[ti].name.c_str(), i);
            report.worst_site = site;
          }
          if (rel >= cfg.tolerance) ++report.failures;
        }
      }
    }
  }
  return report;
}

}  // namespace cmam
