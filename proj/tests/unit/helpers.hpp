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

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "cmam/matrix.hpp"
#include "cmam/model.hpp"
#include "cmam/rng.hpp"

namespace testutil {

// Self-deleting scratch directory; each test case gets a fresh one.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("cmam_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline cmam::Matrix random_matrix(std::size_t rows, std::size_t cols,
                                  double bound, cmam::Rng& rng) {
  cmam::Matrix m(rows, cols);
  for (double& v : m.data) v = rng.uniform(-bound, bound);
  return m;
}

inline cmam::CmamParams random_params(std::size_t dim, std::size_t k,
                                      const std::vector<std::size_t>& lens,
                                      cmam::Rng& rng) {
  cmam::CmamParams params;
  params.dim = dim;
  params.n_aspects = k;
  for (std::size_t len : lens) {
    cmam::ConvKernel kernel;
    kernel.len = len;
    kernel.weights = random_matrix(len * dim, k, 0.5, rng);
    kernel.bias.resize(k);
    for (double& b : kernel.bias) b = rng.uniform(-0.5, 0.5);
    params.kernels.push_back(std::move(kernel));
  }
  params.head_w = random_matrix(k, dim, 0.5, rng);
  params.head_b.resize(k);
  for (double& b : params.head_b) b = rng.uniform(-0.5, 0.5);
  params.aem = random_matrix(k, dim, 1.0, rng);
  return params;
}

inline bool bit_equal(const cmam::CmamParams& a, const cmam::CmamParams& b) {
  const auto ra = cmam::tensor_refs(a);
  const auto rb = cmam::tensor_refs(b);
  if (ra.size() != rb.size()) return false;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (*ra[i].values != *rb[i].values) return false;
  }
  return true;
}

}  // namespace testutil
