// Copyright 2026 The relkd Authors
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

#include <iosfwd>
#include <string>
#include <vector>

#include "relkd/losses.hpp"

namespace relkd::cli {

// Exit codes are a stable contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInputError = 2;

//! Max relative error (infinity-norm, see max_relative_error) between the
//! analytic student gradient of one loss and central finite differences.
double loss_gradient_error(const EmbeddingBatch &teacher,
                           const EmbeddingBatch &student, Scheme scheme,
                           Manifold manifold, const DistillConfig &cfg,
                           double h = kDefaultFiniteDiffStep);

//! Entry point shared by main() and the tests. argv[0] is the program name.
int run_cli(const std::vector<std::string> &args, std::ostream &out,
            std::ostream &err);

}  // namespace relkd::cli
