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

// Text formats used by the command-line tool.
//
// Embedding file:   "# N C" header, then N lines of C space-separated reals.
// Truth file:       one line per query, "q: i j k" (database indices).
// Labels file:      one integer place id per line.
//
// All numbers are written in the shortest decimal form that round-trips to the
// same double, independent of the C locale.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "relkd/metrics.hpp"
#include "relkd/numeric.hpp"
#include "relkd/toy.hpp"

namespace relkd::cli {

//! Malformed or missing input. The message names the file and, where known,
//! the 1-based line.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_double(double v);

Matrix parse_embeddings(std::istream &in, const std::string &name);
Matrix read_embedding_file(const std::string &path);
void write_embeddings(std::ostream &out, const Matrix &m);
void write_embedding_file(const std::string &path, const Matrix &m);

GroundTruth parse_truth(std::istream &in, const std::string &name,
                        std::size_t num_queries, std::size_t database_size);
GroundTruth read_truth_file(const std::string &path, std::size_t num_queries,
                            std::size_t database_size);

std::vector<std::int64_t> read_labels_file(const std::string &path);

//! Per-epoch CSV: variant,seed,epoch,task_loss,kd_s,kd_c,ar1,ar1pct. Recall
//! columns are filled on the final-epoch row of each run and empty otherwise.
void write_report_csv(std::ostream &out, const ExperimentReport &report);

//! Recall@K curve CSV: k,recall
void write_curve_csv(std::ostream &out, const RecallReport &report);

}  // namespace relkd::cli
