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
#include "cli/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

namespace relkd::cli {

namespace {

[[noreturn]] void fail(const std::string &name, std::size_t line,
                       const std::string &msg) {
  throw InputError(name + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

bool blank(std::string_view s) { return split_ws(s).empty(); }

template <typename T>
bool parse_number(std::string_view tok, T &value) {
  const char *first = tok.data();
  const char *last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

std::ifstream open_or_throw(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

Matrix parse_embeddings(std::istream &in, const std::string &name) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) fail(name, 1, "empty file, expected header '# N C'");
  ++lineno;
  const auto head = split_ws(line);
  std::size_t rows = 0, cols = 0;
  if (head.size() != 3 || head[0] != "#" || !parse_number(head[1], rows) ||
      !parse_number(head[2], cols)) {
    fail(name, lineno, "malformed header, expected '# N C'");
  }
  if (rows == 0 || cols == 0) fail(name, lineno, "N and C must be >= 1");

  Matrix m(rows, cols);
  std::size_t r = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (r == rows) {
      if (blank(line)) continue;
      fail(name, lineno, "more rows than the header's N=" + std::to_string(rows));
    }
    const auto toks = split_ws(line);
    if (toks.size() != cols) {
      fail(name, lineno, "expected " + std::to_string(cols) + " values, found " +
                             std::to_string(toks.size()));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.0;
      if (!parse_number(toks[c], v)) {
        fail(name, lineno, "cannot parse '" + std::string(toks[c]) + "' as a number");
      }
      if (!std::isfinite(v)) fail(name, lineno, "non-finite value");
      m(r, c) = v;
    }
    ++r;
  }
  if (r != rows) {
    fail(name, lineno, "found " + std::to_string(r) + " rows, header says " +
                           std::to_string(rows));
  }
  return m;
}

Matrix read_embedding_file(const std::string &path) {
  std::ifstream in = open_or_throw(path);
  return parse_embeddings(in, path);
}

void write_embeddings(std::ostream &out, const Matrix &m) {
  out << "# " << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_embedding_file(const std::string &path, const Matrix &m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path + ": cannot open for writing");
  write_embeddings(out, m);
}

GroundTruth parse_truth(std::istream &in, const std::string &name,
                        std::size_t num_queries, std::size_t database_size) {
  GroundTruth truth;
  truth.positives.resize(num_queries);
  std::vector<char> seen(num_queries, 0);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) fail(name, lineno, "expected 'query: db db ...'");
    const auto qtok = split_ws(std::string_view(line).substr(0, colon));
    std::size_t q = 0;
    if (qtok.size() != 1 || !parse_number(qtok[0], q)) {
      fail(name, lineno, "malformed query index");
    }
    if (q >= num_queries) {
      fail(name, lineno, "query index " + std::to_string(q) + " out of range (" +
                             std::to_string(num_queries) + " queries)");
    }
    if (seen[q]) fail(name, lineno, "duplicate entry for query " + std::to_string(q));
    seen[q] = 1;
    for (auto tok : split_ws(std::string_view(line).substr(colon + 1))) {
      std::size_t idx = 0;
      if (!parse_number(tok, idx)) {
        fail(name, lineno, "malformed database index '" + std::string(tok) + "'");
      }
      if (idx >= database_size) {
        fail(name, lineno, "database index " + std::to_string(idx) +
                               " out of range (" + std::to_string(database_size) +
                               " rows)");
      }
      auto &pos = truth.positives[q];
      if (std::find(pos.begin(), pos.end(), idx) != pos.end()) {
        fail(name, lineno, "database index " + std::to_string(idx) +
                               " listed twice for query " + std::to_string(q));
      }
      pos.push_back(idx);
    }
  }
  return truth;
}

GroundTruth read_truth_file(const std::string &path, std::size_t num_queries,
                            std::size_t database_size) {
  std::ifstream in = open_or_throw(path);
  return parse_truth(in, path, num_queries, database_size);
}

std::vector<std::int64_t> read_labels_file(const std::string &path) {
  std::ifstream in = open_or_throw(path);
  std::vector<std::int64_t> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    std::int64_t v = 0;
    if (toks.size() != 1 || !parse_number(toks[0], v)) fail(path, lineno, "expected one integer label");
    labels.push_back(v);
  }
  return labels;
}

void write_report_csv(std::ostream &out, const ExperimentReport &report) {
  out << "variant,seed,epoch,task_loss,kd_s,kd_c,ar1,ar1pct\n";
  for (const RunResult &run : report.runs) {
    for (std::size_t e = 0; e < run.epochs.size(); ++e) {
      const EpochRecord &rec = run.epochs[e];
      out << to_string(run.variant) << ',' << run.seed << ',' << rec.epoch << ','
          << format_double(rec.task_loss) << ',' << format_double(rec.kd_s) << ','
          << format_double(rec.kd_c) << ',';
      if (e + 1 == run.epochs.size()) {
        out << format_double(run.recall.ar_at_1) << ','
            << format_double(run.recall.ar_at_1pct);
      } else {
        out << ',';
      }
      out << '\n';
    }
  }
}

void write_curve_csv(std::ostream &out, const RecallReport &report) {
  out << "k,recall\n";
  for (std::size_t k = 0; k < report.curve.size(); ++k) {
    out << (k + 1) << ',' << format_double(report.curve[k]) << '\n';
  }
}

}  // namespace relkd::cli
