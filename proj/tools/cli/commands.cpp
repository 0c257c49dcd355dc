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
#include "cli/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <ostream>
#include <stdexcept>

#include "cli/io.hpp"
#include "relkd/geometry.hpp"
#include "relkd/metrics.hpp"
#include "relkd/toy.hpp"
#include "relkd/version.hpp"

namespace relkd::cli {

namespace {

struct DistillFlags {
  double lambda_s = 1.0;
  double lambda_c = 1.0;
  double curvature = 1.0;
  double delta = 1.0;
  std::string reduction = "mean";
  bool include_diagonal = true;
  bool rkd_normalize = false;
  double hyp_prescale = 1.0;
  std::vector<std::string> manifolds{"euc", "cos", "hyp"};

  void attach(CLI::App &app) {
    app.add_option("--lambda-s", lambda_s, "Weight of the self-agent loss")->capture_default_str();
    app.add_option("--lambda-c", lambda_c, "Weight of the cross-agent loss")->capture_default_str();
    app.add_option("--curvature", curvature, "Poincare ball curvature c > 0")->capture_default_str();
    app.add_option("--delta", delta, "Huber threshold")->capture_default_str();
    app.add_option("--reduction", reduction, "mean or sum over loss terms")
        ->check(CLI::IsMember({"mean", "sum"}))
        ->capture_default_str();
    app.add_option("--include-diagonal", include_diagonal, "Include i == j terms (true/false)")
        ->capture_default_str();
    app.add_flag("--rkd-normalize", rkd_normalize,
                 "Divide each relation matrix by its off-diagonal mean");
    app.add_option("--hyp-prescale", hyp_prescale, "Scale applied before exp_0")
        ->capture_default_str();
    app.add_option("--manifolds", manifolds, "Comma-separated subset of euc,cos,hyp")
        ->delimiter(',')
        ->check(CLI::IsMember({"euc", "cos", "hyp"}));
  }

  DistillConfig config() const {
    DistillConfig cfg;
    cfg.lambda_s = lambda_s;
    cfg.lambda_c = lambda_c;
    cfg.curvature = Curvature(curvature);
    cfg.huber_delta = delta;
    cfg.reduction = reduction == "sum" ? Reduction::Sum : Reduction::Mean;
    cfg.include_diagonal = include_diagonal;
    cfg.rkd_normalize = rkd_normalize;
    cfg.hyp_prescale = hyp_prescale;
    cfg.manifold_set.clear();
    for (const auto &m : manifolds) cfg.manifold_set.push_back(parse_manifold(m));
    cfg.validate();
    return cfg;
  }
};

constexpr Scheme kRelationalSchemes[] = {Scheme::TT_SS, Scheme::TS_SS, Scheme::TT_TS};

void print_kv(std::ostream &out, const std::string &key, double v) {
  out << key << '=' << format_double(v) << '\n';
}

// --- loss -------------------------------------------------------------------

struct LossArgs {
  std::string teacher, student, labels;
  double margin = 0.2;
};

int cmd_loss(const LossArgs &args, const DistillFlags &flags, std::ostream &out) {
  const Matrix t = read_embedding_file(args.teacher);
  const Matrix s = read_embedding_file(args.student);
  if (t.rows() != s.rows() || t.cols() != s.cols()) {
    throw InputError(args.student + ": shape " + std::to_string(s.rows()) + "x" +
                     std::to_string(s.cols()) + " does not match teacher " +
                     args.teacher + " shape " + std::to_string(t.rows()) + "x" +
                     std::to_string(t.cols()));
  }
  const DistillConfig cfg = flags.config();

  LossResult task{0.0, Matrix(s.rows(), s.cols())};
  if (!args.labels.empty()) {
    TripletConfig tcfg;
    tcfg.margin = args.margin;
    task = triplet_loss(s, read_labels_file(args.labels), tcfg);
  }

  // Everything is computed before printing so a failure leaves no partial block.
  std::vector<std::pair<std::string, double>> rows;
  for (Scheme scheme : kRelationalSchemes) {
    for (Manifold m : cfg.manifold_set) {
      rows.emplace_back(std::string(to_string(scheme)) + "_" + std::string(to_string(m)),
                        scheme_loss(t, s, scheme, m, cfg).value);
    }
  }
  rows.emplace_back("direct", scheme_loss(t, s, Scheme::DIRECT, Manifold::Euclidean, cfg).value);
  rows.emplace_back("kd_s", kd_s_loss(t, s, cfg).value);
  rows.emplace_back("kd_c", kd_c_loss(t, s, cfg).value);
  rows.emplace_back("task", task.value);
  rows.emplace_back("total_s", total_loss(task, t, s, cfg, Objective::Self).value);
  rows.emplace_back("total_c", total_loss(task, t, s, cfg, Objective::Cross).value);
  rows.emplace_back("total_sc", total_loss(task, t, s, cfg, Objective::SelfCross).value);
  for (const auto &[key, value] : rows) print_kv(out, key, value);
  return kExitOk;
}

// --- gradcheck --------------------------------------------------------------

struct GradcheckArgs {
  std::size_t n = 4;
  std::size_t c = 8;
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
};

int cmd_gradcheck(const GradcheckArgs &args, const DistillFlags &flags,
                  std::ostream &out) {
  if (args.n < 2) throw std::invalid_argument("--n must be >= 2");
  if (args.c < 1) throw std::invalid_argument("--c must be >= 1");
  const DistillConfig cfg = flags.config();
  RngStream rng = seeded_rng(args.seed);

  struct Case {
    Scheme scheme;
    Manifold manifold;
  };
  std::vector<Case> cases;
  for (Scheme scheme : kRelationalSchemes)
    for (Manifold m : {Manifold::Euclidean, Manifold::Cosine, Manifold::Hyperbolic})
      cases.push_back({scheme, m});
  cases.push_back({Scheme::DIRECT, Manifold::Euclidean});

  bool all_ok = true;
  for (const Case &c : cases) {
    const Matrix t = random_normal(rng, args.n, args.c);
    const Matrix s = random_normal(rng, args.n, args.c);
    const double e = loss_gradient_error(t, s, c.scheme, c.manifold, cfg);
    const bool ok = e < args.tolerance;
    all_ok = all_ok && ok;
    out << to_string(c.scheme);
    if (c.scheme != Scheme::DIRECT) out << '_' << to_string(c.manifold);
    out << " max_rel_err=" << format_double(e) << (ok ? " ok" : " FAIL") << '\n';
  }
  out << (all_ok ? "gradcheck passed" : "gradcheck FAILED") << '\n';
  return all_ok ? kExitOk : kExitCheckFailed;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string queries, database, truth, curve;
  std::size_t k_max = 0;
};

int cmd_eval(const EvalArgs &args, std::ostream &out) {
  const Matrix q = read_embedding_file(args.queries);
  const Matrix db = read_embedding_file(args.database);
  if (q.cols() != db.cols()) {
    throw InputError(args.queries + ": dimension " + std::to_string(q.cols()) +
                     " does not match database dimension " + std::to_string(db.cols()));
  }
  const GroundTruth truth = read_truth_file(args.truth, q.rows(), db.rows());
  const RecallReport report = evaluate_recall(q, db, truth, args.k_max);
  print_kv(out, "ar1", report.ar_at_1);
  print_kv(out, "ar1pct", report.ar_at_1pct);
  out << "k_1pct=" << one_percent_k(db.rows()) << '\n';
  out << "queries_evaluated=" << report.num_queries_evaluated << '\n';
  out << "queries_skipped=" << report.num_queries_skipped << '\n';
  if (!args.curve.empty()) {
    std::ofstream f(args.curve, std::ios::binary);
    if (!f) throw InputError(args.curve + ": cannot open for writing");
    write_curve_csv(f, report);
  }
  return kExitOk;
}

// --- toy --------------------------------------------------------------------

struct ToyArgs {
  SceneConfig scene;
  std::size_t epochs = ExperimentConfig{}.epochs;
  double learning_rate = ExperimentConfig{}.learning_rate;
  std::size_t hidden = ExperimentConfig{}.hidden_dim;
  std::size_t student_dim = 0;
  std::string adaptor = "none";
  double margin = TripletConfig{}.margin;
  std::vector<std::string> variants{"none", "s", "c", "sc"};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out;
};

void print_summary(std::ostream &out, const ExperimentReport &report) {
  out << "variant runs mean_ar1 std_ar1 mean_ar1pct std_ar1pct\n";
  for (const VariantSummary &v : report.summary) {
    std::size_t runs = 0;
    for (const RunResult &r : report.runs) runs += r.variant == v.variant;
    out << to_string(v.variant) << ' ' << runs << ' ' << format_double(v.mean_ar1)
        << ' ' << format_double(v.std_ar1) << ' ' << format_double(v.mean_ar1pct)
        << ' ' << format_double(v.std_ar1pct) << '\n';
  }
}

int cmd_toy(const ToyArgs &args, const DistillFlags &flags, std::ostream &out,
            std::ostream &err) {
  ExperimentConfig cfg;
  cfg.scene = args.scene;
  cfg.distill = flags.config();
  cfg.triplet.margin = args.margin;
  cfg.epochs = args.epochs;
  cfg.learning_rate = args.learning_rate;
  cfg.hidden_dim = args.hidden;
  cfg.student_dim = args.student_dim;
  cfg.adaptor = args.adaptor == "teacher"   ? AdaptorSide::Teacher
                : args.adaptor == "student" ? AdaptorSide::Student
                                            : AdaptorSide::None;
  cfg.variants.clear();
  for (const auto &v : args.variants) cfg.variants.push_back(parse_objective(v));
  cfg.seeds = args.seeds;
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("--lr must be > 0");
  if (cfg.hidden_dim < 1) throw std::invalid_argument("--hidden must be >= 1");

  ExperimentReport report;
  try {
    report = run_experiment(cfg);
  } catch (const std::runtime_error &e) {
    // Divergence; configuration errors are logic_errors and propagate.
    err << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }

  if (args.out.empty()) {
    write_report_csv(out, report);
    print_summary(err, report);
  } else {
    std::ofstream f(args.out, std::ios::binary);
    if (!f) throw InputError(args.out + ": cannot open for writing");
    write_report_csv(f, report);
    print_summary(out, report);
  }
  return kExitOk;
}

}  // namespace

double loss_gradient_error(const EmbeddingBatch &teacher,
                           const EmbeddingBatch &student, Scheme scheme,
                           Manifold manifold, const DistillConfig &cfg, double h) {
  const LossResult analytic = scheme_loss(teacher, student, scheme, manifold, cfg);
  const Vector numeric = finite_diff_grad(
      [&](std::span<const double> x) {
        const Matrix probe(student.rows(), student.cols(), Vector(x.begin(), x.end()));
        return scheme_loss(teacher, probe, scheme, manifold, cfg).value;
      },
      student.data(), h);
  return max_relative_error(analytic.grad.data(), numeric);
}

int run_cli(const std::vector<std::string> &args, std::ostream &out,
            std::ostream &err) {
  CLI::App app{"Relational knowledge-distillation losses, gradient checks and VPR recall", "relkd"};
  app.require_subcommand(1);

  DistillFlags flags;

  LossArgs loss_args;
  auto *loss = app.add_subcommand("loss", "Evaluate every distillation loss on two embedding files");
  loss->add_option("teacher", loss_args.teacher, "Teacher embedding file")->required();
  loss->add_option("student", loss_args.student, "Student embedding file")->required();
  loss->add_option("--labels", loss_args.labels, "Place labels of the student rows (enables the triplet task loss)");
  loss->add_option("--margin", loss_args.margin, "Triplet margin")->capture_default_str();
  flags.attach(*loss);

  GradcheckArgs gc_args;
  auto *gradcheck = app.add_subcommand("gradcheck", "Compare analytic gradients with central finite differences");
  gradcheck->add_option("--n", gc_args.n, "Batch size")->capture_default_str();
  gradcheck->add_option("--c", gc_args.c, "Embedding dimension")->capture_default_str();
  gradcheck->add_option("--seed", gc_args.seed, "Random seed")->capture_default_str();
  gradcheck->add_option("--tol,--tolerance", gc_args.tolerance, "Max relative error")->capture_default_str();
  DistillFlags gc_flags;
  gc_flags.attach(*gradcheck);

  EvalArgs eval_args;
  auto *eval = app.add_subcommand("eval", "Recall@K, AR@1 and AR@1% for queries against a database");
  eval->add_option("queries", eval_args.queries, "Query embedding file")->required();
  eval->add_option("database", eval_args.database, "Database embedding file")->required();
  eval->add_option("truth", eval_args.truth, "Truth file, lines 'q: i j k'")->required();
  eval->add_option("--curve", eval_args.curve, "Write the Recall@K curve CSV here");
  eval->add_option("--kmax", eval_args.k_max, "Largest K in the curve (0: min(25, DB))")->capture_default_str();

  ToyArgs toy_args;
  auto *toy = app.add_subcommand("toy", "Run the synthetic cross-modal distillation experiment");
  toy->add_option("--places", toy_args.scene.num_places)->capture_default_str();
  toy->add_option("--samples-per-place", toy_args.scene.samples_per_place)->capture_default_str();
  toy->add_option("--latent-dim", toy_args.scene.latent_dim)->capture_default_str();
  toy->add_option("--dim-a", toy_args.scene.modality_a_dim, "Student modality width")->capture_default_str();
  toy->add_option("--dim-b", toy_args.scene.modality_b_dim, "Second modality width")->capture_default_str();
  toy->add_option("--teacher-dim", toy_args.scene.teacher_dim)->capture_default_str();
  toy->add_option("--noise", toy_args.scene.noise_sigma, "Modality noise sigma")->capture_default_str();
  toy->add_option("--seed", toy_args.scene.seed, "Scene seed")->capture_default_str();
  toy->add_option("--epochs", toy_args.epochs)->capture_default_str();
  toy->add_option("--lr", toy_args.learning_rate)->capture_default_str();
  toy->add_option("--hidden", toy_args.hidden)->capture_default_str();
  toy->add_option("--student-dim", toy_args.student_dim, "Student output width (0: teacher dim)")->capture_default_str();
  toy->add_option("--adaptor", toy_args.adaptor, "Adaptor side for mismatched widths")
      ->check(CLI::IsMember({"none", "teacher", "student"}))
      ->capture_default_str();
  toy->add_option("--margin", toy_args.margin, "Triplet margin")->capture_default_str();
  toy->add_option("--variants", toy_args.variants, "Comma-separated subset of none,s,c,sc")
      ->delimiter(',')
      ->check(CLI::IsMember({"none", "s", "c", "sc"}));
  toy->add_option("--seeds", toy_args.seeds, "Comma-separated training seeds")->delimiter(',');
  toy->add_option("--out", toy_args.out, "CSV output path (default: stdout)");
  DistillFlags toy_flags;
  toy_flags.attach(*toy);

  app.add_subcommand("version", "Print the version");

  std::vector<const char *> argv;
  argv.reserve(args.size());
  for (const auto &a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*loss) return cmd_loss(loss_args, flags, out);
    if (*gradcheck) return cmd_gradcheck(gc_args, gc_flags, out);
    if (*eval) return cmd_eval(eval_args, out);
    if (*toy) return cmd_toy(toy_args, toy_flags, out, err);
    out << "relkd " << version() << '\n';
    return kExitOk;
  } catch (const InputError &e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::invalid_argument &e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::domain_error &e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

}  // namespace relkd::cli
