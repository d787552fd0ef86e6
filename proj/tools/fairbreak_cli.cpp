// fairbreak: command-line front end for the fairness-attack library.
//
//   gen            seeded synthetic train/test data
//   attack         label/group flipping on datasets, or the distribution-level
//                  two-stage attack
//   train          linear and decision-stump learners
//   eval           accuracy and fairness gaps of a saved model on a CSV
//   repro-table1   attack x learner benchmark grid with mean/std per cell
//   verify         randomized property suites; nonzero exit on any failure
//   fair-boundary  balanced linear boundaries through anchor points
//
// All subcommands are deterministic given their flags: rerunning with the same
// seed and inputs reproduces every output byte-for-byte.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairbreak/fairbreak.hpp"

namespace {

using namespace fairbreak;

FairnessCriterion parse_criterion(const std::string& name) {
  if (name == "eo") return FairnessCriterion::EqualOpportunity;
  if (name == "dp") return FairnessCriterion::DemographicParity;
  throw InvalidArgument("unknown criterion '" + name + "' (expected eo or dp)");
}

AttackKind parse_attack_kind(const std::string& name) {
  if (name == "none") return AttackKind::None;
  if (name == "rand-y" || name == "randY") return AttackKind::RandomY;
  if (name == "rand-z" || name == "randZ") return AttackKind::RandomZ;
  if (name == "rand-yz" || name == "randYZ") return AttackKind::RandomYZ;
  if (name == "zflip") return AttackKind::ZFlip;
  throw InvalidArgument("unknown attack '" + name +
                        "' (expected none, rand-y, rand-z, rand-yz, or zflip)");
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InvalidArgument("cannot create directory '" + dir + "': " + ec.message());
}

double gap_or_nan_value(const Classifier& h, const LabeledDataset& d, FairnessCriterion crit) {
  try {
    return fairness_gap(h, d, crit);
  } catch (const UndefinedGap&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string config;
  std::string out_dir = ".";
};

int cmd_gen(const GenArgs& args) {
  SyntheticConfig cfg;
  if (!args.config.empty()) cfg = load_synthetic_config(args.config);
  if (args.seed_given) cfg.seed = args.seed;
  const SyntheticData data = generate_synthetic(cfg);
  ensure_dir(args.out_dir);
  const std::string train_path = join_path(args.out_dir, "train.csv");
  const std::string test_path = join_path(args.out_dir, "test.csv");
  save_dataset_csv(train_path, data.train);
  save_dataset_csv(test_path, data.test);
  std::printf("seed=%llu\n", static_cast<unsigned long long>(cfg.seed));
  std::printf("train=%s\n", train_path.c_str());
  std::printf("train_samples=%zu\n", data.train.size());
  std::printf("test=%s\n", test_path.c_str());
  std::printf("test_samples=%zu\n", data.test.size());
  return 0;
}

// ---------------------------------------------------------------------------
// attack

struct AttackArgs {
  std::string mode = "empirical";
  std::string in;
  std::string out;
  std::string out_stage1;
  std::string model;
  std::string attack = "zflip";
  long long budget = -1;  // <0: zflip's own budget for random attacks
  std::uint64_t seed = 0;
  std::string criterion = "eo";
  double margin = 0.1;
};

Classifier load_or_train_target(const std::string& model_path, const LabeledDataset& data) {
  if (!model_path.empty()) return load_model(model_path).classifier();
  return Classifier(train_erm(data));
}

int cmd_attack_empirical(const AttackArgs& args) {
  const LabeledDataset data = load_dataset_csv(args.in);
  const AttackKind kind = parse_attack_kind(args.attack);
  if (kind == AttackKind::None) {
    write_text(args.out, serialize_dataset_csv(data));
    std::printf("attack=none\nflip_count=0\nout=%s\n", args.out.c_str());
    return 0;
  }
  const Classifier target = load_or_train_target(args.model, data);
  AttackReport report = [&] {
    if (kind == AttackKind::ZFlip) return z_flip_attack(data, target, args.seed);
    std::size_t budget = 0;
    if (args.budget >= 0) {
      budget = static_cast<std::size_t>(args.budget);
    } else {
      // Budget-match the z-flip attack on the same data and target.
      budget = static_cast<std::size_t>(z_flip_attack(data, target, args.seed).alpha);
    }
    const RandomFlipKind rk = kind == AttackKind::RandomY    ? RandomFlipKind::Y
                              : kind == AttackKind::RandomZ  ? RandomFlipKind::Z
                                                             : RandomFlipKind::YZ;
    return random_flip_attack(data, rk, budget, args.seed, target);
  }();
  write_text(args.out, serialize_dataset_csv(report.poisoned));
  std::fputs(attack_report_text(report, to_string(kind)).c_str(), stdout);
  std::printf("out=%s\n", args.out.c_str());
  return 0;
}

int cmd_attack_optimal(const AttackArgs& args) {
  if (args.model.empty()) {
    throw InvalidArgument("--mode optimal needs --model (the target classifier)");
  }
  const DiscreteJointDistribution d = load_distribution_csv(args.in);
  const Classifier target = load_model(args.model).classifier();
  const FairnessCriterion crit = parse_criterion(args.criterion);
  const TwoStageResult result = two_stage_attack(d, target, args.margin, crit);
  save_distribution_csv(args.out, result.stage2);
  if (!args.out_stage1.empty()) save_distribution_csv(args.out_stage1, result.stage1);
  std::printf("attack=two-stage\n");
  std::printf("criterion=%s\n", args.criterion.c_str());
  std::printf("margin=%s\n", format_double(args.margin).c_str());
  std::printf("case=%s\n", to_string(result.stage2_plan.which_case).c_str());
  std::printf("fraction=%s\n", format_double(result.stage2_plan.fraction).c_str());
  std::printf("tv_stage1=%s\n", format_double(result.tv_stage1).c_str());
  std::printf("tv_stage2=%s\n", format_double(result.tv_stage2).c_str());
  std::printf("tv_total=%s\n", format_double(result.tv_total).c_str());
  std::printf("pre_gap=%s\n", format_double(fairness_gap(target, d, crit)).c_str());
  std::printf("post_gap=%s\n", format_double(fairness_gap(target, result.stage2, crit)).c_str());
  std::printf("post_risk=%s\n", format_double(risk(target, result.stage2)).c_str());
  std::printf("out=%s\n", args.out.c_str());
  return 0;
}

int cmd_attack(const AttackArgs& args) {
  if (args.mode == "empirical") return cmd_attack_empirical(args);
  if (args.mode == "optimal") return cmd_attack_optimal(args);
  throw InvalidArgument("unknown mode '" + args.mode + "' (expected empirical or optimal)");
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string in;
  std::string out = "model.txt";
  std::string learner = "erm";
  std::string criterion = "eo";
  double delta = 0.0;
  double penalty = 1.0;
};

int cmd_train(const TrainArgs& args) {
  const LabeledDataset data = load_dataset_csv(args.in);
  FermConfig cfg;
  cfg.criterion = parse_criterion(args.criterion);
  cfg.penalty_weight = args.penalty;
  cfg.delta = args.delta;

  Classifier trained = constant_classifier(0);
  if (args.learner == "erm") {
    const LinearClassifier model = train_erm(data, cfg);
    save_model(args.out, model);
    trained = Classifier(model);
  } else if (args.learner == "fc") {
    const LinearClassifier model = train_ferm_penalized(data, cfg);
    save_model(args.out, model);
    trained = Classifier(model);
  } else if (args.learner == "errtol") {
    const RelaxedTrainingResult result = train_ferm_relaxed(data, cfg);
    save_model(args.out, result.model);
    trained = Classifier(result.model);
    std::printf("penalty_weight=%s\n", format_double(result.penalty_weight).c_str());
    std::printf("delta_satisfied=%s\n", result.delta_satisfied ? "true" : "false");
  } else if (args.learner == "ftrm-threshold") {
    const ThresholdClassifier model = ftrm_threshold_exact(data, args.delta, cfg.criterion);
    save_model(args.out, model);
    trained = Classifier(model);
  } else {
    throw InvalidArgument("unknown learner '" + args.learner +
                          "' (expected erm, fc, errtol, or ftrm-threshold)");
  }
  std::printf("learner=%s\n", args.learner.c_str());
  std::printf("train_risk=%s\n", format_double(risk(trained, data)).c_str());
  std::printf("train_gap=%s\n",
              format_double(gap_or_nan_value(trained, data, cfg.criterion)).c_str());
  std::printf("out=%s\n", args.out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string in;
  std::string model;
};

int cmd_eval(const EvalArgs& args) {
  const LabeledDataset data = load_dataset_csv(args.in);
  const Classifier h = load_model(args.model).classifier();
  std::printf("samples=%zu\n", data.size());
  std::printf("accuracy=%s\n", format_double(1.0 - risk(h, data)).c_str());
  std::printf("eo_gap=%s\n",
              format_double(gap_or_nan_value(h, data, FairnessCriterion::EqualOpportunity)).c_str());
  std::printf("dp_gap=%s\n",
              format_double(gap_or_nan_value(h, data, FairnessCriterion::DemographicParity)).c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// repro-table1

struct ReproArgs {
  std::string out_dir = ".";
  int n_seeds = 5;
  std::uint64_t first_seed = 1;
  double penalty = 1.0;
  std::string criterion = "eo";
  int threads = 0;
  int n_samples = 6000;
};

int cmd_repro_table1(const ReproArgs& args) {
  if (args.n_seeds < 1) throw InvalidArgument("need at least one seed");
  ExperimentConfig cfg;
  cfg.data.n_samples = args.n_samples;
  cfg.seeds.clear();
  for (int i = 0; i < args.n_seeds; ++i) cfg.seeds.push_back(args.first_seed + static_cast<std::uint64_t>(i));
  cfg.penalty_weight = args.penalty;
  cfg.criterion = parse_criterion(args.criterion);
  cfg.threads = args.threads;
  const Table1Result res = run_table1(cfg);
  ensure_dir(args.out_dir);
  const std::string csv_path = join_path(args.out_dir, "table1.csv");
  const std::string txt_path = join_path(args.out_dir, "table1.txt");
  const std::string text = table1_text(cfg, res);
  write_text(csv_path, table1_csv(cfg, res));
  write_text(txt_path, text);
  std::fputs(text.c_str(), stdout);
  std::printf("\ncsv=%s\ntxt=%s\n", csv_path.c_str(), txt_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::uint64_t seed = 42;
  int scale = 1;
  bool benchmark = false;
};

int cmd_verify(const VerifyArgs& args) {
  const std::vector<SuiteResult> results = run_verification(args.seed, args.scale, args.benchmark);
  bool all_passed = true;
  std::printf("%-22s %-6s %8s %12s %12s\n", "suite", "status", "checks", "worst", "tolerance");
  for (const SuiteResult& r : results) {
    all_passed = all_passed && r.passed;
    std::printf("%-22s %-6s %8lld %12.3e %12.3e\n", r.name.c_str(), r.passed ? "pass" : "FAIL",
                r.checks, r.worst, r.tolerance);
    if (!r.passed) std::printf("  first failure: %s\n", r.detail.c_str());
  }
  std::printf("%s\n", all_passed ? "all suites passed" : "FAILURES PRESENT");
  return all_passed ? 0 : 1;
}

// ---------------------------------------------------------------------------
// fair-boundary

struct FairBoundaryArgs {
  std::string config;
  double tol = 1e-10;
};

struct FairBoundaryDemo {
  GaussianMixture g0, g1;
  std::vector<Vec2> anchors;
};

FairBoundaryDemo fair_boundary_demo_config(const std::string& path) {
  FairBoundaryDemo demo;
  // Defaults: the synthetic benchmark's two group-conditional Gaussians and a
  // few anchors in general position.
  const SyntheticConfig synth;
  demo.g0.components.push_back(GaussianComponent{1.0, synth.positive.mean, synth.positive.cov});
  demo.g1.components.push_back(GaussianComponent{1.0, synth.negative.mean, synth.negative.cov});
  demo.anchors = {{0.0, 0.0}, {1.0, 1.0}, {-1.0, 2.0}};
  if (path.empty()) return demo;

  const std::map<std::string, std::string> kv = read_key_value_file(path);
  for (const auto& [key, value] : kv) {
    if (key == "g0_mean") {
      demo.g0.components[0].mean = detail::parse_vec2(value);
    } else if (key == "g0_cov") {
      demo.g0.components[0].cov = detail::parse_mat2(value);
    } else if (key == "g1_mean") {
      demo.g1.components[0].mean = detail::parse_vec2(value);
    } else if (key == "g1_cov") {
      demo.g1.components[0].cov = detail::parse_mat2(value);
    } else if (key == "anchors") {
      demo.anchors.clear();
      for (const std::string& pair : split(value, ';')) {
        demo.anchors.push_back(detail::parse_vec2(pair));
      }
    } else {
      throw FileFormatError("unknown config key '" + key + "'");
    }
  }
  if (demo.anchors.empty()) throw FileFormatError("no anchors configured");
  return demo;
}

int cmd_fair_boundary(const FairBoundaryArgs& args) {
  const FairBoundaryDemo demo = fair_boundary_demo_config(args.config);
  std::printf("%-18s %-22s %14s %6s\n", "anchor", "theta", "residual", "iters");
  for (const Vec2& anchor : demo.anchors) {
    const FairBoundaryResult res = find_fair_direction(demo.g0, demo.g1, anchor, args.tol);
    std::printf("(%s, %s) %s %14.3e %6d\n", format_double(anchor[0]).c_str(),
                format_double(anchor[1]).c_str(), format_double(res.theta).c_str(), res.residual,
                res.iterations);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimal flipping attacks against fairness-constrained classification"};
  app.require_subcommand(1);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "generate synthetic train/test CSVs");
  CLI::Option* gen_seed = gen->add_option("--seed", gen_args.seed, "generator seed");
  gen->add_option("--config", gen_args.config, "synthetic config file (key=value)");
  gen->add_option("--out", gen_args.out_dir, "output directory (train.csv, test.csv)");

  AttackArgs attack_args;
  CLI::App* attack = app.add_subcommand("attack", "poison a dataset or a distribution");
  attack->add_option("--mode", attack_args.mode, "empirical (dataset CSV) or optimal (distribution CSV)");
  attack->add_option("--in", attack_args.in, "input CSV")->required();
  attack->add_option("--out", attack_args.out, "output CSV")->required();
  attack->add_option("--out-stage1", attack_args.out_stage1,
                     "also write the stage-1 distribution (optimal mode)");
  attack->add_option("--model", attack_args.model,
                     "target model file (empirical default: fit a linear risk minimizer)");
  attack->add_option("--attack", attack_args.attack, "none, rand-y, rand-z, rand-yz, zflip");
  attack->add_option("--budget", attack_args.budget,
                     "flip count for random attacks (default: match zflip)");
  attack->add_option("--seed", attack_args.seed, "flip-selection seed");
  attack->add_option("--criterion", attack_args.criterion, "eo or dp (optimal mode)");
  attack->add_option("--margin", attack_args.margin, "stage-1 majority margin (optimal mode)");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "fit a model and save it");
  train->add_option("--in", train_args.in, "training CSV")->required();
  train->add_option("--out", train_args.out, "model output path");
  train->add_option("--learner", train_args.learner, "erm, fc, errtol, ftrm-threshold");
  train->add_option("--criterion", train_args.criterion, "eo or dp");
  train->add_option("--delta", train_args.delta, "gap tolerance (errtol, ftrm-threshold)");
  train->add_option("--penalty", train_args.penalty, "fairness penalty weight (fc)");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "accuracy and gaps of a model on a CSV");
  eval->add_option("--in", eval_args.in, "evaluation CSV")->required();
  eval->add_option("--model", eval_args.model, "model file")->required();

  ReproArgs repro_args;
  CLI::App* repro = app.add_subcommand("repro-table1", "attack x learner benchmark grid");
  repro->add_option("--out", repro_args.out_dir, "output directory (table1.csv, table1.txt)");
  repro->add_option("--seeds", repro_args.n_seeds, "number of seeds");
  repro->add_option("--seed", repro_args.first_seed, "first seed");
  repro->add_option("--penalty", repro_args.penalty, "fairness penalty weight");
  repro->add_option("--criterion", repro_args.criterion, "eo or dp");
  repro->add_option("--threads", repro_args.threads, "worker threads (0: FAIRBREAK_THREADS or all)");
  repro->add_option("--samples", repro_args.n_samples, "synthetic samples per seed");

  VerifyArgs verify_args;
  CLI::App* verify = app.add_subcommand("verify", "run the randomized property suites");
  verify->add_option("--seed", verify_args.seed, "suite seed");
  verify->add_option("--scale", verify_args.scale, "instance-count multiplier");
  verify->add_flag("--benchmark", verify_args.benchmark, "also check the benchmark-grid bands");

  FairBoundaryArgs fb_args;
  CLI::App* fb = app.add_subcommand("fair-boundary", "balanced boundaries through anchors");
  fb->add_option("--config", fb_args.config, "mixture/anchor config file (key=value)");
  fb->add_option("--tol", fb_args.tol, "root-finder tolerance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      gen_args.seed_given = gen_seed->count() > 0;
      return cmd_gen(gen_args);
    }
    if (attack->parsed()) return cmd_attack(attack_args);
    if (train->parsed()) return cmd_train(train_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (repro->parsed()) return cmd_repro_table1(repro_args);
    if (verify->parsed()) return cmd_verify(verify_args);
    if (fb->parsed()) return cmd_fair_boundary(fb_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
