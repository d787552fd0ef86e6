// End-to-end checks of the command-line binary: each subcommand is driven
// through a shell, with outputs read back and compared byte-for-byte where
// determinism promises that.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "fairbreak/classifier.hpp"
#include "fairbreak/dataset.hpp"
#include "fairbreak/distribution.hpp"
#include "fairbreak/io.hpp"
#include "fairbreak/metrics.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "fairbreak_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(FAIRBREAK_CLI_PATH) + " " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int raw = std::system(cmd.c_str());
  CliResult res;
  res.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  res.out = slurp(out);
  res.err = slurp(err);
  return res;
}

// key=value lines of a subcommand's stdout.
std::map<std::string, std::string> kv_of(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

// A small synthetic corpus shared by the subcommand tests.
fs::path make_corpus(const fs::path& dir) {
  const fs::path cfg = dir / "synth.cfg";
  fairbreak::write_text(cfg.string(), "n_samples=200\n");
  const CliResult gen =
      run_cli("gen --seed 3 --config '" + cfg.string() + "' --out '" + (dir / "data").string() + "'",
              dir);
  REQUIRE(gen.exit_code == 0);
  return dir / "data";
}

}  // namespace

TEST_CASE("gen writes deterministic splits", "[cli]") {
  const fs::path dir = scratch_dir();
  const fs::path cfg = dir / "synth.cfg";
  fairbreak::write_text(cfg.string(), "n_samples=200\n");

  const std::string base = "gen --seed 3 --config '" + cfg.string() + "'";
  const CliResult a = run_cli(base + " --out '" + (dir / "d1").string() + "'", dir);
  REQUIRE(a.exit_code == 0);
  REQUIRE(fs::exists(dir / "d1" / "train.csv"));
  REQUIRE(fs::exists(dir / "d1" / "test.csv"));
  const auto kv = kv_of(a.out);
  REQUIRE(kv.at("seed") == "3");
  REQUIRE(kv.at("train_samples") == "140");
  REQUIRE(kv.at("test_samples") == "60");

  const CliResult b = run_cli(base + " --out '" + (dir / "d2").string() + "'", dir);
  REQUIRE(b.exit_code == 0);
  REQUIRE(slurp(dir / "d1" / "train.csv") == slurp(dir / "d2" / "train.csv"));
  REQUIRE(slurp(dir / "d1" / "test.csv") == slurp(dir / "d2" / "test.csv"));

  // A different seed changes the data.
  const CliResult c = run_cli("gen --seed 4 --config '" + cfg.string() + "' --out '" +
                                  (dir / "d3").string() + "'",
                              dir);
  REQUIRE(c.exit_code == 0);
  REQUIRE(slurp(dir / "d1" / "train.csv") != slurp(dir / "d3" / "train.csv"));
}

TEST_CASE("attack none and zero-budget attacks copy the input", "[cli]") {
  const fs::path dir = scratch_dir();
  const fs::path data = make_corpus(dir);
  const std::string train = (data / "train.csv").string();

  const CliResult none = run_cli(
      "attack --in '" + train + "' --attack none --out '" + (dir / "copy.csv").string() + "'", dir);
  REQUIRE(none.exit_code == 0);
  REQUIRE(slurp(dir / "copy.csv") == slurp(data / "train.csv"));
  REQUIRE(kv_of(none.out).at("attack") == "none");

  const CliResult zero = run_cli("attack --in '" + train +
                                     "' --attack rand-y --budget 0 --seed 9 --out '" +
                                     (dir / "zero.csv").string() + "'",
                                 dir);
  REQUIRE(zero.exit_code == 0);
  REQUIRE(slurp(dir / "zero.csv") == slurp(data / "train.csv"));
}

TEST_CASE("z-flip attack runs deterministically", "[cli]") {
  const fs::path dir = scratch_dir();
  const fs::path data = make_corpus(dir);
  const std::string train = (data / "train.csv").string();

  const CliResult a = run_cli("attack --in '" + train + "' --attack zflip --seed 5 --out '" +
                                  (dir / "p1.csv").string() + "'",
                              dir);
  REQUIRE(a.exit_code == 0);
  const auto kv = kv_of(a.out);
  REQUIRE(kv.at("attack") == "z-flip");  // canonical name, as in the benchmark CSV
  REQUIRE(kv.count("alpha") == 1);
  REQUIRE(kv.count("post_gap") == 1);

  const CliResult b = run_cli("attack --in '" + train + "' --attack zflip --seed 5 --out '" +
                                  (dir / "p2.csv").string() + "'",
                              dir);
  REQUIRE(b.exit_code == 0);
  REQUIRE(slurp(dir / "p1.csv") == slurp(dir / "p2.csv"));
  REQUIRE(a.out.substr(0, a.out.rfind("out=")) == b.out.substr(0, b.out.rfind("out=")));
}

TEST_CASE("optimal mode runs the two-stage attack on a distribution", "[cli]") {
  const fs::path dir = scratch_dir();
  const fs::path dist = dir / "dist.csv";
  const fs::path model = dir / "target.txt";
  fairbreak::save_distribution_csv(dist.string(), fairbreak::example1_distribution(3));
  fairbreak::save_model(model.string(),
                        fairbreak::LinearClassifier{{0.5, 1.0}, -0.5});

  const CliResult res = run_cli("attack --mode optimal --in '" + dist.string() +
                                    "' --model '" + model.string() + "' --margin 0.1 --out '" +
                                    (dir / "poisoned.csv").string() + "' --out-stage1 '" +
                                    (dir / "stage1.csv").string() + "'",
                                dir);
  REQUIRE(res.exit_code == 0);
  const auto kv = kv_of(res.out);
  REQUIRE(kv.at("attack") == "two-stage");
  REQUIRE(fairbreak::parse_double(kv.at("post_gap")) <= 1e-10);
  REQUIRE(fairbreak::parse_double(kv.at("tv_total")) > 0.0);
  REQUIRE(fs::exists(dir / "stage1.csv"));

  // The written distribution really is fair for the target model.
  const fairbreak::DiscreteJointDistribution poisoned =
      fairbreak::load_distribution_csv((dir / "poisoned.csv").string());
  const fairbreak::Classifier target(fairbreak::LinearClassifier{{0.5, 1.0}, -0.5});
  REQUIRE(fairbreak::fairness_gap(target, poisoned,
                                  fairbreak::FairnessCriterion::EqualOpportunity) <= 1e-10);

  // Missing --model is a usage error.
  const CliResult bad = run_cli("attack --mode optimal --in '" + dist.string() + "' --out '" +
                                    (dir / "x.csv").string() + "'",
                                dir);
  REQUIRE(bad.exit_code == 1);
  REQUIRE(bad.err.find("error:") != std::string::npos);
}

TEST_CASE("train then eval round trip", "[cli]") {
  const fs::path dir = scratch_dir();
  const fs::path data = make_corpus(dir);
  const std::string model = (dir / "model.txt").string();

  const CliResult train = run_cli(
      "train --in '" + (data / "train.csv").string() + "' --learner erm --out '" + model + "'",
      dir);
  REQUIRE(train.exit_code == 0);
  REQUIRE(fs::exists(model));
  const auto tkv = kv_of(train.out);
  REQUIRE(tkv.at("learner") == "erm");
  const double train_risk = fairbreak::parse_double(tkv.at("train_risk"));
  REQUIRE(train_risk >= 0.0);
  REQUIRE(train_risk <= 1.0);

  const CliResult eval = run_cli(
      "eval --in '" + (data / "test.csv").string() + "' --model '" + model + "'", dir);
  REQUIRE(eval.exit_code == 0);
  const auto ekv = kv_of(eval.out);
  REQUIRE(ekv.at("samples") == "60");
  const double acc = fairbreak::parse_double(ekv.at("accuracy"));
  REQUIRE(acc >= 0.0);
  REQUIRE(acc <= 1.0);
  REQUIRE(ekv.count("eo_gap") == 1);
  REQUIRE(ekv.count("dp_gap") == 1);
}

TEST_CASE("eval agrees with in-process metrics", "[cli]") {
  const fs::path dir = scratch_dir();
  const fs::path data = make_corpus(dir);

  // A constant-positive model: accuracy is the base rate; both gaps vanish.
  const fs::path model = dir / "const1.txt";
  fairbreak::save_model(model.string(),
                        fairbreak::LinearClassifier{{0.0, 0.0}, 1.0});
  const CliResult eval =
      run_cli("eval --in '" + (data / "test.csv").string() + "' --model '" + model.string() + "'",
              dir);
  REQUIRE(eval.exit_code == 0);
  const auto kv = kv_of(eval.out);

  const fairbreak::LabeledDataset test =
      fairbreak::load_dataset_csv((data / "test.csv").string());
  const fairbreak::Classifier h(fairbreak::LinearClassifier{{0.0, 0.0}, 1.0});
  REQUIRE(fairbreak::parse_double(kv.at("accuracy")) == 1.0 - fairbreak::risk(h, test));
  REQUIRE(fairbreak::parse_double(kv.at("eo_gap")) == 0.0);
  REQUIRE(fairbreak::parse_double(kv.at("dp_gap")) == 0.0);
}

TEST_CASE("fairness-aware trainers report their extras", "[cli]") {
  const fs::path dir = scratch_dir();
  const fs::path data = make_corpus(dir);
  const std::string train = (data / "train.csv").string();

  const CliResult errtol = run_cli("train --in '" + train +
                                       "' --learner errtol --delta 0.2 --out '" +
                                       (dir / "errtol.txt").string() + "'",
                                   dir);
  REQUIRE(errtol.exit_code == 0);
  const auto kv = kv_of(errtol.out);
  REQUIRE(kv.count("penalty_weight") == 1);
  REQUIRE((kv.at("delta_satisfied") == "true" || kv.at("delta_satisfied") == "false"));

  const CliResult stump = run_cli("train --in '" + train +
                                      "' --learner ftrm-threshold --delta 1 --out '" +
                                      (dir / "stump.txt").string() + "'",
                                  dir);
  REQUIRE(stump.exit_code == 0);
  const CliResult eval = run_cli("eval --in '" + train + "' --model '" +
                                     (dir / "stump.txt").string() + "'",
                                 dir);
  REQUIRE(eval.exit_code == 0);
}

TEST_CASE("benchmark grid subcommand writes both report files", "[cli]") {
  const fs::path dir = scratch_dir();
  const CliResult res = run_cli("repro-table1 --samples 400 --seeds 2 --threads 2 --out '" +
                                    (dir / "table").string() + "'",
                                dir);
  REQUIRE(res.exit_code == 0);
  const std::string csv = slurp(dir / "table" / "table1.csv");
  REQUIRE(csv.rfind("attack,learner,acc_mean,acc_std,gap_mean,gap_std\n", 0) == 0);
  REQUIRE(csv.find("\nclean,target,") != std::string::npos);
  REQUIRE(csv.find("\nz-flip,err-tolerant,") != std::string::npos);
  const std::string txt = slurp(dir / "table" / "table1.txt");
  REQUIRE(txt.find("z-flip poisoning rate:") != std::string::npos);
  REQUIRE(res.out.find("averaged over 2 seeds") != std::string::npos);
}

TEST_CASE("fair-boundary lists one balanced direction per anchor", "[cli]") {
  const fs::path dir = scratch_dir();
  const CliResult def = run_cli("fair-boundary", dir);
  REQUIRE(def.exit_code == 0);
  REQUIRE(def.out.find("anchor") != std::string::npos);

  const fs::path cfg = dir / "fb.cfg";
  fairbreak::write_text(cfg.string(),
                        "g0_mean=0,0\ng0_cov=1,0,0,1\ng1_mean=2,1\ng1_cov=2,0.3,0.3,1\n"
                        "anchors=0,0;1,1\n");
  const CliResult custom = run_cli("fair-boundary --config '" + cfg.string() + "'", dir);
  REQUIRE(custom.exit_code == 0);
  // Header plus one row per anchor.
  long long lines = 0;
  for (char ch : custom.out) lines += ch == '\n' ? 1 : 0;
  REQUIRE(lines == 3);

  fairbreak::write_text(cfg.string(), "bogus_key=1\n");
  const CliResult bad = run_cli("fair-boundary --config '" + cfg.string() + "'", dir);
  REQUIRE(bad.exit_code == 1);
  REQUIRE(bad.err.find("error:") != std::string::npos);
}

TEST_CASE("malformed inputs fail with a nonzero exit", "[cli]") {
  const fs::path dir = scratch_dir();
  const fs::path garbage = dir / "garbage.csv";
  fairbreak::write_text(garbage.string(), "not,a,valid,header\n1,2\n");

  const CliResult train = run_cli(
      "train --in '" + garbage.string() + "' --out '" + (dir / "m.txt").string() + "'", dir);
  REQUIRE(train.exit_code == 1);
  REQUIRE(train.err.find("error:") != std::string::npos);

  const CliResult missing = run_cli(
      "eval --in '" + (dir / "nope.csv").string() + "' --model '" + (dir / "m.txt").string() + "'",
      dir);
  REQUIRE(missing.exit_code == 1);

  const CliResult no_sub = run_cli("", dir);
  REQUIRE(no_sub.exit_code != 0);

  const CliResult bad_attack = run_cli("attack --in x.csv --out y.csv --attack warp", dir);
  REQUIRE(bad_attack.exit_code == 1);
}
