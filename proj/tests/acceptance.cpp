// Release acceptance: one line per criterion, nonzero exit on any failure.
//
// Each criterion wraps one of the library's verification suites with the
// instance counts, tolerances, and runtime budgets pinned below. The suites
// themselves carry the per-check tolerances; this binary only enforces the
// counts and the wall-clock caps.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "fairbreak/fairbreak.hpp"

namespace {

constexpr std::uint64_t kSeed = 42;

struct Criterion {
  std::string description;
  double time_cap_seconds;  // 0: no cap
  std::function<fairbreak::SuiteResult()> run;
};

}  // namespace

int main() {
  using fairbreak::ExperimentConfig;
  using fairbreak::SuiteResult;

  const std::vector<Criterion> criteria{
      {"closed-form attack bound equals its alternative form on 1000 random instances "
       "(|difference| <= 1e-10)",
       5.0, [] { return fairbreak::suite_formula_equivalence(1000, kSeed); }},
      {"fair construction on 500 random instances across all four cases: feature marginal "
       "exact, residual gap <= 1e-10, cost = bound +/- 1e-10",
       10.0, [] { return fairbreak::suite_fair_construct(500, kSeed); }},
      {"brute-force minimum cost brackets the closed-form bound within 0.02 on 50 tiny "
       "instances (grid 0.01), including the Bayes-classifier subcase",
       120.0, [] { return fairbreak::suite_oracle_sandwich(50, kSeed, 0.01); }},
      {"two-stage worked example reproduces stage-2 cells "
       "(0.075, 0.0625, 0.025, 0.1875) +/- 1e-9 and flip fraction 2/3 +/- 1e-9",
       0.0, [] { return fairbreak::suite_worked_example(); }},
      {"integer flip attack on 500 datasets (min cell >= 5): residual gap <= 1/min cell, "
       "closed-form bound equals the measured gap exactly, risk unchanged exactly",
       10.0, [] { return fairbreak::suite_zflip_rate(500, kSeed); }},
      {"balanced boundaries for 100 mixture pairs: residual <= 1e-8, closed form within "
       "3 standard errors of 1e6 Monte Carlo samples, antipodal identity within 1e-12",
       60.0, [] { return fairbreak::suite_fair_boundary(100, kSeed, 1000000); }},
      {"conditional transport identities on 200 single-case instances: z=0 equality "
       "within 1e-10, z=1 inequality with slack >= -1e-10",
       0.0, [] { return fairbreak::suite_conditional_tv(200, kSeed); }},
      {"benchmark grid (5 seeds, 6000 samples) lands in the expected bands: plain-learner "
       "accuracy 0.88 +/- 0.04 and gap 0.19 +/- 0.06, constrained-on-clean gap <= 0.08, "
       "constrained-on-attacked gap >= 0.10, tolerant-on-attacked gap >= 0.15, "
       "flip rate 0.032 +/- 0.01",
       300.0, [] { return fairbreak::suite_table1_bands(ExperimentConfig{}); }},
      {"penalized objective gradient matches central differences at 20 points "
       "(relative error <= 1e-5)",
       0.0, [] { return fairbreak::suite_gradient_check(20, kSeed); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Criterion& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    const SuiteResult result = c.run();
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const bool over_time = c.time_cap_seconds > 0.0 && seconds > c.time_cap_seconds;
    const bool ok = result.passed && !over_time;
    failures += ok ? 0 : 1;

    std::string timing;
    char buf[64];
    if (c.time_cap_seconds > 0.0) {
      std::snprintf(buf, sizeof(buf), "%.2fs, cap %.0fs", seconds, c.time_cap_seconds);
    } else {
      std::snprintf(buf, sizeof(buf), "%.2fs", seconds);
    }
    timing = buf;

    std::printf("[%s] %zu. %s (%lld checks, %s)\n", ok ? "PASS" : "FAIL", i + 1,
                c.description.c_str(), result.checks, timing.c_str());
    if (!result.passed) std::printf("       first failure: %s\n", result.detail.c_str());
    if (over_time) std::printf("       over the time budget\n");
    std::fflush(stdout);
  }

  if (failures == 0) {
    std::printf("all %zu criteria passed\n", criteria.size());
  } else {
    std::printf("%d of %zu criteria FAILED\n", failures, criteria.size());
  }
  return failures == 0 ? 0 : 1;
}
