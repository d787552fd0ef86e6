#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "fairbreak/datagen.hpp"
#include "fairbreak/empirical_attack.hpp"
#include "fairbreak/errors.hpp"
#include "fairbreak/io.hpp"
#include "fairbreak/learners.hpp"
#include "fairbreak/metrics.hpp"

namespace fairbreak {

enum class AttackKind { None, RandomY, RandomZ, RandomYZ, ZFlip };
enum class LearnerKind { Erm, Penalized, Relaxed };

inline std::string to_string(AttackKind a) {
  switch (a) {
    case AttackKind::None: return "none";
    case AttackKind::RandomY: return "rand-y";
    case AttackKind::RandomZ: return "rand-z";
    case AttackKind::RandomYZ: return "rand-yz";
    case AttackKind::ZFlip: return "z-flip";
  }
  return "?";
}

inline std::string to_string(LearnerKind l) {
  switch (l) {
    case LearnerKind::Erm: return "erm";
    case LearnerKind::Penalized: return "fair-constrained";
    case LearnerKind::Relaxed: return "err-tolerant";
  }
  return "?";
}

// Benchmark grid: every attack is budget-matched to the z-flip attack's flip
// count on the same seed, and every learner trains on each poisoned set.
struct ExperimentConfig {
  SyntheticConfig data;  // template; the per-run seed overrides data.seed
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<AttackKind> attacks{AttackKind::None, AttackKind::RandomY, AttackKind::RandomZ,
                                  AttackKind::RandomYZ, AttackKind::ZFlip};
  std::vector<LearnerKind> learners{LearnerKind::Erm, LearnerKind::Penalized,
                                    LearnerKind::Relaxed};
  FairnessCriterion criterion = FairnessCriterion::EqualOpportunity;
  FermConfig trainer;            // learning rate, iterations, relaxed sweep
  double penalty_weight = 1.0;   // fairness weight of the penalized learner
  int threads = 0;               // 0: FAIRBREAK_THREADS env var, else hardware
};

struct CellSummary {
  double acc_mean = 0.0, acc_std = 0.0;
  double gap_mean = 0.0, gap_std = 0.0;
};

struct Table1Result {
  // Indexed [attack][learner] following the config's lists.
  std::vector<std::vector<CellSummary>> cells;
  // Raw per-seed values, same indexing plus [seed], for tests and bands.
  std::vector<std::vector<std::vector<double>>> acc_values;
  std::vector<std::vector<std::vector<double>>> gap_values;
  // The attacked (clean-data risk-minimizing) model's test behavior.
  CellSummary target;
  std::vector<double> target_acc, target_gap;
  // Z-flip attack budget, as a fraction of the training set.
  double rate_mean = 0.0, rate_std = 0.0;
  std::vector<double> rates;
};

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FAIRBREAK_THREADS")) {
    try {
      const long long n = parse_int(env);
      if (n > 0) return static_cast<int>(n);
    } catch (const FileFormatError&) {
      throw InvalidArgument("FAIRBREAK_THREADS must be a positive integer");
    }
    throw InvalidArgument("FAIRBREAK_THREADS must be a positive integer");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Gap tolerance handed to the error-tolerant learner: the attack's poisoning
// rate divided by the smaller group's share of the (poisoned) training set,
// capped at 1. With no poisoning the tolerance is zero.
inline double error_tolerant_delta(double poisoning_rate, const LabeledDataset& train,
                                   FairnessCriterion criterion) {
  if (poisoning_rate <= 0.0) return 0.0;
  long long group[2] = {0, 0};
  for (const Sample& smp : train.samples()) {
    if (criterion == FairnessCriterion::DemographicParity || smp.y == 1) ++group[smp.z];
  }
  const long long smaller = std::min(group[0], group[1]);
  if (smaller <= 0) return 1.0;
  const double share = static_cast<double>(smaller) / static_cast<double>(train.size());
  return std::min(1.0, poisoning_rate / share);
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed ^ (salt * 0x9E3779B97F4A7C15ULL);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

inline double mean_ignoring_nan(const std::vector<double>& v) {
  double sum = 0.0;
  int n = 0;
  for (double x : v) {
    if (!std::isnan(x)) {
      sum += x;
      ++n;
    }
  }
  return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

inline double sample_std_ignoring_nan(const std::vector<double>& v) {
  const double m = mean_ignoring_nan(v);
  if (std::isnan(m)) return m;
  double sum = 0.0;
  int n = 0;
  for (double x : v) {
    if (!std::isnan(x)) {
      sum += (x - m) * (x - m);
      ++n;
    }
  }
  return n > 1 ? std::sqrt(sum / (n - 1)) : 0.0;
}

inline CellSummary summarize(const std::vector<double>& acc, const std::vector<double>& gap) {
  return CellSummary{mean_ignoring_nan(acc), sample_std_ignoring_nan(acc),
                     mean_ignoring_nan(gap), sample_std_ignoring_nan(gap)};
}

struct SeedOutcome {
  double target_acc = 0.0, target_gap = 0.0, rate = 0.0;
  // [attack][learner]
  std::vector<std::vector<double>> acc, gap;
};

}  // namespace detail

inline Table1Result run_table1(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw InvalidArgument("no seeds configured");
  if (cfg.attacks.empty() || cfg.learners.empty()) {
    throw InvalidArgument("attack and learner lists must be nonempty");
  }
  const std::size_t n_seeds = cfg.seeds.size();
  const std::size_t n_attacks = cfg.attacks.size();
  const std::size_t n_learners = cfg.learners.size();

  std::vector<detail::SeedOutcome> outcomes(n_seeds);
  std::vector<std::exception_ptr> failures(n_seeds);

  const auto run_seed = [&](std::size_t seed_idx) {
    const std::uint64_t seed = cfg.seeds[seed_idx];
    SyntheticConfig data_cfg = cfg.data;
    data_cfg.seed = seed;
    const SyntheticData data = generate_synthetic(data_cfg);

    const LinearClassifier target = train_erm(data.train, cfg.trainer);
    const Classifier target_h(target);

    detail::SeedOutcome outcome;
    outcome.target_acc = 1.0 - risk(target_h, data.test);
    outcome.target_gap = fairness_gap(target_h, data.test, cfg.criterion);

    const AttackReport zflip = z_flip_attack(data.train, target_h, seed);
    outcome.rate = zflip.poisoning_rate;
    const std::size_t budget = static_cast<std::size_t>(zflip.alpha);

    outcome.acc.assign(n_attacks, std::vector<double>(n_learners, 0.0));
    outcome.gap.assign(n_attacks, std::vector<double>(n_learners, 0.0));
    for (std::size_t ai = 0; ai < n_attacks; ++ai) {
      const AttackKind attack = cfg.attacks[ai];
      const LabeledDataset* train = &data.train;
      LabeledDataset poisoned = data.train;
      double rate = 0.0;
      if (attack == AttackKind::ZFlip) {
        poisoned = zflip.poisoned;
        rate = zflip.poisoning_rate;
        train = &poisoned;
      } else if (attack != AttackKind::None) {
        const RandomFlipKind kind = attack == AttackKind::RandomY ? RandomFlipKind::Y
                                    : attack == AttackKind::RandomZ ? RandomFlipKind::Z
                                                                    : RandomFlipKind::YZ;
        poisoned = random_flip_attack(data.train, kind, budget,
                                      detail::mix_seed(seed, ai + 1), target_h)
                       .poisoned;
        rate = static_cast<double>(budget) / static_cast<double>(data.train.size());
        train = &poisoned;
      }
      for (std::size_t li = 0; li < n_learners; ++li) {
        FermConfig trainer = cfg.trainer;
        trainer.criterion = cfg.criterion;
        LinearClassifier model{std::vector<double>(2, 0.0), 0.0};
        switch (cfg.learners[li]) {
          case LearnerKind::Erm:
            model = train_erm(*train, trainer);
            break;
          case LearnerKind::Penalized:
            trainer.penalty_weight = cfg.penalty_weight;
            model = train_ferm_penalized(*train, trainer);
            break;
          case LearnerKind::Relaxed:
            trainer.delta = error_tolerant_delta(rate, *train, cfg.criterion);
            model = train_ferm_relaxed(*train, trainer).model;
            break;
        }
        const Classifier h(model);
        outcome.acc[ai][li] = 1.0 - risk(h, data.test);
        try {
          outcome.gap[ai][li] = fairness_gap(h, data.test, cfg.criterion);
        } catch (const UndefinedGap&) {
          outcome.gap[ai][li] = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
    outcomes[seed_idx] = std::move(outcome);
  };

  const int n_threads =
      std::min<int>(resolve_threads(cfg.threads), static_cast<int>(n_seeds));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n_seeds; ++i) run_seed(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
      workers.emplace_back([&]() {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n_seeds) break;
          try {
            run_seed(i);
          } catch (...) {
            failures[i] = std::current_exception();
          }
        }
      });
    }
    for (std::thread& w : workers) w.join();
    for (const std::exception_ptr& failure : failures) {
      if (failure) std::rethrow_exception(failure);
    }
  }

  // Deterministic merge in seed order; thread scheduling cannot affect it.
  Table1Result result;
  result.acc_values.assign(n_attacks, std::vector<std::vector<double>>(
                                          n_learners, std::vector<double>(n_seeds, 0.0)));
  result.gap_values = result.acc_values;
  result.target_acc.resize(n_seeds);
  result.target_gap.resize(n_seeds);
  result.rates.resize(n_seeds);
  for (std::size_t si = 0; si < n_seeds; ++si) {
    result.target_acc[si] = outcomes[si].target_acc;
    result.target_gap[si] = outcomes[si].target_gap;
    result.rates[si] = outcomes[si].rate;
    for (std::size_t ai = 0; ai < n_attacks; ++ai) {
      for (std::size_t li = 0; li < n_learners; ++li) {
        result.acc_values[ai][li][si] = outcomes[si].acc[ai][li];
        result.gap_values[ai][li][si] = outcomes[si].gap[ai][li];
      }
    }
  }
  result.cells.assign(n_attacks, std::vector<CellSummary>(n_learners));
  for (std::size_t ai = 0; ai < n_attacks; ++ai) {
    for (std::size_t li = 0; li < n_learners; ++li) {
      result.cells[ai][li] = detail::summarize(result.acc_values[ai][li], result.gap_values[ai][li]);
    }
  }
  result.target = detail::summarize(result.target_acc, result.target_gap);
  result.rate_mean = detail::mean_ignoring_nan(result.rates);
  result.rate_std = detail::sample_std_ignoring_nan(result.rates);
  return result;
}

inline std::string table1_csv(const ExperimentConfig& cfg, const Table1Result& res) {
  std::string text = "attack,learner,acc_mean,acc_std,gap_mean,gap_std\n";
  const auto row = [&](const std::string& attack, const std::string& learner,
                       const CellSummary& c) {
    text += attack + "," + learner + "," + format_double(c.acc_mean) + "," +
            format_double(c.acc_std) + "," + format_double(c.gap_mean) + "," +
            format_double(c.gap_std) + "\n";
  };
  row("clean", "target", res.target);
  for (std::size_t ai = 0; ai < cfg.attacks.size(); ++ai) {
    for (std::size_t li = 0; li < cfg.learners.size(); ++li) {
      row(to_string(cfg.attacks[ai]), to_string(cfg.learners[li]), res.cells[ai][li]);
    }
  }
  return text;
}

namespace detail {

inline std::string fixed3(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline std::string pad(std::string s, std::size_t width) {
  while (s.size() < width) s += ' ';
  return s;
}

}  // namespace detail

inline std::string table1_text(const ExperimentConfig& cfg, const Table1Result& res) {
  std::string text;
  text += "target model (clean train): acc " + detail::fixed3(res.target.acc_mean) + " +/- " +
          detail::fixed3(res.target.acc_std) + ", gap " + detail::fixed3(res.target.gap_mean) +
          " +/- " + detail::fixed3(res.target.gap_std) + "\n";
  text += "z-flip poisoning rate: " + detail::fixed3(res.rate_mean) + " +/- " +
          detail::fixed3(res.rate_std) + "\n\n";
  std::size_t name_width = 8;
  for (AttackKind a : cfg.attacks) name_width = std::max(name_width, to_string(a).size());
  text += detail::pad("attack", name_width + 2);
  for (LearnerKind l : cfg.learners) text += detail::pad(to_string(l), 22);
  text += "\n";
  for (std::size_t ai = 0; ai < cfg.attacks.size(); ++ai) {
    text += detail::pad(to_string(cfg.attacks[ai]), name_width + 2);
    for (std::size_t li = 0; li < cfg.learners.size(); ++li) {
      const CellSummary& c = res.cells[ai][li];
      text += detail::pad(detail::fixed3(c.acc_mean) + "/" + detail::fixed3(c.gap_mean), 22);
    }
    text += "\n";
  }
  text += "\n(cells: test accuracy / test fairness gap, averaged over " +
          std::to_string(cfg.seeds.size()) + " seeds)\n";
  return text;
}

}  // namespace fairbreak
