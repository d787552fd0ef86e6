// The synthetic two-Gaussian benchmark generator, its config file round
// trip, the small random-instance factory, the brute-force minimum-TV
// search, and the independent gap recheck.

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "fairbreak/datagen.hpp"
#include "fairbreak/dataset.hpp"
#include "fairbreak/distribution.hpp"
#include "fairbreak/errors.hpp"
#include "fairbreak/metrics.hpp"
#include "fairbreak/oracle.hpp"
#include "fairbreak/rng.hpp"

using namespace fairbreak;

namespace {

// Two support points classified apart by the stump x >= 0, with the given
// (z0, z1) label-1 masses; no label-0 mass.
DiscreteJointDistribution two_point(const std::array<double, 2>& left,
                                    const std::array<double, 2>& right) {
  std::vector<SupportPoint> points(2);
  points[0].id = 0;
  points[0].coords = {-1.0};
  points[1].id = 1;
  points[1].coords = {1.0};
  const std::vector<std::array<double, 4>> cells{
      {0.0, 0.0, left[0], left[1]},
      {0.0, 0.0, right[0], right[1]},
  };
  return DiscreteJointDistribution(1, std::move(points), cells);
}

const Classifier kStump{ThresholdClassifier{0.0, Direction::GreaterEqual}};

}  // namespace

TEST_CASE("synthetic generation is deterministic and balanced", "[datagen]") {
  SyntheticConfig cfg;
  cfg.n_samples = 2000;
  cfg.seed = 5;
  const SyntheticData a = generate_synthetic(cfg);
  const SyntheticData b = generate_synthetic(cfg);
  REQUIRE(serialize_dataset_csv(a.train) == serialize_dataset_csv(b.train));
  REQUIRE(serialize_dataset_csv(a.test) == serialize_dataset_csv(b.test));

  REQUIRE(a.train.size() + a.test.size() == 2000);
  REQUIRE(a.train.size() == 1400);  // fraction 0.7 by deterministic interleave
  long long y1 = 0;
  for (const Sample& s : a.train.samples()) y1 += s.y;
  for (const Sample& s : a.test.samples()) y1 += s.y;
  REQUIRE(y1 == 1000);

  // Different seeds give different draws.
  cfg.seed = 6;
  const SyntheticData c = generate_synthetic(cfg);
  REQUIRE(serialize_dataset_csv(a.train) != serialize_dataset_csv(c.train));
}

TEST_CASE("sensitive attribute tracks the label through the posterior", "[datagen]") {
  SyntheticConfig cfg;
  cfg.n_samples = 4000;
  cfg.seed = 9;
  const SyntheticData data = generate_synthetic(cfg);
  long long z1 = 0, agree = 0, total = 0;
  const auto tally = [&](const LabeledDataset& d) {
    for (const Sample& s : d.samples()) {
      z1 += s.z;
      agree += s.y == s.z ? 1 : 0;
      ++total;
    }
  };
  tally(data.train);
  tally(data.test);
  REQUIRE(total == 4000);
  const double z_rate = static_cast<double>(z1) / static_cast<double>(total);
  const double agree_rate = static_cast<double>(agree) / static_cast<double>(total);
  REQUIRE(z_rate == Catch::Approx(0.5).margin(0.04));
  REQUIRE(agree_rate > 0.65);  // group membership leaks the label
  REQUIRE(agree_rate < 0.98);  // but not deterministically

  // Class-conditional feature means sit near the configured centers.
  double mx = 0, my = 0;
  long long n_pos = 0;
  for (const Sample& s : data.train.samples()) {
    if (s.y != 1) continue;
    mx += s.x[0];
    my += s.x[1];
    ++n_pos;
  }
  REQUIRE(mx / static_cast<double>(n_pos) == Catch::Approx(2.0).margin(0.35));
  REQUIRE(my / static_cast<double>(n_pos) == Catch::Approx(2.0).margin(0.35));
}

TEST_CASE("identical classes make the attribute an unbiased coin", "[datagen]") {
  SyntheticConfig cfg;
  cfg.n_samples = 4000;
  cfg.seed = 3;
  cfg.rotation = 0.0;
  cfg.negative = cfg.positive;  // posterior is exactly 1/2 everywhere
  const SyntheticData data = generate_synthetic(cfg);
  long long z1 = 0, agree = 0, total = 0;
  const auto tally = [&](const LabeledDataset& d) {
    for (const Sample& s : d.samples()) {
      z1 += s.z;
      agree += s.y == s.z ? 1 : 0;
      ++total;
    }
  };
  tally(data.train);
  tally(data.test);
  const double z_rate = static_cast<double>(z1) / static_cast<double>(total);
  const double agree_rate = static_cast<double>(agree) / static_cast<double>(total);
  REQUIRE(z_rate == Catch::Approx(0.5).margin(0.03));
  REQUIRE(agree_rate == Catch::Approx(0.5).margin(0.03));
}

TEST_CASE("synthetic config round trip and validation", "[datagen]") {
  SyntheticConfig cfg;
  cfg.n_samples = 1234;
  cfg.seed = 99;
  cfg.rotation = -0.25;
  cfg.train_fraction = 0.625;
  cfg.positive.mean = {1.5, -0.5};
  cfg.positive.cov = {{{4.0, 0.5}, {0.5, 2.0}}};
  cfg.negative.mean = {-3.0, 0.25};
  cfg.negative.cov = {{{9.0, -1.0}, {-1.0, 2.5}}};

  const std::string text = serialize_synthetic_config(cfg);
  const SyntheticConfig back = parse_synthetic_config(parse_key_values(split(text, '\n')));
  REQUIRE(back.n_samples == cfg.n_samples);
  REQUIRE(back.seed == cfg.seed);
  REQUIRE(back.rotation == cfg.rotation);
  REQUIRE(back.train_fraction == cfg.train_fraction);
  REQUIRE(back.positive.mean == cfg.positive.mean);
  REQUIRE(back.positive.cov == cfg.positive.cov);
  REQUIRE(back.negative.mean == cfg.negative.mean);
  REQUIRE(back.negative.cov == cfg.negative.cov);

  REQUIRE_THROWS_AS(parse_synthetic_config({{"banana", "1"}}), FileFormatError);
  REQUIRE_THROWS_AS(parse_synthetic_config({{"positive_mean", "1,2,3"}}), FileFormatError);
  REQUIRE_THROWS_AS(parse_synthetic_config({{"positive_cov", "1,2,3"}}), FileFormatError);
  REQUIRE_THROWS_AS(parse_synthetic_config({{"n_samples", "ten"}}), FileFormatError);
}

TEST_CASE("synthetic generation input validation", "[datagen]") {
  SyntheticConfig cfg;
  cfg.n_samples = 101;
  REQUIRE_THROWS_AS(generate_synthetic(cfg), InvalidArgument);
  cfg.n_samples = 0;
  REQUIRE_THROWS_AS(generate_synthetic(cfg), InvalidArgument);
  cfg.n_samples = 100;
  cfg.train_fraction = 0.0;
  REQUIRE_THROWS_AS(generate_synthetic(cfg), InvalidArgument);
  cfg.train_fraction = 1.0;
  REQUIRE_THROWS_AS(generate_synthetic(cfg), InvalidArgument);
  cfg.train_fraction = 0.5;
  cfg.positive.cov = {{{1.0, 0.0}, {0.0, 0.0}}};
  REQUIRE_THROWS_AS(generate_synthetic(cfg), SingularCovariance);
}

TEST_CASE("random instance factory", "[datagen]") {
  const RandomInstance a = random_discrete_instance(5, 17);
  const RandomInstance b = random_discrete_instance(5, 17);
  REQUIRE(a.distribution.size() == 5);
  double total = 0.0;
  for (std::size_t i = 0; i < a.distribution.size(); ++i) {
    REQUIRE(a.distribution.point(i).id == static_cast<int>(i));
    for (int y = 0; y < 2; ++y) {
      for (int z = 0; z < 2; ++z) {
        const double m = a.distribution.mass(i, y, z);
        REQUIRE(m > 0.0);
        REQUIRE(m == b.distribution.mass(i, y, z));  // same seed, same draw
        total += m;
      }
    }
  }
  REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
  // The bundled classifier accepts the instance's own points.
  for (std::size_t i = 0; i < a.distribution.size(); ++i) {
    const int pred = a.classifier(a.distribution.point(i).coords);
    REQUIRE((pred == 0 || pred == 1));
  }
  REQUIRE_NOTHROW(random_discrete_instance(1, 0));
  REQUIRE_THROWS_AS(random_discrete_instance(0, 1), InvalidArgument);
  REQUIRE_THROWS_AS(random_discrete_instance(65, 1), InvalidArgument);
}

TEST_CASE("brute force search validates its inputs", "[oracle]") {
  const RandomInstance inst = random_discrete_instance(5, 21);
  REQUIRE_THROWS_AS(brute_force_min_tv(inst.distribution, inst.classifier, 0.05),
                    InstanceTooLarge);
  const DiscreteJointDistribution d = two_point({0.2, 0.2}, {0.3, 0.3});
  REQUIRE_THROWS_AS(brute_force_min_tv(d, kStump, 0.0), InvalidArgument);
  REQUIRE_THROWS_AS(brute_force_min_tv(d, kStump, -0.1), InvalidArgument);
  REQUIRE_THROWS_AS(brute_force_min_tv(d, kStump, 0.3), InvalidArgument);
}

TEST_CASE("already fair instances cost nothing", "[oracle]") {
  const DiscreteJointDistribution d = two_point({0.2, 0.2}, {0.3, 0.3});
  const OracleResult res = brute_force_min_tv(d, kStump, 0.05, 1e-12);
  REQUIRE(res.feasible);
  REQUIRE(res.best_tv == 0.0);
  REQUIRE(res.achieved_gap <= 1e-12);
  REQUIRE(res.candidates_checked >= 1);
}

TEST_CASE("search brackets the closed-form optimum", "[oracle]") {
  // Unfair two-point instances: the exact minimum TV equals the closed-form
  // attack bound, and the lattice search must land in a grid-sized band of it.
  Rng rng(55);
  for (int t = 0; t < 6; ++t) {
    const double grid = 0.02;
    std::array<double, 2> left{rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3)};
    std::array<double, 2> right{rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3)};
    const double mass = left[0] + left[1] + right[0] + right[1];
    for (double& v : left) v /= mass;
    for (double& v : right) v /= mass;
    const DiscreteJointDistribution d = two_point(left, right);
    const double bound =
        c_bound(cell_stats(kStump, d, FairnessCriterion::EqualOpportunity));
    const OracleResult res =
        brute_force_min_tv(d, kStump, grid, -1.0, FairnessCriterion::EqualOpportunity);
    REQUIRE(res.feasible);
    REQUIRE(res.best_tv <= bound + 1e-9);  // the fair curve contains the optimum
    REQUIRE(res.best_tv >= bound - 5.0 * grid);
    REQUIRE(res.achieved_gap <= 0.5 * grid + 1e-9);
    REQUIRE(tv_distance(d, res.best) == res.best_tv);
    // The feature marginal never moves.
    for (std::size_t i = 0; i < d.size(); ++i) {
      REQUIRE(res.best.point_total(i) == d.point_total(i));
    }
  }
}

TEST_CASE("search handles demographic parity", "[oracle]") {
  const DiscreteJointDistribution d = two_point({0.35, 0.25}, {0.3, 0.1});
  const double bound = c_bound(cell_stats(kStump, d, FairnessCriterion::DemographicParity));
  const OracleResult res =
      brute_force_min_tv(d, kStump, 0.02, -1.0, FairnessCriterion::DemographicParity);
  REQUIRE(res.feasible);
  REQUIRE(res.best_tv <= bound + 1e-9);
  REQUIRE(res.achieved_gap <= 0.01 + 1e-9);
}

TEST_CASE("independent gap recheck matches the metrics", "[oracle]") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const RandomInstance inst = random_discrete_instance(4, seed);
    const GapRecheck rec = exhaustive_gap_recheck(inst.classifier, inst.distribution);
    REQUIRE(rec.eo.defined);
    REQUIRE(rec.dp.defined);
    const double eo = fairness_gap(inst.classifier, inst.distribution,
                                   FairnessCriterion::EqualOpportunity);
    const double dp = fairness_gap(inst.classifier, inst.distribution,
                                   FairnessCriterion::DemographicParity);
    REQUIRE(rec.eo.gap == Catch::Approx(eo).margin(1e-12));
    REQUIRE(rec.dp.gap == Catch::Approx(dp).margin(1e-12));
  }
}

TEST_CASE("gap recheck on datasets and undefined groups", "[oracle]") {
  std::vector<Sample> samples;
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    samples.push_back(Sample{{rng.uniform(-1.0, 1.0)}, rng.bernoulli(0.5) ? 1 : 0,
                             rng.bernoulli(0.4) ? 1 : 0});
  }
  const LabeledDataset data(1, std::move(samples));
  const GapRecheck rec = exhaustive_gap_recheck(kStump, data);
  REQUIRE(rec.eo.defined);
  REQUIRE(rec.dp.defined);
  REQUIRE(rec.eo.gap ==
          Catch::Approx(fairness_gap(kStump, data, FairnessCriterion::EqualOpportunity))
              .margin(1e-12));
  REQUIRE(rec.dp.gap ==
          Catch::Approx(fairness_gap(kStump, data, FairnessCriterion::DemographicParity))
              .margin(1e-12));

  // All label-1 samples in one group: the equal-opportunity record is
  // undefined while demographic parity still works.
  std::vector<Sample> lop;
  lop.push_back(Sample{{-1.0}, 1, 0});
  lop.push_back(Sample{{1.0}, 1, 0});
  lop.push_back(Sample{{-1.0}, 0, 1});
  lop.push_back(Sample{{1.0}, 0, 1});
  const LabeledDataset lopsided(1, std::move(lop));
  const GapRecheck rec2 = exhaustive_gap_recheck(kStump, lopsided);
  REQUIRE_FALSE(rec2.eo.defined);
  REQUIRE(rec2.dp.defined);
  REQUIRE_THROWS_AS(fairness_gap(kStump, lopsided, FairnessCriterion::EqualOpportunity),
                    UndefinedGap);
}
