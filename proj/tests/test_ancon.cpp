#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "helpers.hpp"

#include "anchor/ancon.hpp"
#include "anchor/error.hpp"
#include "anchor/selftrain.hpp"

using namespace anchor;
using doctest::Approx;

TEST_CASE("threshold EMA starts from zero without bias correction") {
  ThresholdState s = ThresholdState::make(0.9);
  s = update_threshold(s, 0.8);
  CHECK(s.delta == Approx(0.08).epsilon(1e-15));
  s = update_threshold(s, 0.9);
  CHECK(s.delta == Approx(0.162).epsilon(1e-15));
  CHECK(s.steps == 2);

  ThresholdState memoryless = ThresholdState::make(0.0);
  for (double c : {0.3, 0.9, 0.5}) {
    memoryless = update_threshold(memoryless, c);
    CHECK(memoryless.delta == c);
  }
  CHECK_THROWS_AS(update_threshold(s, 1.2), InputError);
  CHECK_THROWS_AS(update_threshold(s, -0.1), InputError);
}

TEST_CASE("recursive threshold equals the closed-form sum over 10^4 steps") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double beta : {0.0, 0.1, 0.5, 0.9, 0.99}) {
    ThresholdState s = ThresholdState::make(beta);
    std::vector<double> cs;
    for (int m = 0; m < 10000; ++m) {
      cs.push_back(u(rng));
      s = update_threshold(s, cs.back());
      if (m % 997 == 0 || m == 9999) {
        // Direct evaluation, written here independently of the library.
        double direct = 0.0;
        for (std::size_t i = 0; i < cs.size(); ++i)
          direct += (1.0 - beta) * std::pow(beta, static_cast<double>(cs.size() - 1 - i)) * cs[i];
        CHECK(std::abs(s.delta - direct) <= 1e-12);
        CHECK(std::abs(closed_form_threshold(cs, beta) - direct) <= 1e-12);
      }
    }
  }
}

TEST_CASE("ensemble weights") {
  ThresholdState s = ThresholdState::make(0.9);
  s.delta = 0.162;
  CHECK(compute_weight(ProbVec({0.9, 0.1}), s, WeightScheme::RelativeThreshold) == 1.0);
  s.delta = 0.5;
  CHECK(compute_weight(ProbVec({0.5, 0.25, 0.25}), s, WeightScheme::RelativeThreshold) == 0.0);
  CHECK(compute_weight(ProbVec({0.51, 0.24, 0.25}), s, WeightScheme::RelativeThreshold) == 1.0);
  CHECK(compute_weight(ProbVec::uniform(2), s, WeightScheme::Entropy) == Approx(0.5).epsilon(1e-15));
  CHECK(compute_weight(ProbVec({0.7, 0.3}), s, WeightScheme::MaxProb) == 0.7);
  CHECK(entropy(std::vector<double>{1.0, 0.0}) == 0.0);
}

TEST_CASE("ensemble bank updates") {
  EnsembleBank bank(2, 3);
  ensemble_update(bank, 0, ProbVec({0.1, 0.2, 0.7}), 0.0, PredictionScheme::Hard);
  CHECK(bank == EnsembleBank(2, 3));

  ensemble_update(bank, 0, ProbVec({0.1, 0.2, 0.7}), 1.0, PredictionScheme::Hard);
  CHECK(bank.counts(0)[2] == 1.0);
  CHECK(bank.counts(0)[0] == 0.0);
  CHECK(bank.visits(0) == 1.0);

  ensemble_update(bank, 1, ProbVec({0.8, 0.1, 0.1}), 1.0, PredictionScheme::Hard);
  ensemble_update(bank, 1, ProbVec({0.6, 0.3, 0.1}), 1.0, PredictionScheme::Hard);
  CHECK(std::vector<double>(bank.counts(1).begin(), bank.counts(1).end()) == std::vector<double>{2, 0, 0});
  CHECK(bank.visits(1) == 2.0);

  CHECK_THROWS_AS(bank.add(5, ProbVec::uniform(3), 1.0), InputError);
  CHECK_THROWS_AS(bank.add(0, ProbVec::uniform(2), 1.0), InputError);
  CHECK_THROWS_AS(bank.add(0, ProbVec::uniform(3), -1.0), InputError);
}

TEST_CASE("soft contributions use the temperature") {
  EnsembleBank bank(1, 2);
  ensemble_update(bank, 0, ProbVec({0.8, 0.2}), 1.0, PredictionScheme::Soft, 1.0);
  CHECK(bank.counts(0)[0] == Approx(0.8).epsilon(1e-12));
  EnsembleBank hot(1, 2);
  ensemble_update(hot, 0, ProbVec({0.8, 0.2}), 1.0, PredictionScheme::Soft, 2.0);
  // softmax(log p / 2) = sqrt(p) normalized.
  CHECK(hot.counts(0)[0] == Approx(std::sqrt(0.8) / (std::sqrt(0.8) + std::sqrt(0.2))).epsilon(1e-12));
}

TEST_CASE("bank row sums equal visits after arbitrary interleavings") {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<std::size_t> pick(0, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EnsembleBank hard(6, 4), soft(6, 4);
  for (int step = 0; step < 5000; ++step) {
    const std::size_t i = pick(rng);
    const ProbVec p(testing::random_simplex(4, rng));
    ensemble_update(hard, i, p, u(rng) < 0.5 ? 1.0 : 0.0, PredictionScheme::Hard);
    ensemble_update(soft, i, p, u(rng), PredictionScheme::Soft, 0.5 + u(rng));
  }
  for (std::size_t i = 0; i < 6; ++i) {
    double hs = 0.0, ss = 0.0;
    for (double v : hard.counts(i)) hs += v;
    for (double v : soft.counts(i)) ss += v;
    CHECK(hs == hard.visits(i));
    CHECK(std::abs(ss - soft.visits(i)) <= 1e-9);
  }
}

TEST_CASE("ensemble distribution") {
  const EnsembleBank bank = EnsembleBank::from_tables(Matrix(2, 3), {0.0, 0.0});
  CHECK_FALSE(ensemble_distribution(bank, 0).has_value());

  Matrix counts(1, 3);
  counts(0, 0) = 2;
  counts(0, 1) = 1;
  const EnsembleBank b2 = EnsembleBank::from_tables(counts, {3.0});
  const auto dist = ensemble_distribution(b2, 0);
  REQUIRE(dist.has_value());
  CHECK((*dist)[0] == Approx(2.0 / 3.0));
  CHECK((*dist)[1] == Approx(1.0 / 3.0));
  CHECK((*dist)[2] == 0.0);

  EnsembleBank b3(1, 4);
  ensemble_update(b3, 0, ProbVec::one_hot(4, 3), 1.0, PredictionScheme::Hard);
  CHECK(*ensemble_distribution(b3, 0) == ProbVec::one_hot(4, 3));
  CHECK_THROWS_AS(EnsembleBank::from_tables(Matrix(2, 3), {1.0}), InputError);
}

TEST_CASE("smooth targets") {
  Matrix counts(1, 3);
  counts(0, 0) = 2;
  counts(0, 1) = 1;
  const EnsembleBank bank = EnsembleBank::from_tables(counts, {3.0});

  CHECK(smooth_target(1, bank, 0, 0.0, Normalization::Unnormalized) == SoftTarget::one_hot(3, 1));

  const SoftTarget full = smooth_target(2, bank, 0, 1.0, Normalization::Normalized);
  CHECK(full[0] == Approx(2.0 / 3.0));
  CHECK(full[1] == Approx(1.0 / 3.0));
  CHECK(full[2] == 0.0);

  const SoftTarget raw = smooth_target(0, bank, 0, 0.3, Normalization::Unnormalized);
  CHECK(raw[0] == Approx(1.3));
  CHECK(raw[1] == Approx(0.3));
  CHECK(raw[2] == 0.0);
  CHECK(raw.mass() == 0.7 + 0.3 * 3.0);

  const EnsembleBank empty(1, 3);
  CHECK(smooth_target(2, empty, 0, 0.3, Normalization::Unnormalized) == SoftTarget::one_hot(3, 2));
}

TEST_CASE("unnormalized mass is exact and the pseudo label keeps at least 1 - lambda") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> cls(0, 4);
  for (int trial = 0; trial < 500; ++trial) {
    EnsembleBank bank(1, 5);
    const int updates = trial % 20;
    for (int k = 0; k < updates; ++k)
      ensemble_update(bank, 0, ProbVec(testing::random_simplex(5, rng)), u(rng) < 0.7 ? 1.0 : 0.0,
                      PredictionScheme::Hard);
    const double lambda = u(rng);
    const ClassIndex y = cls(rng);
    const SoftTarget t = smooth_target(y, bank, 0, lambda, Normalization::Unnormalized);
    if (bank.visits(0) > 0) CHECK(t.mass() == (1.0 - lambda) + lambda * bank.visits(0));
    CHECK(t[y] >= 1.0 - lambda);
    const SoftTarget n = smooth_target(y, bank, 0, lambda, Normalization::Normalized);
    CHECK(n[y] >= 1.0 - lambda - 1e-15);
    CHECK(std::abs(n.mass() - 1.0) <= 1e-12);
  }
}

TEST_CASE("hard relative-threshold ensemble equals a brute-force majority vote") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 12, d = 3, K = 3;
    Matrix x = testing::random_matrix(n, d, rng);
    const Dataset data = make_dataset(x, std::nullopt, "test", K);
    AdaptConfig config;
    config.strategy = Strategy::Ancon;
    config.ancon.beta = 0.5;
    AdaptState state = initial_state(data, LinearParams(testing::random_matrix(d, K, rng)), config);

    // Independent bookkeeping of every admitted prediction.
    std::vector<std::vector<ClassIndex>> votes(n);
    double delta = 0.0;
    for (int step = 0; step < 40; ++step) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < n; ++i)
        if ((i + step) % 3 != 0) rows.push_back(i);
      const Minibatch batch = data.batch(rows);
      std::vector<ProbVec> preds;
      double mean_conf = 0.0;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        preds.push_back(softmax_forward(state.params, batch.inputs.row(r)));
        mean_conf += confidence(preds.back());
      }
      mean_conf /= static_cast<double>(rows.size());
      delta = 0.5 * delta + 0.5 * mean_conf;
      for (std::size_t r = 0; r < rows.size(); ++r)
        if (confidence(preds[r]) > delta) votes[rows[r]].push_back(pseudo_label(preds[r]));

      const StepTargets st = build_targets(batch, state, config);
      state.params = sgd_step(state.params, grad_linear_ce(state.params, batch, st.targets), 0.5);
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<int> tally(K, 0);
      for (ClassIndex v : votes[i]) ++tally[v];
      const auto dist = ensemble_distribution(state.bank, i);
      if (votes[i].empty()) {
        CHECK_FALSE(dist.has_value());
        continue;
      }
      REQUIRE(dist.has_value());
      const auto majority = static_cast<ClassIndex>(std::max_element(tally.begin(), tally.end()) - tally.begin());
      CHECK(pseudo_label(*dist) == majority);
      CHECK(state.bank.visits(i) == static_cast<double>(votes[i].size()));
    }
  }
}

TEST_CASE("configuration names and validation") {
  CHECK(parse_weight_scheme("entropy") == WeightScheme::Entropy);
  CHECK(to_string(PredictionScheme::Soft) == "soft");
  CHECK(parse_normalization("normalized") == Normalization::Normalized);
  CHECK_THROWS(parse_weight_scheme("median"));
  AnconConfig c;
  CHECK(c.lambda == 0.3);
  CHECK(c.beta == 0.9);
  c.lambda = 1.5;
  CHECK_THROWS(c.validate());
  c = AnconConfig{};
  c.beta = 1.0;
  CHECK_THROWS(c.validate());
}
