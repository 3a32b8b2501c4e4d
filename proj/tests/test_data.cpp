#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "anchor/data.hpp"
#include "anchor/error.hpp"
#include "anchor/metrics.hpp"
#include "anchor/selftrain.hpp"

using namespace anchor;

TEST_CASE("cluster generator") {
  CHECK_THROWS_AS(gen_clusters(3, 4, 0, 1.0, 0), InputError);

  const Dataset a = gen_clusters(3, 4, 10, 1.0, 7);
  const Dataset b = gen_clusters(3, 4, 10, 1.0, 7);
  CHECK(a == b);
  CHECK(to_csv(a) == to_csv(b));
  CHECK(a.size() == 30);
  CHECK(a.classes == 3);
  CHECK(a.support_bound == max_row_norm(a.features));
  CHECK(a.support_bound > 0.0);
  CHECK_FALSE(a == gen_clusters(3, 4, 10, 1.0, 8));

  ClusterSpec spec;
  spec.classes = 3;
  spec.dim = 4;
  spec.n_per_class = 50;
  spec.spread = 0.0;
  spec.seed = 7;
  const Dataset points = gen_clusters(spec);
  // Zero spread: every row equals its class mean, of norm `radius`.
  for (std::size_t i = 0; i < points.size(); ++i)
    CHECK(std::sqrt(squared_norm(points.features.row(i))) == doctest::Approx(3.0));
  spec.sample_stream = 1;
  const Dataset other_draw = gen_clusters(spec);
  CHECK(other_draw.features == points.features);  // no noise: same means
}

TEST_CASE("point clusters are learned perfectly") {
  const Dataset points = gen_clusters(4, 5, 30, 0.0, 3);
  const LinearParams p = train_source(points, SourceConfig{});
  CHECK(accuracy(predict(p, points)) == 1.0);
}

TEST_CASE("separable two-class clusters reach high held-out accuracy") {
  ClusterSpec spec;
  spec.classes = 2;
  spec.dim = 2;
  spec.n_per_class = 100;
  spec.spread = 0.5;
  spec.radius = 3.0;
  spec.seed = 1;
  const Dataset train = gen_clusters(spec);
  spec.sample_stream = 1;
  const Dataset test = gen_clusters(spec);
  const LinearParams p = train_source(train, SourceConfig{});
  CHECK(accuracy(predict(p, test)) > 0.95);
}

TEST_CASE("shift ladder") {
  const Dataset clean = gen_clusters(3, 6, 40, 1.0, 2);
  for (auto kind : {ShiftKind::Rotation, ShiftKind::Translation, ShiftKind::GaussianNoise, ShiftKind::FeatureScale}) {
    ShiftSpec s;
    s.kind = kind;
    s.seed = 9;
    s.intensity = 0;
    CHECK(apply_shift(clean, s).features == clean.features);
    double prev = 0.0;
    for (int level = 1; level <= 5; ++level) {
      s.intensity = level;
      const Dataset shifted = apply_shift(clean, s);
      CHECK(shifted.labels == clean.labels);
      CHECK(shifted.support_bound == max_row_norm(shifted.features));
      const double disp = mean_displacement(clean, shifted);
      CHECK(disp > prev);
      prev = disp;
    }
  }
  ShiftSpec half_turn;
  half_turn.kind = ShiftKind::Rotation;
  half_turn.intensity = 1;
  half_turn.angle_per_level_deg = 180.0;
  const Dataset back = apply_shift(apply_shift(clean, half_turn), half_turn);
  for (std::size_t i = 0; i < clean.features.values().size(); ++i)
    CHECK(std::abs(back.features.values()[i] - clean.features.values()[i]) <= 1e-9);

  ShiftSpec bad;
  bad.intensity = 6;
  CHECK_THROWS(apply_shift(clean, bad));
  CHECK(parse_shift_kind("gaussian-noise") == ShiftKind::GaussianNoise);
  CHECK_THROWS(parse_shift_kind("blur"));
}

TEST_CASE("holdout split") {
  const Dataset d = gen_clusters(2, 3, 50, 1.0, 0);
  auto [train0, hold0] = split_holdout(d, 0.0, 1);
  CHECK(hold0.size() == 0);
  CHECK(train0.size() == 100);
  auto [train, hold] = split_holdout(d, 0.1, 1);
  CHECK(train.size() == 90);
  CHECK(hold.size() == 10);
  auto [train2, hold2] = split_holdout(d, 0.1, 1);
  CHECK(train == train2);
  CHECK(hold == hold2);
  CHECK_THROWS(split_holdout(d, 1.5, 1));
}

TEST_CASE("clipping enforces a norm bound") {
  const Dataset d = gen_clusters(2, 3, 20, 2.0, 0);
  const Dataset c = clip_to_norm(d, 1.5);
  CHECK(c.support_bound <= 1.5 + 1e-12);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double n = std::sqrt(squared_norm(d.features.row(i)));
    if (n <= 1.5) CHECK(c.features.row(i)[0] == d.features.row(i)[0]);
  }
}

TEST_CASE("CSV parsing") {
  const Dataset d = parse_csv("1.0,2.0,0\n3.0,4.0,1", true);
  CHECK(d.size() == 2);
  CHECK(d.dim() == 2);
  CHECK(d.classes >= 2);
  CHECK((*d.labels)[1] == 1);
  CHECK(d.features(1, 0) == 3.0);

  const Dataset unlabeled = parse_csv("1,2,3\n4,5,6\n", false);
  CHECK(unlabeled.dim() == 3);
  CHECK_FALSE(unlabeled.labeled());

  const Dataset headed = parse_csv("a,b,label\n1,2,0\n", true, true);
  CHECK(headed.size() == 1);

  try {
    parse_csv("1,2,0\n3,4,1\n5,0\n", true);
    FAIL("ragged row accepted");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  try {
    parse_csv("1,2,0\n3,x,1\n", true);
    FAIL("non-numeric cell accepted");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_csv("", true), InputError);
  CHECK_THROWS_AS(parse_csv("1,2,-1\n", true), InputError);
  CHECK_THROWS_AS(parse_csv("1,2,0.5\n", true), InputError);
}

TEST_CASE("CSV round trip through a file") {
  const Dataset d = gen_clusters(3, 4, 5, 1.0, 11);
  const auto path = std::filesystem::temp_directory_path() / "anchor_test_roundtrip.csv";
  write_csv(path, d);
  const Dataset back = load_csv(path, true);
  CHECK(back.features == d.features);
  CHECK(back.labels == d.labels);
  std::filesystem::remove(path);
  {
    std::ofstream empty(path);
  }
  CHECK_THROWS_AS(load_csv(path, true), InputError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_csv("/nonexistent/anchor.csv", true), InputError);
}

TEST_CASE("seeded permutation") {
  const auto p = seeded_permutation(50, 3);
  CHECK(p == seeded_permutation(50, 3));
  CHECK(p != seeded_permutation(50, 4));
  std::vector<std::size_t> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}
