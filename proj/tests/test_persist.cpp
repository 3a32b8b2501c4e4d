#include <filesystem>
#include <random>

#include "doctest.h"
#include "helpers.hpp"

#include "anchor/error.hpp"
#include "anchor/persist.hpp"

using namespace anchor;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("anchor_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("checkpoint text round-trips exactly") {
  std::mt19937_64 rng(1);
  Matrix w = testing::random_matrix(4, 3, rng, 1e3);
  w(0, 0) = 1e-300;
  w(1, 1) = -0.1;
  const LinearParams p(w);
  const std::string text = checkpoint_to_text(p, 17);
  CHECK(text.rfind("anchor-checkpoint 1\n4 3 17\n", 0) == 0);
  const Checkpoint back = checkpoint_from_text(text);
  CHECK(back.params == p);
  CHECK(back.epoch == 17);
  CHECK(checkpoint_to_text(back.params, back.epoch) == text);

  const fs::path dir = scratch("ckpt");
  fs::create_directories(dir);
  write_checkpoint(dir / "c.txt", p, 3);
  CHECK(read_checkpoint(dir / "c.txt").params == p);
  fs::remove_all(dir);
}

TEST_CASE("malformed checkpoints are rejected") {
  CHECK_THROWS_AS(checkpoint_from_text(""), InputError);
  CHECK_THROWS_AS(checkpoint_from_text("anchor-checkpoint 2\n1 2 0\n0 0\n"), InputError);
  CHECK_THROWS_AS(checkpoint_from_text("anchor-checkpoint 1\n2 2 0\n0 0\n"), InputError);
  CHECK_THROWS_AS(checkpoint_from_text("anchor-checkpoint 1\n1 2 0\n0 x\n"), InputError);
  CHECK_THROWS_AS(checkpoint_from_text("anchor-checkpoint 1\n1 2 0\n0 0 0\n"), InputError);
}

TEST_CASE("bank and ELR state round-trip") {
  std::mt19937_64 rng(2);
  EnsembleBank bank(5, 3);
  for (int k = 0; k < 20; ++k) bank.add(k % 5, ProbVec(testing::random_simplex(3, rng)), 0.3 * k);
  CHECK(bank_from_text(bank_to_text(bank)) == bank);
  ElrState elr(4, 3, 0.7);
  for (int k = 0; k < 9; ++k) elr.update(k % 4, ProbVec(testing::random_simplex(3, rng)));
  CHECK(elr_from_text(elr_to_text(elr)) == elr);
  CHECK_THROWS_AS(bank_from_text("anchor-ensemble-bank 1\n1 2\n0,1\n"), InputError);
}

TEST_CASE("run records round-trip through JSON lines") {
  RunRecord r;
  r.epoch = 4;
  r.train_loss = 0.123456789012345;
  r.holdout_accuracy = 0.8;
  r.ece = 0.05;
  r.infomax = 1.2;
  r.ent = 1.5;
  r.corr_c = 0.2;
  r.mean_confidence = 0.77;
  r.threshold_delta = 0.66;
  r.marginal_tv = 0.01;
  const std::string line = record_to_line(r);
  CHECK(line.back() == '\n');
  CHECK(line.find("\"target_accuracy\":null") != std::string::npos);
  CHECK(record_from_json(nlohmann::json::parse(line)) == r);
  CHECK_THROWS_AS(record_from_json(nlohmann::json::parse("{\"epoch\":1}")), InputError);
}

TEST_CASE("state snapshots") {
  std::mt19937_64 rng(3);
  AdaptState s;
  s.params = LinearParams(testing::random_matrix(3, 2, rng));
  s.bank = EnsembleBank(4, 2);
  s.bank.add(1, ProbVec::one_hot(2, 1), 1.0);
  s.threshold = ThresholdState::make(0.9);
  s.threshold = update_threshold(s.threshold, 0.71);
  s.elr = ElrState(4, 2, 0.7);
  s.epochs_done = 3;
  s.steps_done = 12;
  s.last_marginal = {0.25, 0.75};
  const fs::path dir = scratch("state");
  save_state(dir, s);
  CHECK(load_state(dir) == s);
  fs::remove(dir / "state.json");
  CHECK_THROWS_AS(load_state(dir), InputError);
  fs::remove_all(dir);
}
