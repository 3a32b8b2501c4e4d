// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "dirs.hpp"

#include "anchor/config.hpp"
#include "anchor/experiment.hpp"
#include "anchor/model.hpp"
#include "anchor/selftrain.hpp"
#include "anchor/theory.hpp"

using namespace anchor;
namespace fs = std::filesystem;

namespace {

constexpr double kGradTol = 1e-5;
constexpr double kGradSeconds = 5.0;
constexpr std::size_t kTailConfigs = 200;
constexpr std::size_t kMcTrials = 100000;
constexpr double kAnchorExponent = -0.64998;
constexpr double kAnchorExponentTol = 5e-6;
constexpr double kAnchorBound = 0.52207;
constexpr double kAnchorBoundTol = 2e-5;  // exp(-0.64998) = 0.522056
constexpr double kHalfFormTol = 1e-12;
constexpr double kTheorySeconds = 60.0;
constexpr double kEnsembleAccuracy = 0.7;
constexpr double kEnsembleBoundQ50 = 0.20426;
constexpr std::size_t kIdentitySets = 100;
constexpr double kIdentityTol = 1e-10;
constexpr double kIdentitySeconds = 10.0;
constexpr std::size_t kLambdaGrid = 2001;
constexpr double kBenchmarkSeconds = 300.0;
constexpr double kEarlyLearningMargin = 0.03;
constexpr double kVanillaDecline = 0.05;
constexpr double kSweepSpread = 0.03;
constexpr int kSweepIntensity = 3;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

int failures = 0;

void verdict(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (auto& v : m.values()) v = n(rng);
  return m;
}

void gradient_check() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t d = 1 + rng() % 10, K = 2 + rng() % 4, b = 1 + rng() % 8;
    const LinearParams params(random_matrix(d, K, rng, 0.7));
    Minibatch batch;
    batch.inputs = random_matrix(b, d, rng, 1.0);
    for (std::size_t r = 0; r < b; ++r) batch.indices.push_back(r);
    std::vector<SoftTarget> targets;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t r = 0; r < b; ++r) {
      std::vector<double> t(K);
      for (auto& v : t) v = u(rng);
      targets.push_back(SoftTarget{t});
    }
    worst = std::max(worst, finite_diff_check(params, batch, targets, 1e-6));
  }
  const double secs = seconds_since(start);
  verdict(1, worst < kGradTol && secs < kGradSeconds,
          fmt("max relative error %.3g over 100 instances, %.2f s", worst, secs));
}

void tail_dominance() {
  const auto start = Clock::now();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t violations = 0, half_checked = 0;
  double worst_half = 0.0, worst_excess = -1.0;
  for (std::size_t c = 0; c < kTailConfigs; ++c) {
    const std::size_t o = 5 + rng() % 46;
    std::vector<double> p(o);
    const double lo = 0.2 + 0.6 * u(rng);
    for (auto& v : p) v = lo + (1.0 - lo) * u(rng);
    const double pbar = mean(p);
    const double q = pbar * (0.2 + 0.75 * u(rng));
    const double bound = chernoff_tail_bound(p, q);
    const McEstimate mc = mc_tail_estimate(p, q, kMcTrials, 1000 + c);
    worst_excess = std::max(worst_excess, mc.estimate - bound - 3.0 * mc.std_error);
    if (mc.estimate > bound + 3.0 * mc.std_error) ++violations;
    if (pbar > 0.5) {
      const double half = chernoff_tail_bound(p, 0.5);
      const double form = std::exp(-0.5 * static_cast<double>(o) * xi(pbar));
      worst_half = std::max(worst_half, std::abs(half - form) / form);
      ++half_checked;
    }
  }
  const std::vector<double> anchor(10, 0.8);
  const double b = chernoff_tail_bound(anchor, 0.5);
  const bool anchor_ok = std::abs(std::log(b) - kAnchorExponent) <= kAnchorExponentTol &&
                         std::abs(b - kAnchorBound) <= kAnchorBoundTol;
  const double secs = seconds_since(start);
  verdict(2, violations == 0 && worst_half <= kHalfFormTol && half_checked > 0 && anchor_ok && secs < kTheorySeconds,
          fmt("%zu/%zu above bound+3se (worst margin %.3g), half-form residual %.2g over %zu, "
              "anchor bound %.6f, %.1f s",
              violations, kTailConfigs, worst_excess, worst_half, half_checked, b, secs));
}

void ensemble_error() {
  const auto start = Clock::now();
  std::string detail;
  bool pass = true;
  McEstimate prev{1.0, 0.0};
  for (std::size_t Q : {10u, 25u, 50u, 100u}) {
    const std::vector<double> acc(Q, kEnsembleAccuracy);
    const McEstimate e = simulate_ensemble_error(acc, 5, kMcTrials, 31 + Q);
    if (Q == 50) pass = pass && e.estimate <= kEnsembleBoundQ50 + 3.0 * e.std_error;
    pass = pass && e.estimate <= prev.estimate + 3.0 * std::hypot(e.std_error, prev.std_error);
    detail += fmt("Q=%zu %.5f  ", Q, e.estimate);
    prev = e;
  }
  const double secs = seconds_since(start);
  verdict(3, pass && secs < kTheorySeconds,
          detail + fmt("(bound at Q=50: %.5f), %.1f s", kEnsembleBoundQ50, secs));
}

void neighborhood_identity() {
  const auto start = Clock::now();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  std::size_t grid_wins = 0, not_reduced = 0;
  for (std::size_t s = 0; s < kIdentitySets; ++s) {
    const std::size_t n = 2 + rng() % 30, d = 1 + rng() % 6, K = 2 + rng() % 4;
    const double l_gamma = 0.2 + 4.0 * u(rng);
    std::vector<Matrix> us, vs;
    const Matrix drift = random_matrix(d, K, rng, u(rng));
    for (std::size_t i = 0; i < n; ++i) {
      Matrix v = random_matrix(d, K, rng, 1.0);
      Matrix w = random_matrix(d, K, rng, 1.0);
      for (std::size_t j = 0; j < v.values().size(); ++j) {
        v.values()[j] += drift.values()[j];
        w.values()[j] = 0.8 * v.values()[j] + 0.6 * w.values()[j];
      }
      us.push_back(std::move(w));
      vs.push_back(std::move(v));
    }
    const LambdaDagger ld = lambda_dagger(us, vs, l_gamma);
    const double n0 = neighborhood_n(0.0, us, vs, l_gamma);
    const double nd = neighborhood_n(ld.value, us, vs, l_gamma);
    const double identity = 1.0 - nd / n0;
    const double ratio = reduction_ratio(us, vs, l_gamma);
    worst = std::max(worst, std::abs(identity - ratio) / std::max(std::abs(ratio), 1e-300));
    if (nd > n0 * (1.0 + 1e-12)) ++not_reduced;
    // N is quadratic in λ and λ† its minimizer, so no point of a grid over
    // [min(0, 2λ†), max(1, 2λ†)] may undercut it beyond rounding.
    const double lo = std::min(0.0, 2.0 * ld.value), hi = std::max(1.0, 2.0 * ld.value);
    const double h = (hi - lo) / static_cast<double>(kLambdaGrid - 1);
    const double slack = 1e-12 * n0;
    for (std::size_t g = 0; g < kLambdaGrid; ++g)
      if (neighborhood_n(lo + h * static_cast<double>(g), us, vs, l_gamma) < nd - slack) {
        ++grid_wins;
        break;
      }
  }
  const double secs = seconds_since(start);
  verdict(4, worst < kIdentityTol && grid_wins == 0 && not_reduced == 0 && secs < kIdentitySeconds,
          fmt("worst identity residual %.2g, grid improvements %zu, N(lambda_dagger) > N(0) in %zu sets, %.2f s",
              worst, grid_wins, not_reduced, secs));
}

ExperimentConfig benchmark_config(const fs::path& out) {
  ExperimentConfig c = load_config(fs::path(ANCHOR_SOURCE_DIR) / "configs" / "benchmark.conf");
  c.output_dir = out.string();
  return c;
}

void vanilla_equivalence(const ExperimentConfig& bench) {
  const Benchmark b = build_benchmark(bench);
  const LinearParams source = train_source(b.source_train, source_config(bench));
  std::size_t compared = 0, mismatched = 0;
  for (const TargetSplit& t : b.targets) {
    for (std::uint64_t seed : {0u, 1u}) {
      RunSpec v{.intensity = t.intensity, .strategy = Strategy::Vanilla, .seed = seed};
      RunSpec a = v;
      a.strategy = Strategy::Ancon;
      a.lambda = 0.0;
      AdaptConfig vc = adapt_config(bench, v), ac = adapt_config(bench, a);
      vc.epochs = ac.epochs = 30;
      const AdaptResult rv = run_adaptation(t.train, t.holdout, source, vc);
      const AdaptResult ra = run_adaptation(t.train, t.holdout, source, ac);
      ++compared;
      const bool same = rv.final_params == ra.final_params && rv.checkpoints == ra.checkpoints &&
                        rv.records == ra.records;
      if (!same) ++mismatched;
    }
  }
  verdict(5, mismatched == 0,
          fmt("%zu/%zu trajectories bit-identical (30 epochs, every intensity, seeds 0-1)",
              compared - mismatched, compared));
}

using Key = std::tuple<std::string, double, double, int>;  // strategy, lambda, beta, intensity

std::map<Key, std::vector<RunSummary>> group(const std::vector<RunSummary>& runs) {
  std::map<Key, std::vector<RunSummary>> g;
  for (const RunSummary& s : runs)
    g[{std::string(to_string(s.spec.strategy)), s.spec.lambda, s.spec.beta, s.spec.intensity}].push_back(s);
  return g;
}

double mean_of(const std::vector<RunSummary>& runs, const std::function<double(const RunSummary&)>& f) {
  std::vector<double> v;
  for (const RunSummary& s : runs) v.push_back(f(s));
  return mean(v);
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

void benchmark(const ExperimentConfig& bench) {
  const auto start = Clock::now();
  AdaptOptions opts;
  opts.jobs = workers();
  const AdaptOutcome out = cmd_adapt(bench, bench.output_dir, opts);
  const double secs = seconds_since(start);

  std::map<int, std::vector<RunSummary>> vanilla, ancon;
  for (const RunSummary& s : out.completed)
    (s.spec.strategy == Strategy::Vanilla ? vanilla : ancon)[s.spec.intensity].push_back(s);

  const auto sel_acc = [](const RunSummary& s) { return s.infomax.accuracy.value_or(0.0); };
  const auto sel_ece = [](const RunSummary& s) { return s.infomax.ece.value_or(0.0); };
  const auto gap = [](const RunSummary& s) { return s.peak_accuracy.value_or(0.0) - s.final_accuracy.value_or(0.0); };

  std::printf("\n  InfoMax-selected target accuracy and holdout ECE, mean over %zu seeds\n",
              bench.seeds.size());
  std::printf("  intensity  vanilla   ancon     gap      | ece vanilla  ece ancon | peak-final vanilla  ancon\n");
  bool every = true, positive_severe = true, ece_ok = true;
  for (int i : bench.intensities) {
    const double va = mean_of(vanilla[i], sel_acc), aa = mean_of(ancon[i], sel_acc);
    const double ve = mean_of(vanilla[i], sel_ece), ae = mean_of(ancon[i], sel_ece);
    std::printf("  %9d  %.4f    %.4f    %+.4f  | %.4f       %.4f    | %.4f              %.4f\n", i, va, aa,
                aa - va, ve, ae, mean_of(vanilla[i], gap), mean_of(ancon[i], gap));
    every = every && aa >= va;
    if (i >= 4) {
      positive_severe = positive_severe && aa > va;
      ece_ok = ece_ok && ae <= ve;
    }
  }
  std::printf("\n");
  const bool complete = out.incomplete == 0 && vanilla.size() == bench.intensities.size() &&
                        ancon.size() == bench.intensities.size();
  verdict(6, complete && every && positive_severe && secs < kBenchmarkSeconds,
          fmt("%zu runs, ancon >= vanilla at every intensity: %s, positive gap at 4-5: %s, %.1f s",
              out.completed.size(), every ? "yes" : "no", positive_severe ? "yes" : "no", secs));

  const int severe = *std::max_element(bench.intensities.begin(), bench.intensities.end());
  const double vg = mean_of(vanilla[severe], gap), ag = mean_of(ancon[severe], gap);
  verdict(7, vg - ag >= kEarlyLearningMargin && vg >= kVanillaDecline,
          fmt("intensity %d peak-final: vanilla %.4f, ancon %.4f, difference %.4f", severe, vg, ag, vg - ag));
  verdict(8, complete && ece_ok,
          fmt("selected ECE vanilla/ancon: i4 %.4f/%.4f, i5 %.4f/%.4f", mean_of(vanilla[4], sel_ece),
              mean_of(ancon[4], sel_ece), mean_of(vanilla[5], sel_ece), mean_of(ancon[5], sel_ece)));
}

void sweeps(const ExperimentConfig& bench, const fs::path& root) {
  AdaptOptions opts;
  opts.jobs = workers();
  // `by_beta` picks which hyperparameter labels each cell in the detail line.
  const auto spread_of = [&](ExperimentConfig c, const fs::path& out, bool by_beta, std::string& detail) {
    c.output_dir = out.string();
    c.strategies = {Strategy::Ancon};
    c.intensities = {kSweepIntensity};
    const AdaptOutcome o = cmd_adapt(c, out, opts);
    double lo = 1.0, hi = 0.0;
    for (const auto& [key, runs] : group(o.completed)) {
      const double m = mean_of(runs, [](const RunSummary& s) { return s.infomax.accuracy.value_or(0.0); });
      lo = std::min(lo, m);
      hi = std::max(hi, m);
      detail += fmt(" %.1f:%.4f", by_beta ? std::get<2>(key) : std::get<1>(key), m);
    }
    return o.incomplete == 0 ? hi - lo : 1.0;
  };
  ExperimentConfig lam = bench;
  lam.lambdas = {0.1, 0.3, 0.5, 0.7, 0.9};
  lam.betas = {0.9};
  ExperimentConfig bet = bench;
  bet.lambdas = {0.3};
  bet.betas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::string ld, bd;
  const double ls = spread_of(lam, root / "lambda", false, ld);
  const double bs = spread_of(bet, root / "beta", true, bd);
  verdict(9, ls <= kSweepSpread && bs <= kSweepSpread,
          fmt("intensity %d, lambda spread %.4f (%s ), beta spread %.4f (%s )", kSweepIntensity, ls, ld.c_str(),
              bs, bd.c_str()));
}

void determinism(const ExperimentConfig& bench, const fs::path& root) {
  ExperimentConfig c = bench;
  c.intensities = {2, 5};
  c.seeds = {0, 1};
  c.epochs = 25;
  c.strategies = {Strategy::Vanilla, Strategy::Ancon, Strategy::Elr, Strategy::Gce, Strategy::GceAncon,
                  Strategy::ElrAsAux};
  AdaptOptions parallel;
  parallel.jobs = workers();
  cmd_adapt(c, root / "a");
  cmd_adapt(c, root / "b", parallel);
  const auto a = testing::snapshot(root / "a");
  const bool identical = a == testing::snapshot(root / "b");

  AdaptOptions kill;
  kill.stop_after = 9;
  const AdaptOutcome first = cmd_adapt(c, root / "resumed", kill);
  const AdaptOutcome second = cmd_adapt(c, root / "resumed");
  const bool resumed = first.incomplete == second.completed.size() && second.incomplete == 0 &&
                       testing::snapshot(root / "resumed") == a;
  verdict(10, identical && resumed,
          fmt("%zu files compared; repeat run identical: %s; killed after epoch 9 and resumed, identical: %s",
              a.size(), identical ? "yes" : "no", resumed ? "yes" : "no"));
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "anchor_acceptance";
  fs::remove_all(root);
  try {
    gradient_check();
    tail_dominance();
    ensemble_error();
    neighborhood_identity();
    const ExperimentConfig bench = benchmark_config(root / "benchmark");
    vanilla_equivalence(bench);
    benchmark(bench);
    sweeps(bench, root / "sweep");
    determinism(bench, root / "determinism");
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    fs::remove_all(root);
    return 100;
  }
  fs::remove_all(root);
  std::printf("%d criteria failed\n", failures);
  return failures;
}
