#include "anchor/theory.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "anchor/error.hpp"
#include "anchor/format.hpp"
#include "anchor/selftrain.hpp"

namespace anchor {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double mean_of(std::span<const double> p) {
  double s = 0.0;
  for (double v : p) s += v;
  return s / static_cast<double>(p.size());
}

void check_samples(std::span<const Matrix> us, std::span<const Matrix> vs) {
  if (us.empty() || us.size() != vs.size()) throw InputError("theory: need matching, non-empty sample sets");
  for (std::size_t s = 0; s < us.size(); ++s)
    if (us[s].values().size() != vs[s].values().size() || us[s].values().size() != us[0].values().size())
      throw InputError("theory: sample shapes differ");
}

struct SampleMoments {
  double inner = 0.0;     // E⟨u, v⟩
  double u_sq = 0.0;      // E‖u‖²
  double v_sq = 0.0;      // E‖v‖²
  double v_mean_sq = 0.0; // ‖E v‖²
};

SampleMoments moments(std::span<const Matrix> us, std::span<const Matrix> vs) {
  check_samples(us, vs);
  SampleMoments m;
  const double inv = 1.0 / static_cast<double>(us.size());
  std::vector<double> v_mean(vs[0].values().size(), 0.0);
  for (std::size_t s = 0; s < us.size(); ++s) {
    const auto& u = us[s].values();
    const auto& v = vs[s].values();
    m.inner += dot(u, v) * inv;
    m.u_sq += squared_norm(u) * inv;
    m.v_sq += squared_norm(v) * inv;
    for (std::size_t i = 0; i < v.size(); ++i) v_mean[i] += v[i] * inv;
  }
  m.v_mean_sq = squared_norm(v_mean);
  return m;
}

}  // namespace

double xi(double z) {
  if (!(z >= 0.5 && z <= 1.0)) throw ParameterError("xi: z must lie in [0.5, 1]");
  return 2.0 * z - 1.0 - std::log(2.0 * z);
}

double chernoff_tail_bound(std::span<const double> p, double q) {
  if (p.empty()) throw InputError("chernoff_tail_bound: no trials");
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw InputError("chernoff_tail_bound: probabilities must lie in [0,1]");
  const double p_bar = mean_of(p);
  if (!(q < p_bar)) throw PreconditionError("chernoff_tail_bound: requires q < mean success probability");
  if (q < 0.0) throw PreconditionError("chernoff_tail_bound: requires q >= 0");
  const double o = static_cast<double>(p.size());
  const double q_log = q > 0.0 ? q * std::log(q / p_bar) : 0.0;
  return std::exp(o * (q - p_bar - q_log));
}

McEstimate mc_tail_estimate(std::span<const double> p, double q, std::size_t trials,
                            std::uint64_t seed) {
  if (p.empty() || trials == 0) throw InputError("mc_tail_estimate: need trials and probabilities");
  std::mt19937_64 rng(seed);
  const double cutoff = q * static_cast<double>(p.size());
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::size_t s = 0;
    for (double pi : p)
      if (uniform01(rng) < pi) ++s;
    if (static_cast<double>(s) <= cutoff) ++hits;
  }
  McEstimate e;
  const double n = static_cast<double>(trials);
  e.estimate = static_cast<double>(hits) / n;
  e.std_error = std::sqrt(e.estimate * (1.0 - e.estimate) / n);
  return e;
}

McEstimate simulate_ensemble_error(std::span<const double> step_accuracy, std::size_t classes,
                                   std::size_t trials, std::uint64_t seed) {
  if (classes < 2) throw InputError("simulate_ensemble_error: need at least 2 classes");
  if (trials == 0) throw InputError("simulate_ensemble_error: need trials");
  std::mt19937_64 rng(seed);
  const ClassIndex truth = 0, rival = 1;
  const ProbVec vote_truth = ProbVec::one_hot(classes, truth);
  const ProbVec vote_rival = ProbVec::one_hot(classes, rival);
  ThresholdState admit_all;  // delta = 0: every step is confident
  std::size_t errors = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    EnsembleBank bank(1, classes);
    for (double acc : step_accuracy) {
      const ProbVec& vote = uniform01(rng) < acc ? vote_truth : vote_rival;
      bank.add(0, vote, compute_weight(vote, admit_all, WeightScheme::RelativeThreshold));
    }
    auto counts = bank.counts(0);
    bool wrong = bank.visits(0) == 0.0;
    for (std::size_t k = 0; k < classes && !wrong; ++k)
      if (k != truth && counts[k] >= counts[truth]) wrong = true;
    if (wrong) ++errors;
  }
  McEstimate e;
  const double n = static_cast<double>(trials);
  e.estimate = static_cast<double>(errors) / n;
  e.std_error = std::sqrt(e.estimate * (1.0 - e.estimate) / n);
  return e;
}

Matrix full_gradient(const LinearParams& params, const Dataset& labeled, double ridge) {
  if (!labeled.labeled() || labeled.size() == 0) throw InputError("full_gradient: labeled data required");
  std::vector<std::size_t> rows(labeled.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const Minibatch all = labeled.batch(rows);
  std::vector<SoftTarget> targets;
  targets.reserve(rows.size());
  for (ClassIndex y : *labeled.labels) targets.push_back(SoftTarget::one_hot(params.classes(), y));
  Matrix g = grad_linear_ce(params, all, targets);
  const auto& w = params.weights().values();
  for (std::size_t i = 0; i < w.size(); ++i) g.values()[i] += ridge * w[i];
  return g;
}

LinearParams solve_theta_star(const Dataset& labeled, const SolveOptions& options) {
  if (!labeled.labeled() || labeled.size() == 0) throw InputError("solve_theta_star: labeled, non-empty data required");
  if (!(options.ridge >= 0.0)) throw ParameterError("solve_theta_star: ridge must be >= 0");
  if (!(options.tol > 0.0)) throw ParameterError("solve_theta_star: tol must be > 0");
  const std::size_t K = std::max<std::size_t>(labeled.classes, 2);
  double mean_sq = 0.0;
  for (std::size_t i = 0; i < labeled.size(); ++i) mean_sq += squared_norm(labeled.features.row(i));
  mean_sq /= static_cast<double>(labeled.size());
  // The softmax CE Hessian in the logits has spectral norm at most 1/2.
  const double smooth = 0.5 * mean_sq + options.ridge;
  const double step = 1.0 / std::max(smooth, 1e-12);

  LinearParams x(labeled.dim(), K);
  LinearParams y = x;
  double momentum = 1.0;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    const Matrix gx = full_gradient(x, labeled, options.ridge);
    if (frobenius_norm(gx) <= options.tol) return x;
    const Matrix gy = full_gradient(y, labeled, options.ridge);
    LinearParams next = sgd_step(y, gy, step);
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const double beta = (momentum - 1.0) / next_momentum;
    // Adaptive restart when the momentum direction opposes descent.
    double align = 0.0;
    const auto& nv = next.weights().values();
    const auto& xv = x.weights().values();
    for (std::size_t i = 0; i < nv.size(); ++i) align += gy.values()[i] * (nv[i] - xv[i]);
    Matrix yw = next.weights();
    if (align > 0.0) {
      momentum = 1.0;
    } else {
      for (std::size_t i = 0; i < nv.size(); ++i) yw.values()[i] = nv[i] + beta * (nv[i] - xv[i]);
      momentum = next_momentum;
    }
    x = std::move(next);
    y = LinearParams(std::move(yw));
  }
  throw NumericError("solve_theta_star: no convergence within iteration cap");
}

Matrix grad_tilde_l(const Minibatch& batch, const LinearParams& theta, const LinearParams& theta_m) {
  std::vector<SoftTarget> targets;
  targets.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i)
    targets.push_back(SoftTarget::one_hot(theta.classes(),
                                          pseudo_label(softmax_forward(theta_m, batch.inputs.row(i)))));
  return grad_linear_ce(theta, batch, targets);
}

Matrix hat_g(const Minibatch& batch, const LinearParams& theta_m, const EnsembleBank& bank) {
  const std::size_t K = theta_m.classes();
  if (bank.classes() != K) throw InputError("hat_g: bank class count mismatch");
  std::vector<std::vector<double>> diffs(batch.size(), std::vector<double>(K, 0.0));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto dist = ensemble_distribution(bank, batch.indices[i]);
    if (!dist) continue;
    const ClassIndex yhat = pseudo_label(softmax_forward(theta_m, batch.inputs.row(i)));
    for (std::size_t k = 0; k < K; ++k) diffs[i][k] = (*dist)[k] - (k == yhat ? 1.0 : 0.0);
  }
  if (batch.size() == 0) throw InputError("hat_g: empty batch");
  return accumulate_gradient(batch.inputs, diffs, K);
}

LambdaDagger lambda_dagger(std::span<const Matrix> us, std::span<const Matrix> vs, double l_gamma) {
  if (!(l_gamma > 0.0)) throw ParameterError("lambda_dagger: L·gamma must be > 0");
  const SampleMoments m = moments(us, vs);
  LambdaDagger out;
  const double denom = m.v_sq + (2.0 / l_gamma) * m.v_mean_sq;
  if (denom == 0.0) {
    out.degenerate = true;
    return out;
  }
  out.value = m.inner / denom;
  return out;
}

double neighborhood_n(double lambda, std::span<const Matrix> us, std::span<const Matrix> vs,
                      double l_gamma) {
  if (!(l_gamma > 0.0)) throw ParameterError("neighborhood_n: L·gamma must be > 0");
  check_samples(us, vs);
  const double inv = 1.0 / static_cast<double>(us.size());
  std::vector<double> v_mean(vs[0].values().size(), 0.0);
  double resid = 0.0;
  for (std::size_t s = 0; s < us.size(); ++s) {
    const auto& u = us[s].values();
    const auto& v = vs[s].values();
    double r = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double d = u[i] - lambda * v[i];
      r += d * d;
      v_mean[i] += v[i] * inv;
    }
    resid += r * inv;
  }
  return lambda * lambda * squared_norm(v_mean) + 0.5 * l_gamma * resid;
}

double reduction_ratio(std::span<const Matrix> us, std::span<const Matrix> vs, double l_gamma) {
  if (!(l_gamma > 0.0)) throw ParameterError("reduction_ratio: L·gamma must be > 0");
  const SampleMoments m = moments(us, vs);
  const double denom = (m.v_sq + (2.0 / l_gamma) * m.v_mean_sq) * m.u_sq;
  if (denom == 0.0) return 0.0;
  return m.inner * m.inner / denom;
}

double g_error(const LinearParams& params, const Dataset& labeled) {
  if (!labeled.labeled()) throw InputError("g_error: labels required");
  if (labeled.size() == 0) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labeled.size(); ++i)
    if (pseudo_label(softmax_forward(params, labeled.features.row(i))) != (*labeled.labels)[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(labeled.size());
}

double g_kl(const LinearParams& theta_star, const EnsembleBank& bank, const Dataset& dataset) {
  if (bank.instances() != dataset.size()) throw InputError("g_kl: bank/dataset size mismatch");
  const std::size_t K = theta_star.classes();
  const double norm = 1.0 + static_cast<double>(K) * kKlSmoothing;
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto dist = ensemble_distribution(bank, i);
    if (!dist) continue;
    const ProbVec f = softmax_forward(theta_star, dataset.features.row(i));
    double kl = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      if (f[k] == 0.0) continue;
      kl += f[k] * std::log(f[k] / (((*dist)[k] + kKlSmoothing) / norm));
    }
    total += kl;
    ++used;
  }
  return used ? total / static_cast<double>(used) : 0.0;
}

double g_c(const EnsembleBank& bank, const LinearParams& theta_m, const Dataset& dataset) {
  if (bank.instances() != dataset.size()) throw InputError("g_c: bank/dataset size mismatch");
  const std::size_t K = theta_m.classes();
  std::vector<double> gap(K, 0.0);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const ClassIndex yhat = pseudo_label(softmax_forward(theta_m, dataset.features.row(i)));
    auto dist = ensemble_distribution(bank, i);
    for (std::size_t k = 0; k < K; ++k) {
      const double onehot = k == yhat ? 1.0 : 0.0;
      gap[k] += (dist ? (*dist)[k] : onehot) - onehot;
    }
  }
  if (dataset.size() == 0) return 0.0;
  for (double& v : gap) v /= static_cast<double>(dataset.size());
  return squared_norm(gap);
}

TheoryInstance make_theory_instance(const TheoryInstanceOptions& o) {
  ClusterSpec spec;
  spec.classes = o.classes;
  spec.dim = o.dim;
  spec.n_per_class = o.n_per_class;
  spec.spread = o.spread;
  spec.radius = 2.0;
  spec.seed = derive_seed(o.seed, 1);
  const Dataset source = gen_clusters(spec);
  ShiftSpec shift;
  shift.kind = ShiftKind::Rotation;
  shift.intensity = o.shift_intensity;
  shift.seed = derive_seed(o.seed, 2);
  spec.sample_stream = 1;
  const Dataset target = apply_shift(gen_clusters(spec), shift);

  SourceConfig sc;
  sc.epochs = 30;
  sc.lr = 0.1;
  sc.seed = derive_seed(o.seed, 4);
  const LinearParams theta0 = train_source(source, sc);

  AdaptConfig ac;
  ac.strategy = Strategy::Ancon;
  ac.epochs = o.adapt_epochs;
  ac.lr = 0.05;
  ac.batch_size = o.batch_size;
  ac.seed = derive_seed(o.seed, 5);
  ac.ancon.normalization = Normalization::Normalized;
  AdaptState state = initial_state(target, theta0, ac);
  resume_adaptation(target, Dataset{}, state, ac, [&](const AdaptState& s, const RunRecord&) {
    state = s;
    return true;
  });

  TheoryInstance inst;
  inst.dataset = target;
  inst.theta_star = solve_theta_star(target);
  inst.theta_m = state.params;
  inst.bank = state.bank;
  inst.l_gamma = o.l_gamma;
  std::mt19937_64 rng(derive_seed(o.seed, 6));
  for (std::size_t s = 0; s < o.samples; ++s) {
    const auto perm = seeded_permutation(target.size(), rng());
    std::vector<std::size_t> rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(std::min(o.batch_size, perm.size())));
    const Minibatch batch = target.batch(rows);
    inst.grad_star_samples.push_back(grad_tilde_l(batch, inst.theta_star, inst.theta_m));
    inst.hat_g_samples.push_back(hat_g(batch, inst.theta_m, inst.bank));
  }
  return inst;
}

namespace {

std::string cfg(std::string_view family, std::size_t i) {
  return std::string(family) + "#" + std::to_string(i);
}

void add(std::vector<VerifyCheck>& out, std::string id, std::string quantity, double value,
         double bound, bool pass) {
  out.push_back({std::move(id), std::move(quantity), value, bound, pass});
}

// Random sample sets with a controlled alignment between u and v.
std::pair<std::vector<Matrix>, std::vector<Matrix>> random_sample_set(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = 1 + rng() % 6, K = 2 + rng() % 4, count = 2 + rng() % 30;
  const double align = 2.0 * uniform01(rng) - 1.0;
  const double offset = 2.0 * uniform01(rng);
  Matrix shared(d, K);
  for (double& v : shared.values()) v = normal(rng);
  std::vector<Matrix> us, vs;
  for (std::size_t s = 0; s < count; ++s) {
    Matrix u(d, K), v(d, K);
    for (std::size_t i = 0; i < u.values().size(); ++i) {
      u.values()[i] = normal(rng) + offset * shared.values()[i];
      v.values()[i] = align * u.values()[i] + 0.5 * normal(rng);
    }
    us.push_back(std::move(u));
    vs.push_back(std::move(v));
  }
  return {std::move(us), std::move(vs)};
}

}  // namespace

std::vector<VerifyCheck> run_verification(const VerifyOptions& opt) {
  const std::function<double(double)> xi_fn = opt.xi_override ? opt.xi_override : std::function<double(double)>(xi);
  std::vector<VerifyCheck> out;

  // ξ anchors and shape.
  add(out, "xi", "xi(0.5)", xi_fn(0.5), 0.0, std::abs(xi_fn(0.5)) <= 1e-15);
  add(out, "xi", "xi(1)", xi_fn(1.0), 1.0 - std::log(2.0), std::abs(xi_fn(1.0) - (1.0 - std::log(2.0))) <= 1e-12);
  add(out, "xi", "xi(0.7)", xi_fn(0.7), 0.063528, std::abs(xi_fn(0.7) - 0.063528) <= 5e-7);
  {
    bool ok = true;
    double prev = xi_fn(0.5);
    for (int i = 1; i <= 500; ++i) {
      const double z = 0.5 + 0.5 * i / 500.0;
      const double v = xi_fn(z);
      if (!(v > 0.0 && v > prev)) ok = false;
      prev = v;
    }
    add(out, "xi", "positive_increasing", ok ? 1.0 : 0.0, 1.0, ok);
  }

  // Chernoff tail bound anchor and dominance over random configurations.
  {
    const std::vector<double> p(10, 0.8);
    const double b = chernoff_tail_bound(p, 0.5);
    // Hand anchor: exponent -0.64998 to five decimals, bound 0.52207 quoted
    // with a rounding slip in the last digit (exp(-0.64998) = 0.522056).
    add(out, "tail#anchor", "chernoff_exponent", std::log(b), -0.64998, std::abs(std::log(b) + 0.64998) <= 5e-6);
    add(out, "tail#anchor", "chernoff_bound", b, 0.52207, std::abs(b - 0.52207) <= 2e-5);
    const double form = std::exp(-5.0 * xi_fn(0.8));
    add(out, "tail#anchor", "half_form_residual", std::abs(b - form), 1e-12, std::abs(b - form) <= 1e-12);
  }
  for (std::size_t c = 0; c < opt.tail_configs; ++c) {
    std::mt19937_64 rng(derive_seed(opt.seed, 1000 + c));
    const std::size_t o = 4 + rng() % 37;
    std::vector<double> p(o);
    for (double& v : p) v = 0.2 + 0.8 * uniform01(rng);
    const double p_bar = mean_of(p);
    const double q = p_bar * uniform01(rng);
    const double bound = chernoff_tail_bound(p, q);
    const McEstimate mc = mc_tail_estimate(p, q, opt.mc_trials, rng());
    add(out, cfg("tail", c), "mc_tail_minus_bound", mc.estimate, bound + 3.0 * mc.std_error,
        mc.estimate <= bound + 3.0 * mc.std_error);
    if (p_bar > 0.5) {
      const double half = chernoff_tail_bound(p, 0.5);
      const double form = std::exp(-0.5 * static_cast<double>(o) * xi_fn(p_bar));
      add(out, cfg("tail", c), "half_form_residual", std::abs(half - form), 1e-12,
          std::abs(half - form) <= 1e-12);
    }
  }

  // Majority-vote ensemble error against exp(−(Q/2)·ξ(p̄)).
  {
    const double p_bar = 0.7;
    double prev = 1.0, prev_se = 0.0;
    for (std::size_t q : {10u, 25u, 50u, 100u}) {
      const std::vector<double> acc(q, p_bar);
      const McEstimate e = simulate_ensemble_error(acc, 2, opt.ensemble_trials, derive_seed(opt.seed, 5000 + q));
      const double bound = std::exp(-0.5 * static_cast<double>(q) * xi_fn(p_bar));
      const std::string id = "ensemble#Q=" + std::to_string(q);
      add(out, id, "error_vs_bound", e.estimate, bound + 3.0 * e.std_error, e.estimate <= bound + 3.0 * e.std_error);
      const double slack = 3.0 * std::sqrt(prev_se * prev_se + e.std_error * e.std_error);
      add(out, id, "non_increasing_in_Q", e.estimate, prev + slack, e.estimate <= prev + slack);
      prev = e.estimate;
      prev_se = e.std_error;
    }
  }

  // λ† / N(λ) algebra on random sample sets.
  for (std::size_t c = 0; c < opt.identity_sets; ++c) {
    std::mt19937_64 rng(derive_seed(opt.seed, 9000 + c));
    auto [us, vs] = random_sample_set(rng);
    const double lg = 0.1 + 9.9 * uniform01(rng);
    const LambdaDagger ld = lambda_dagger(us, vs, lg);
    const double n0 = neighborhood_n(0.0, us, vs, lg);
    const double nd = neighborhood_n(ld.value, us, vs, lg);
    const double ratio = reduction_ratio(us, vs, lg);
    const double lhs = 1.0 - nd / n0;
    const double resid = std::abs(lhs - ratio) / std::max(std::abs(ratio), 1e-300);
    const std::string id = cfg("identity", c);
    add(out, id, "reduction_identity_rel_residual", resid, 1e-10, resid < 1e-10 || std::abs(lhs - ratio) < 1e-15);
    add(out, id, "N(lambda_dagger)_le_N(0)", nd, n0, nd <= n0 * (1.0 + 1e-12));
    double grid_best = n0;
    for (int i = -2000; i <= 2000; ++i) grid_best = std::min(grid_best, neighborhood_n(i * 1e-3, us, vs, lg));
    add(out, id, "grid_never_beats_lambda_dagger", grid_best, nd, grid_best >= nd * (1.0 - 1e-12));
  }

  // Quantities on a self-trained linear instance.
  {
    TheoryInstanceOptions io;
    io.seed = opt.seed;
    io.l_gamma = opt.l_gamma;
    const TheoryInstance inst = make_theory_instance(io);
    const std::string id = "instance#0";
    const double grad_norm = frobenius_norm(full_gradient(inst.theta_star, inst.dataset, SolveOptions{}.ridge));
    add(out, id, "theta_star_grad_norm", grad_norm, SolveOptions{}.tol, grad_norm <= SolveOptions{}.tol);
    const LambdaDagger ld = lambda_dagger(inst.grad_star_samples, inst.hat_g_samples, inst.l_gamma);
    const double n0 = neighborhood_n(0.0, inst.grad_star_samples, inst.hat_g_samples, inst.l_gamma);
    const double nd = neighborhood_n(ld.value, inst.grad_star_samples, inst.hat_g_samples, inst.l_gamma);
    add(out, id, "lambda_dagger", ld.value, 0.0, true);
    add(out, id, "N(lambda_dagger)_le_N(0)", nd, n0, nd <= n0 * (1.0 + 1e-12));
    const double ratio = reduction_ratio(inst.grad_star_samples, inst.hat_g_samples, inst.l_gamma);
    const double resid = std::abs((1.0 - nd / n0) - ratio) / std::max(ratio, 1e-300);
    add(out, id, "reduction_identity_rel_residual", resid, 1e-10, resid < 1e-10 || std::abs((1.0 - nd / n0) - ratio) < 1e-15);
    // Descriptive quantities; the alignment sign is reported, not asserted.
    const SampleMoments m = moments(inst.grad_star_samples, inst.hat_g_samples);
    add(out, id, "alignment_E<u,v>", m.inner, 0.0, true);
    add(out, id, "g_error", g_error(inst.theta_m, inst.dataset), 1.0, true);
    add(out, id, "g_kl", g_kl(inst.theta_star, inst.bank, inst.dataset), 0.0, true);
    add(out, id, "g_c", g_c(inst.bank, inst.theta_m, inst.dataset), 0.0, true);
  }
  return out;
}

std::string verification_csv(std::span<const VerifyCheck> checks) {
  std::ostringstream os;
  os << "config_id,quantity,value,bound,pass\n";
  for (const auto& c : checks)
    os << c.config_id << ',' << c.quantity << ',' << format_double(c.value) << ','
       << format_double(c.bound) << ',' << (c.pass ? "pass" : "fail") << '\n';
  return os.str();
}

}  // namespace anchor
