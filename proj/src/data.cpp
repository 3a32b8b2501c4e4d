#include "anchor/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "anchor/error.hpp"
#include "anchor/format.hpp"

namespace anchor {

namespace {

// Unbiased draw from [0, bound) by rejection.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    for (double& x : v) x = normal(rng);
    norm = std::sqrt(squared_norm(v));
  } while (norm < 1e-12);
  for (double& x : v) x /= norm;
  return v;
}

// Two orthonormal directions spanning the rotation plane.
std::pair<std::vector<double>, std::vector<double>> random_plane(std::mt19937_64& rng,
                                                                 std::size_t dim) {
  std::vector<double> u = random_unit(rng, dim);
  std::vector<double> v;
  double norm = 0.0;
  do {
    v = random_unit(rng, dim);
    const double proj = dot(u, v);
    for (std::size_t j = 0; j < dim; ++j) v[j] -= proj * u[j];
    norm = std::sqrt(squared_norm(v));
  } while (norm < 1e-6);
  for (double& x : v) x /= norm;
  return {std::move(u), std::move(v)};
}

}  // namespace

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[bounded(rng, i)]);
  return perm;
}

double max_row_norm(const Matrix& features) {
  double best = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i)
    best = std::max(best, std::sqrt(squared_norm(features.row(i))));
  return best;
}

Dataset make_dataset(Matrix features, std::optional<std::vector<ClassIndex>> labels,
                     std::string provenance, std::size_t classes) {
  Dataset ds;
  if (labels) {
    if (labels->size() != features.rows()) throw InputError("dataset: label count mismatch");
    std::size_t inferred = 2;
    for (ClassIndex y : *labels) inferred = std::max(inferred, y + 1);
    if (classes != 0 && inferred > classes)
      throw InputError("dataset: label out of range for " + std::to_string(classes) + " classes");
    classes = std::max(classes, inferred);
  }
  ds.features = std::move(features);
  ds.labels = std::move(labels);
  ds.classes = classes;
  ds.support_bound = max_row_norm(ds.features);
  ds.provenance = std::move(provenance);
  return ds;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Matrix f(rows.size(), dim());
  std::optional<std::vector<ClassIndex>> ys;
  if (labels) ys.emplace();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= size()) throw InputError("dataset subset: row out of range");
    auto src = features.row(rows[i]);
    std::copy(src.begin(), src.end(), f.row(i).begin());
    if (ys) ys->push_back((*labels)[rows[i]]);
  }
  return make_dataset(std::move(f), std::move(ys), provenance, classes);
}

Minibatch Dataset::batch(const std::vector<std::size_t>& rows) const {
  Minibatch mb;
  mb.inputs = Matrix(rows.size(), dim());
  mb.indices = rows;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = features.row(rows[i]);
    std::copy(src.begin(), src.end(), mb.inputs.row(i).begin());
  }
  return mb;
}

Dataset gen_clusters(const ClusterSpec& spec) {
  if (spec.n_per_class == 0) throw InputError("gen_clusters: empty dataset (n_per_class = 0)");
  if (spec.classes < 2) throw InputError("gen_clusters: need at least 2 classes");
  if (spec.dim < 1) throw InputError("gen_clusters: dimension must be >= 1");
  if (!(spec.spread >= 0.0)) throw ParameterError("gen_clusters: spread must be >= 0");
  std::mt19937_64 rng(spec.seed);
  std::vector<std::vector<double>> means;
  for (std::size_t k = 0; k < spec.classes; ++k) {
    auto m = random_unit(rng, spec.dim);
    for (double& v : m) v *= spec.radius;
    means.push_back(std::move(m));
  }
  std::mt19937_64 sample_rng(derive_seed(spec.seed, 100 + spec.sample_stream));
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = spec.classes * spec.n_per_class;
  Matrix f(n, spec.dim);
  std::vector<ClassIndex> ys(n);
  for (std::size_t k = 0; k < spec.classes; ++k) {
    for (std::size_t i = 0; i < spec.n_per_class; ++i) {
      const std::size_t r = k * spec.n_per_class + i;
      auto row = f.row(r);
      for (std::size_t j = 0; j < spec.dim; ++j) row[j] = means[k][j] + spec.spread * normal(sample_rng);
      ys[r] = k;
    }
  }
  std::ostringstream prov;
  prov << "clusters(K=" << spec.classes << ",d=" << spec.dim << ",n_per_class=" << spec.n_per_class
       << ",spread=" << format_double(spec.spread) << ",radius=" << format_double(spec.radius)
       << ",seed=" << spec.seed << ",stream=" << spec.sample_stream << ")";
  return make_dataset(std::move(f), std::move(ys), prov.str(), spec.classes);
}

Dataset gen_clusters(std::size_t classes, std::size_t dim, std::size_t n_per_class, double spread,
                     std::uint64_t seed) {
  ClusterSpec spec;
  spec.classes = classes;
  spec.dim = dim;
  spec.n_per_class = n_per_class;
  spec.spread = spread;
  spec.seed = seed;
  return gen_clusters(spec);
}

ShiftKind parse_shift_kind(std::string_view name) {
  if (name == "rotation") return ShiftKind::Rotation;
  if (name == "translation") return ShiftKind::Translation;
  if (name == "gaussian-noise") return ShiftKind::GaussianNoise;
  if (name == "feature-scale") return ShiftKind::FeatureScale;
  throw ConfigError("unknown shift kind '" + std::string(name) + "'");
}

std::string_view to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::Rotation: return "rotation";
    case ShiftKind::Translation: return "translation";
    case ShiftKind::GaussianNoise: return "gaussian-noise";
    case ShiftKind::FeatureScale: return "feature-scale";
  }
  return "?";
}

void ShiftSpec::validate() const {
  if (intensity < 0 || intensity > 5) throw ParameterError("shift intensity must lie in 0..5");
  if (kind == ShiftKind::GaussianNoise) {
    if (noise_sigmas.size() != 5) throw ParameterError("noise ladder needs 5 sigmas");
    for (std::size_t i = 0; i < noise_sigmas.size(); ++i) {
      if (!(noise_sigmas[i] > 0.0)) throw ParameterError("noise sigmas must be > 0");
      if (i > 0 && !(noise_sigmas[i] > noise_sigmas[i - 1]))
        throw ParameterError("noise ladder must be strictly increasing");
    }
  }
}

Dataset apply_shift(const Dataset& dataset, const ShiftSpec& spec) {
  spec.validate();
  Dataset out = dataset;
  std::ostringstream prov;
  prov << dataset.provenance << " | shift(" << to_string(spec.kind) << ",intensity=" << spec.intensity
       << ",seed=" << spec.seed << ")";
  out.provenance = prov.str();
  if (spec.intensity == 0) return out;

  const std::size_t d = dataset.dim();
  const double level = static_cast<double>(spec.intensity);
  std::mt19937_64 rng(spec.seed);
  Matrix& f = out.features;
  switch (spec.kind) {
    case ShiftKind::Rotation: {
      if (d < 2) throw InputError("rotation shift needs dimension >= 2");
      auto [u, v] = random_plane(rng, d);
      const double angle = level * spec.angle_per_level_deg * std::numbers::pi / 180.0;
      const double c = std::cos(angle), s = std::sin(angle);
      for (std::size_t i = 0; i < f.rows(); ++i) {
        auto x = f.row(i);
        const double a = dot(x, u), b = dot(x, v);
        const double na = c * a - s * b, nb = s * a + c * b;
        for (std::size_t j = 0; j < d; ++j) x[j] += (na - a) * u[j] + (nb - b) * v[j];
      }
      break;
    }
    case ShiftKind::Translation: {
      auto dir = random_unit(rng, d);
      const double mag = level * spec.offset_per_level;
      for (std::size_t i = 0; i < f.rows(); ++i) {
        auto x = f.row(i);
        for (std::size_t j = 0; j < d; ++j) x[j] += mag * dir[j];
      }
      break;
    }
    case ShiftKind::GaussianNoise: {
      std::normal_distribution<double> normal(0.0, spec.noise_sigmas[spec.intensity - 1]);
      for (double& v : f.values()) v += normal(rng);
      break;
    }
    case ShiftKind::FeatureScale: {
      std::normal_distribution<double> normal(0.0, 1.0);
      std::vector<double> scale(d);
      for (double& s : scale) s = std::exp(level * spec.log_scale_per_level * normal(rng));
      for (std::size_t i = 0; i < f.rows(); ++i) {
        auto x = f.row(i);
        for (std::size_t j = 0; j < d; ++j) x[j] *= scale[j];
      }
      break;
    }
  }
  out.support_bound = max_row_norm(out.features);
  return out;
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& dataset, double fraction,
                                          std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ParameterError("holdout fraction must lie in [0,1]");
  const auto perm = seeded_permutation(dataset.size(), seed);
  const auto n_hold = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(dataset.size())));
  std::vector<std::size_t> hold(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_hold));
  std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_hold), perm.end());
  return {dataset.subset(train), dataset.subset(hold)};
}

Dataset clip_to_norm(const Dataset& dataset, double bound) {
  if (!(bound > 0.0)) throw ParameterError("clip bound must be > 0");
  Dataset out = dataset;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto x = out.features.row(i);
    const double norm = std::sqrt(squared_norm(x));
    if (norm > bound)
      for (double& v : x) v *= bound / norm;
  }
  out.support_bound = max_row_norm(out.features);
  return out;
}

Dataset parse_csv(std::string_view text, bool has_labels, bool has_header, std::string provenance) {
  std::vector<double> values;
  std::vector<ClassIndex> ys;
  std::size_t width = 0, rows = 0, line_no = 0;
  std::size_t pos = 0;
  bool header_pending = has_header;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.size() - start : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      throw InputError(provenance + ":" + std::to_string(line_no) + ": ragged row (" +
                       std::to_string(cells.size()) + " cells, expected " + std::to_string(width) + ")");
    const std::size_t n_feat = has_labels ? width - 1 : width;
    if (n_feat == 0) throw InputError(provenance + ":" + std::to_string(line_no) + ": no feature columns");
    for (std::size_t c = 0; c < n_feat; ++c) {
      double v;
      if (!parse_double(cells[c], v) || !std::isfinite(v))
        throw InputError(provenance + ":" + std::to_string(line_no) + ": non-numeric cell '" +
                         std::string(cells[c]) + "'");
      values.push_back(v);
    }
    if (has_labels) {
      double v;
      if (!parse_double(cells.back(), v) || v < 0.0 || v != std::floor(v))
        throw InputError(provenance + ":" + std::to_string(line_no) + ": invalid label '" +
                         std::string(cells.back()) + "'");
      ys.push_back(static_cast<ClassIndex>(v));
    }
    ++rows;
  }
  if (rows == 0) throw InputError(provenance + ": empty dataset");
  const std::size_t d = has_labels ? width - 1 : width;
  Matrix f(rows, d);
  f.values() = std::move(values);
  std::optional<std::vector<ClassIndex>> labels;
  if (has_labels) labels = std::move(ys);
  return make_dataset(std::move(f), std::move(labels), std::move(provenance));
}

Dataset load_csv(const std::filesystem::path& path, bool has_labels, bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), has_labels, has_header, path.string());
}

std::string to_csv(const Dataset& dataset) {
  std::string out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto x = dataset.features.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j) out += ',';
      out += format_double(x[j]);
    }
    if (dataset.labels) {
      out += ',';
      out += std::to_string((*dataset.labels)[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_csv(dataset);
}

double mean_displacement(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size() || a.dim() != b.dim()) throw InputError("mean_displacement: shape mismatch");
  if (a.size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto x = a.features.row(i), y = b.features.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - y[j]) * (x[j] - y[j]);
    total += std::sqrt(s);
  }
  return total / static_cast<double>(a.size());
}

}  // namespace anchor
