#include "nexus/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nexus::learner {

ToyDataset ToyDataset::subset(std::span<const std::size_t> indices) const {
  ToyDataset out;
  out.classes = classes;
  out.dim = dim;
  out.features.reserve(indices.size() * dim);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    auto r = row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

ModelParams ModelParams::zeros(std::size_t classes, std::size_t dim) {
  return ModelParams{classes, dim, Vector(classes * dim + classes, 0.0)};
}

void DPConfig::validate() const {
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be > 0");
  if (!(noise_multiplier >= 0.0)) {
    throw std::invalid_argument("noise_multiplier must be >= 0");
  }
  if (noise_multiplier > 0.0 && !std::isfinite(clip_norm)) {
    throw std::invalid_argument("noise requires a finite clip_norm");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("learning_rate must be > 0");
  }
}

ToyDataset generate_dataset(std::size_t classes, std::size_t dim,
                            std::size_t n, double class_separation,
                            std::uint64_t seed) {
  if (classes < 1 || dim < 1) {
    throw std::invalid_argument("classes and dim must be positive");
  }
  if (n < classes) throw std::invalid_argument("need n >= classes");
  if (!(class_separation >= 0.0)) {
    throw std::invalid_argument("class_separation must be >= 0");
  }

  Rng mean_rng(seed, "dataset-means");
  std::vector<Vector> means(classes, Vector(dim, 0.0));
  if (class_separation > 0.0) {
    double radius = class_separation;
    for (std::size_t c = 0; c < classes; ++c) {
      for (int attempt = 0;; ++attempt) {
        Vector& mu = means[c];
        for (double& v : mu) v = mean_rng.normal();
        const double norm = l2_norm(mu);
        for (double& v : mu) v *= radius / norm;
        bool ok = true;
        for (std::size_t o = 0; o < c && ok; ++o) {
          double d2 = 0.0;
          for (std::size_t j = 0; j < dim; ++j) {
            d2 += (mu[j] - means[o][j]) * (mu[j] - means[o][j]);
          }
          ok = std::sqrt(d2) >= class_separation;
        }
        if (ok) break;
        // Low dimensions can make the sphere too crowded; widen it.
        if (attempt % 64 == 63) radius *= 1.25;
      }
    }
  }

  ToyDataset data;
  data.classes = classes;
  data.dim = dim;
  data.features.resize(n * dim);
  data.labels.resize(n);
  Rng noise_rng(seed, "dataset-noise");
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % classes);
    data.labels[i] = label;
    for (std::size_t j = 0; j < dim; ++j) {
      data.features[i * dim + j] = means[label][j] + noise_rng.normal();
    }
  }
  return data;
}

DataSplit split_dataset(std::size_t n, double validation_fraction,
                        double test_fraction, std::uint64_t seed) {
  if (validation_fraction < 0 || test_fraction < 0 ||
      validation_fraction + test_fraction >= 1.0) {
    throw std::invalid_argument("invalid split fractions");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, "dataset-split");
  rng.shuffle(order);
  const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * n));
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * n));
  DataSplit split;
  split.validation.assign(order.begin(), order.begin() + n_val);
  split.test.assign(order.begin() + n_val, order.begin() + n_val + n_test);
  split.train.assign(order.begin() + n_val + n_test, order.end());
  return split;
}

std::vector<std::vector<std::size_t>> partition_dirichlet(
    std::span<const int> labels, std::size_t classes, std::size_t num_nodes,
    double alpha_dir, std::uint64_t seed) {
  if (num_nodes < 1) throw std::invalid_argument("num_nodes must be >= 1");
  if (!(alpha_dir > 0.0)) throw std::invalid_argument("alpha_dir must be > 0");

  Rng rng(seed, "dirichlet-partition");
  std::vector<std::vector<std::size_t>> pools(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    if (c >= classes) throw std::invalid_argument("label out of range");
    pools[c].push_back(i);
  }
  for (auto& pool : pools) rng.shuffle(pool);

  const std::size_t n = labels.size();
  std::vector<std::size_t> quota(num_nodes, n / num_nodes);
  for (std::size_t k = 0; k < n % num_nodes; ++k) ++quota[k];

  std::vector<std::size_t> node_order(num_nodes);
  std::iota(node_order.begin(), node_order.end(), 0);
  rng.shuffle(node_order);

  std::vector<std::vector<std::size_t>> shards(num_nodes);
  std::vector<double> carry(classes, 0.0);
  for (std::size_t node : node_order) {
    const std::size_t size = quota[node];
    // Dirichlet proportions via normalized gammas.
    std::vector<double> p(classes);
    double total = 0.0;
    for (double& v : p) {
      v = rng.gamma(alpha_dir);
      total += v;
    }
    if (!(total > 0.0)) {
      std::fill(p.begin(), p.end(), 0.0);
      p[rng.index(classes)] = 1.0;
      total = 1.0;
    }
    for (double& v : p) v /= total;

    // Largest-remainder rounding of p * size. The rounding error of each
    // class carries over to the next node so that near-uniform mixes do not
    // drain one class early.
    std::vector<std::size_t> want(classes);
    std::vector<double> exact(classes);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      exact[c] = std::max(0.0, p[c] * static_cast<double>(size) + carry[c]);
      want[c] = static_cast<std::size_t>(std::floor(exact[c]));
      assigned += want[c];
      remainders.emplace_back(exact[c] - std::floor(exact[c]), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned > size && r < 10 * classes; ++r) {
      // Carries can push the floor sum past the quota; trim the smallest.
      const std::size_t c = remainders[classes - 1 - r % classes].second;
      if (want[c] > 0) {
        --want[c];
        --assigned;
      }
    }
    for (std::size_t r = 0; assigned < size; ++r, ++assigned) {
      ++want[remainders[r % classes].second];
    }
    for (std::size_t c = 0; c < classes; ++c) {
      carry[c] = exact[c] - static_cast<double>(want[c]);
    }

    auto& shard = shards[node];
    std::size_t shortfall = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      const std::size_t take = std::min(want[c], pools[c].size());
      shortfall += want[c] - take;
      shard.insert(shard.end(), pools[c].end() - take, pools[c].end());
      pools[c].resize(pools[c].size() - take);
    }
    // Fill from the classes this node prefers most that still have examples.
    std::vector<std::size_t> by_pref(classes);
    std::iota(by_pref.begin(), by_pref.end(), 0);
    std::stable_sort(by_pref.begin(), by_pref.end(),
                     [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    for (std::size_t c : by_pref) {
      if (shortfall == 0) break;
      const std::size_t take = std::min(shortfall, pools[c].size());
      shard.insert(shard.end(), pools[c].end() - take, pools[c].end());
      pools[c].resize(pools[c].size() - take);
      shortfall -= take;
    }
    std::sort(shard.begin(), shard.end());
  }
  return shards;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void clip_in_place(std::span<double> g, double clip_norm) {
  if (!std::isfinite(clip_norm)) return;
  const double norm = l2_norm(g);
  if (norm > clip_norm) {
    const double scale = clip_norm / norm;
    for (double& v : g) v *= scale;
  }
}

namespace {

void logits_into(const ModelParams& model, std::span<const double> x,
                 std::span<double> out) {
  const std::size_t bias = model.classes * model.dim;
  for (std::size_t c = 0; c < model.classes; ++c) {
    const double* w = model.values.data() + c * model.dim;
    double z = model.values[bias + c];
    for (std::size_t j = 0; j < model.dim; ++j) z += w[j] * x[j];
    out[c] = z;
  }
}

void check_dims(const ModelParams& model, std::size_t dim) {
  if (model.dim != dim ||
      model.values.size() != model.classes * model.dim + model.classes) {
    throw std::invalid_argument("model/data dimension mismatch");
  }
}

// softmax(z) - onehot(label)
void softmax_error(const ModelParams& model, std::span<const double> x, int label,
                   std::span<double> err) {
  logits_into(model, x, err);
  const double zmax = *std::max_element(err.begin(), err.end());
  double total = 0.0;
  for (double& v : err) {
    v = std::exp(v - zmax);
    total += v;
  }
  for (std::size_t c = 0; c < model.classes; ++c) {
    err[c] = err[c] / total - (static_cast<std::size_t>(label) == c ? 1.0 : 0.0);
  }
}


}  // namespace

void example_gradient(const ModelParams& model, std::span<const double> x,
                      int label, std::span<double> grad) {
  thread_local std::vector<double> err;
  err.resize(model.classes);
  softmax_error(model, x, label, err);
  const std::size_t bias = model.classes * model.dim;
  for (std::size_t c = 0; c < model.classes; ++c) {
    double* g = grad.data() + c * model.dim;
    for (std::size_t j = 0; j < model.dim; ++j) g[j] = err[c] * x[j];
    grad[bias + c] = err[c];
  }
}

TrainOutcome local_train_dpsgd(const ModelParams& model,
                               const ToyDataset& shard, const DPConfig& dp,
                               Rng& rng) {
  dp.validate();
  if (shard.size() == 0) throw std::invalid_argument("empty shard");
  check_dims(model, shard.dim);

  TrainOutcome out{model, 0, 0.0};
  const std::size_t params = model.size();
  std::vector<double> batch_sum(params), noise(params), err(model.classes);
  const std::size_t bias = model.classes * model.dim;
  std::vector<std::size_t> order(shard.size());
  std::iota(order.begin(), order.end(), 0);
  const double noise_std = dp.noise_multiplier * dp.clip_norm;

  for (std::size_t epoch = 0; epoch < dp.local_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += dp.batch_size) {
      const std::size_t end = std::min(order.size(), start + dp.batch_size);
      std::fill(batch_sum.begin(), batch_sum.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const auto x = shard.row(i);
        // The per-example gradient is err (outer) [x, 1], so its norm
        // factorises and clipping needs no materialised gradient.
        softmax_error(out.model, x, shard.labels[i], err);
        double xx = 1.0;
        for (double v : x) xx += v * v;
        double ee = 0.0;
        for (double e : err) ee += e * e;
        const double norm = std::sqrt(ee * xx);
        const double factor = norm > dp.clip_norm ? dp.clip_norm / norm : 1.0;
        out.max_clipped_norm = std::max(out.max_clipped_norm, norm * factor);
        for (std::size_t c = 0; c < model.classes; ++c) {
          const double g = factor * err[c];
          double* dst = batch_sum.data() + c * model.dim;
          for (std::size_t j = 0; j < model.dim; ++j) dst[j] += g * x[j];
          batch_sum[bias + c] += g;
        }
      }
      if (noise_std > 0.0) {
        rng.fill_normal(noise, noise_std);
        for (std::size_t p = 0; p < params; ++p) batch_sum[p] += noise[p];
      }
      const double scale = dp.learning_rate / static_cast<double>(end - start);
      for (std::size_t p = 0; p < params; ++p) {
        out.model.values[p] -= scale * batch_sum[p];
        if (!std::isfinite(out.model.values[p])) {
          throw std::runtime_error("non-finite parameter after DP-SGD step " +
                                   std::to_string(out.steps));
        }
      }
      ++out.steps;
    }
  }
  return out;
}

int predict(const ModelParams& model, std::span<const double> x) {
  std::vector<double> z(model.classes);
  logits_into(model, x, z);
  int best = 0;
  for (std::size_t c = 1; c < model.classes; ++c) {
    if (z[c] > z[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

double evaluate(const ModelParams& model, const ToyDataset& examples) {
  if (examples.size() == 0) throw std::invalid_argument("no examples");
  check_dims(model, examples.dim);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (predict(model, examples.row(i)) == examples.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

ModelParams train_central(const ToyDataset& data, std::size_t epochs,
                          double learning_rate) {
  ModelParams model = ModelParams::zeros(data.classes, data.dim);
  std::vector<double> grad(model.size()), total(model.size());
  const double scale = learning_rate / static_cast<double>(data.size());
  for (std::size_t e = 0; e < epochs; ++e) {
    std::fill(total.begin(), total.end(), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      example_gradient(model, data.row(i), data.labels[i], grad);
      for (std::size_t p = 0; p < grad.size(); ++p) total[p] += grad[p];
    }
    for (std::size_t p = 0; p < total.size(); ++p) {
      model.values[p] -= scale * total[p];
    }
  }
  return model;
}

}  // namespace nexus::learner
