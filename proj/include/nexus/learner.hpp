#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "nexus/random.hpp"

namespace nexus::learner {

using Vector = std::vector<double>;

/// Row-major n x d feature matrix with integer class labels.
struct ToyDataset {
  std::size_t classes = 10;
  std::size_t dim = 32;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
  /// Copies the listed rows into a new dataset.
  ToyDataset subset(std::span<const std::size_t> indices) const;
};

/// Multinomial logistic regression: classes x dim weights followed by
/// `classes` biases, stored flat.
struct ModelParams {
  std::size_t classes = 10;
  std::size_t dim = 32;
  Vector values;

  static ModelParams zeros(std::size_t classes, std::size_t dim);
  std::size_t size() const { return values.size(); }
  bool operator==(const ModelParams&) const = default;
};

/// Sentinel for "no clipping".
inline constexpr double kNoClip = std::numeric_limits<double>::infinity();

struct DPConfig {
  double clip_norm = 1.0;
  double noise_multiplier = 1.1;
  std::size_t batch_size = 4;
  std::size_t local_epochs = 5;
  double delta = 1e-5;
  double learning_rate = 0.05;

  void validate() const;
};

ToyDataset generate_dataset(std::size_t classes, std::size_t dim,
                            std::size_t n, double class_separation,
                            std::uint64_t seed);

/// Splits indices 0..n-1 into (train, validation, test) with the given
/// validation and test fractions, shuffled by `seed`.
struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};
DataSplit split_dataset(std::size_t n, double validation_fraction,
                        double test_fraction, std::uint64_t seed);

/// Label-skewed balanced partition: every node draws class proportions from
/// Dirichlet(alpha_dir) and receives floor/ceil(n/num_nodes) examples whose
/// class mix follows those proportions as closely as availability allows.
/// Returns, per node, indices into `labels_of` (i.e. positions in `pool`).
std::vector<std::vector<std::size_t>> partition_dirichlet(
    std::span<const int> labels, std::size_t classes, std::size_t num_nodes,
    double alpha_dir, std::uint64_t seed);

double l2_norm(std::span<const double> v);

/// Scales `g` in place so that its l2 norm is at most `clip_norm`.
void clip_in_place(std::span<double> g, double clip_norm);

/// Per-example gradient of the cross-entropy loss, written into `grad`.
void example_gradient(const ModelParams& model, std::span<const double> x,
                      int label, std::span<double> grad);

struct TrainOutcome {
  ModelParams model;
  std::size_t steps = 0;
  /// Largest per-example gradient norm after clipping (diagnostic).
  double max_clipped_norm = 0.0;
};

/// Minibatch DP-SGD over `local_epochs` passes. Throws std::runtime_error if a
/// gradient or parameter becomes non-finite.
TrainOutcome local_train_dpsgd(const ModelParams& model,
                               const ToyDataset& shard, const DPConfig& dp,
                               Rng& rng);

/// Argmax accuracy; ties go to the lowest class index.
double evaluate(const ModelParams& model, const ToyDataset& examples);
int predict(const ModelParams& model, std::span<const double> x);

/// Full-batch gradient descent on the whole dataset. Test and oracle helper
/// for "central training" baselines.
ModelParams train_central(const ToyDataset& data, std::size_t epochs,
                          double learning_rate);

}  // namespace nexus::learner
