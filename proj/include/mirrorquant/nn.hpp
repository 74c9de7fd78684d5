#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mirrorquant/common.hpp"

namespace mirrorquant {

/// Dense row-major matrix; no external linear-algebra dependency so that
/// every reduction order stays explicit and deterministic.
struct Matrix {
  long rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(long r, long c) : rows(r), cols(c), a(static_cast<std::size_t>(r * c), 0.0) {}

  double& at(long i, long j) { return a[static_cast<std::size_t>(i * cols + j)]; }
  double at(long i, long j) const { return a[static_cast<std::size_t>(i * cols + j)]; }
};

struct DenseLayer {
  Matrix W;               // out x in
  std::vector<double> b;  // out
};

/// Multilayer perceptron: affine layers with ReLU on hidden layers and
/// identity on the output layer.
struct MlpModel {
  std::vector<long> dims;          // e.g. {2, 16, 16, 2}
  std::vector<DenseLayer> layers;

  static MlpModel zeros(const std::vector<long>& dims);

  long param_count() const;

  /// Flat parameter layout: for each layer, W row-major then b.
  std::vector<double> params() const;
  void set_params(const std::vector<double>& w);
};

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;   // pre-activations per layer
  std::vector<Matrix> post;  // post-activations per layer (post.back() = logits)
};

/// Forward pass; batch is n x input_dim. Pass a cache to enable backward().
Matrix forward(const MlpModel& model, const Matrix& batch, ForwardCache* cache = nullptr);

/// Mean softmax cross-entropy with max-subtraction.
/// Returns the loss and dlogits = (softmax - onehot) / batch_size.
std::pair<double, Matrix> cross_entropy(const Matrix& logits, const std::vector<int>& labels);

struct Gradients {
  std::vector<DenseLayer> layers;  // same shapes as the model

  std::vector<double> flatten() const;
};

/// Exact reverse-mode gradients for the affine+ReLU chain.
/// ReLU subgradient at exactly 0 is taken as 0.
Gradients backward(const MlpModel& model, const ForwardCache& cache, const Matrix& dlogits);

/// Fraction of rows whose argmax logit equals the label.
double accuracy(const Matrix& logits, const std::vector<int>& labels);

struct Dataset {
  std::string kind;
  std::uint64_t seed = 0;
  int classes = 2;
  Matrix x_train, x_test;
  std::vector<int> y_train, y_test;
};

/// Deterministic 2-d toy datasets with an 80/20 train/test split:
///  - "xor-blobs":       four Gaussian clusters at (+-1, +-1), XOR labels
///  - "two-moons-like":  two interleaving half-circles
///  - "gaussian-blobs":  two Gaussian clusters at (-1,-1) and (1,1)
/// noise is the Gaussian standard deviation. Throws ConfigError for unknown
/// kinds or n < 10.
Dataset generate_dataset(const std::string& kind, long n, double noise, std::uint64_t seed);

}  // namespace mirrorquant
