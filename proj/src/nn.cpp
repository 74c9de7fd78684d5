#include "mirrorquant/nn.hpp"

#include <algorithm>
#include <cmath>

namespace mirrorquant {

MlpModel MlpModel::zeros(const std::vector<long>& dims) {
  if (dims.size() < 2) throw ConfigError("arch: need at least input and output dims");
  for (long d : dims)
    if (d <= 0) throw ConfigError("arch: dims must be positive");
  MlpModel m;
  m.dims = dims;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer layer;
    layer.W = Matrix(dims[i + 1], dims[i]);
    layer.b.assign(static_cast<std::size_t>(dims[i + 1]), 0.0);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

long MlpModel::param_count() const {
  long n = 0;
  for (const auto& l : layers) n += l.W.rows * l.W.cols + static_cast<long>(l.b.size());
  return n;
}

std::vector<double> MlpModel::params() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(param_count()));
  for (const auto& l : layers) {
    out.insert(out.end(), l.W.a.begin(), l.W.a.end());
    out.insert(out.end(), l.b.begin(), l.b.end());
  }
  return out;
}

void MlpModel::set_params(const std::vector<double>& w) {
  if (w.size() != static_cast<std::size_t>(param_count()))
    throw ConfigError("set_params: parameter count mismatch");
  std::size_t pos = 0;
  for (auto& l : layers) {
    std::copy(w.begin() + pos, w.begin() + pos + l.W.a.size(), l.W.a.begin());
    pos += l.W.a.size();
    std::copy(w.begin() + pos, w.begin() + pos + l.b.size(), l.b.begin());
    pos += l.b.size();
  }
}

Matrix forward(const MlpModel& model, const Matrix& batch, ForwardCache* cache) {
  if (batch.cols != model.dims.front())
    throw ConfigError("forward: batch column count does not match the input dim");
  if (cache) {
    cache->input = batch;
    cache->pre.clear();
    cache->post.clear();
  }
  Matrix x = batch;
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    const DenseLayer& l = model.layers[li];
    Matrix z(x.rows, l.W.rows);
    for (long i = 0; i < x.rows; ++i) {
      for (long o = 0; o < l.W.rows; ++o) {
        double acc = l.b[static_cast<std::size_t>(o)];
        for (long j = 0; j < l.W.cols; ++j) acc += x.at(i, j) * l.W.at(o, j);
        z.at(i, o) = acc;
      }
    }
    if (cache) cache->pre.push_back(z);
    bool hidden = li + 1 < model.layers.size();
    if (hidden) {
      for (double& v : z.a) v = v > 0.0 ? v : 0.0;
    }
    if (cache) cache->post.push_back(z);
    x = std::move(z);
  }
  return x;
}

std::pair<double, Matrix> cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(logits.rows) != labels.size())
    throw ConfigError("cross_entropy: row/label count mismatch");
  double loss = 0.0;
  Matrix dlogits(logits.rows, logits.cols);
  double inv_n = 1.0 / static_cast<double>(logits.rows);
  for (long i = 0; i < logits.rows; ++i) {
    int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols) throw ConfigError("cross_entropy: label out of range");
    double mx = logits.at(i, 0);
    for (long j = 1; j < logits.cols; ++j) mx = std::max(mx, logits.at(i, j));
    double sum = 0.0;
    for (long j = 0; j < logits.cols; ++j) sum += std::exp(logits.at(i, j) - mx);
    double log_sum = std::log(sum) + mx;
    loss += (log_sum - logits.at(i, y)) * inv_n;
    for (long j = 0; j < logits.cols; ++j) {
      double p = std::exp(logits.at(i, j) - mx) / sum;
      dlogits.at(i, j) = (p - (j == y ? 1.0 : 0.0)) * inv_n;
    }
  }
  return {loss, dlogits};
}

Gradients backward(const MlpModel& model, const ForwardCache& cache, const Matrix& dlogits) {
  if (cache.pre.size() != model.layers.size())
    throw ConfigError("backward: cache does not match the model (stale cache?)");
  if (dlogits.rows != cache.input.rows || dlogits.cols != model.dims.back())
    throw ConfigError("backward: dlogits shape mismatch");

  Gradients grads;
  grads.layers.resize(model.layers.size());
  Matrix delta = dlogits;
  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const DenseLayer& l = model.layers[li];
    const Matrix& input = li == 0 ? cache.input : cache.post[li - 1];

    DenseLayer g;
    g.W = Matrix(l.W.rows, l.W.cols);
    g.b.assign(l.b.size(), 0.0);
    for (long o = 0; o < l.W.rows; ++o) {
      for (long j = 0; j < l.W.cols; ++j) {
        double acc = 0.0;
        for (long i = 0; i < delta.rows; ++i) acc += delta.at(i, o) * input.at(i, j);
        g.W.at(o, j) = acc;
      }
      double acc = 0.0;
      for (long i = 0; i < delta.rows; ++i) acc += delta.at(i, o);
      g.b[static_cast<std::size_t>(o)] = acc;
    }
    grads.layers[li] = std::move(g);

    if (li > 0) {
      Matrix prev(delta.rows, l.W.cols);
      for (long i = 0; i < delta.rows; ++i) {
        for (long j = 0; j < l.W.cols; ++j) {
          double acc = 0.0;
          for (long o = 0; o < l.W.rows; ++o) acc += delta.at(i, o) * l.W.at(o, j);
          // ReLU subgradient; 0 at exactly 0
          prev.at(i, j) = cache.pre[li - 1].at(i, j) > 0.0 ? acc : 0.0;
        }
      }
      delta = std::move(prev);
    }
  }
  return grads;
}

std::vector<double> Gradients::flatten() const {
  std::vector<double> out;
  for (const auto& l : layers) {
    out.insert(out.end(), l.W.a.begin(), l.W.a.end());
    out.insert(out.end(), l.b.begin(), l.b.end());
  }
  return out;
}

double accuracy(const Matrix& logits, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(logits.rows) != labels.size())
    throw ConfigError("accuracy: row/label count mismatch");
  long correct = 0;
  for (long i = 0; i < logits.rows; ++i) {
    long arg = 0;
    for (long j = 1; j < logits.cols; ++j)
      if (logits.at(i, j) > logits.at(i, arg)) arg = j;
    if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows);
}

Dataset generate_dataset(const std::string& kind, long n, double noise, std::uint64_t seed) {
  if (n < 10) throw ConfigError("dataset.n: need n >= 10");
  Rng rng(seed);
  Matrix x(n, 2);
  std::vector<int> y(static_cast<std::size_t>(n));

  if (kind == "xor-blobs") {
    for (long i = 0; i < n; ++i) {
      double cx = rng.uniform() < 0.5 ? -1.0 : 1.0;
      double cy = rng.uniform() < 0.5 ? -1.0 : 1.0;
      x.at(i, 0) = cx + noise * rng.normal();
      x.at(i, 1) = cy + noise * rng.normal();
      y[static_cast<std::size_t>(i)] = (cx > 0.0) != (cy > 0.0) ? 1 : 0;
    }
  } else if (kind == "two-moons-like") {
    for (long i = 0; i < n; ++i) {
      int label = rng.uniform() < 0.5 ? 0 : 1;
      double theta = rng.uniform() * M_PI;
      double px, py;
      if (label == 0) {
        px = std::cos(theta);
        py = std::sin(theta);
      } else {
        px = 1.0 - std::cos(theta);
        py = 0.5 - std::sin(theta);
      }
      x.at(i, 0) = px + noise * rng.normal();
      x.at(i, 1) = py + noise * rng.normal();
      y[static_cast<std::size_t>(i)] = label;
    }
  } else if (kind == "gaussian-blobs") {
    for (long i = 0; i < n; ++i) {
      int label = rng.uniform() < 0.5 ? 0 : 1;
      double c = label == 0 ? -1.0 : 1.0;
      x.at(i, 0) = c + noise * rng.normal();
      x.at(i, 1) = c + noise * rng.normal();
      y[static_cast<std::size_t>(i)] = label;
    }
  } else {
    throw ConfigError("dataset.kind: unknown kind '" + kind + "'");
  }

  // deterministic shuffled 80/20 split
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  long n_train = (n * 8) / 10;

  Dataset ds;
  ds.kind = kind;
  ds.seed = seed;
  ds.classes = 2;
  ds.x_train = Matrix(n_train, 2);
  ds.x_test = Matrix(n - n_train, 2);
  for (long i = 0; i < n; ++i) {
    std::size_t src = order[static_cast<std::size_t>(i)];
    if (i < n_train) {
      ds.x_train.at(i, 0) = x.at(static_cast<long>(src), 0);
      ds.x_train.at(i, 1) = x.at(static_cast<long>(src), 1);
      ds.y_train.push_back(y[src]);
    } else {
      long r = i - n_train;
      ds.x_test.at(r, 0) = x.at(static_cast<long>(src), 0);
      ds.x_test.at(r, 1) = x.at(static_cast<long>(src), 1);
      ds.y_test.push_back(y[src]);
    }
  }
  return ds;
}

}  // namespace mirrorquant
