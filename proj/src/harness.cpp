#include "mirrorquant/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

namespace mirrorquant {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& path) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key()))
      throw ConfigError("config: unknown key '" + (path.empty() ? "" : path + ".") +
                        item.key() + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

double full_eval(MlpModel& model, const Matrix& x, const std::vector<int>& y, double* loss_out) {
  Matrix logits = forward(model, x);
  if (loss_out) *loss_out = cross_entropy(logits, y).first;
  return accuracy(logits, y);
}

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

}  // namespace

const char* to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::MdClosed: return "md_closed";
    case OptimizerKind::MdStable: return "md_stable";
    case OptimizerKind::GdProj: return "gd_proj";
    case OptimizerKind::BcSte: return "bc_ste";
    case OptimizerKind::Pgd: return "pgd";
    case OptimizerKind::FloatRef: return "float_ref";
  }
  return "?";
}

OptimizerKind optimizer_kind_from_string(const std::string& name) {
  if (name == "md_closed") return OptimizerKind::MdClosed;
  if (name == "md_stable") return OptimizerKind::MdStable;
  if (name == "gd_proj") return OptimizerKind::GdProj;
  if (name == "bc_ste") return OptimizerKind::BcSte;
  if (name == "pgd") return OptimizerKind::Pgd;
  if (name == "float_ref") return OptimizerKind::FloatRef;
  throw ConfigError("unknown optimizer kind: " + name);
}

void TrainConfig::validate() const {
  levels.validate();
  eta.validate();
  beta.validate();
  if (epochs <= 0) throw ConfigError("epochs: must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size: must be positive");
  if (log_interval <= 0) throw ConfigError("log_interval: must be positive");
  if (dataset.n < 10) throw ConfigError("dataset.n: need n >= 10");
  if (!(dataset.noise >= 0.0)) throw ConfigError("dataset.noise: must be >= 0");
  if (arch.size() < 2 || arch.front() != 2 || arch.back() != 2)
    throw ConfigError("arch: shipped datasets are 2-d binary problems; need 2 -> ... -> 2");
  if (!(adam.b1 > 0.0 && adam.b1 < 1.0 && adam.b2 > 0.0 && adam.b2 < 1.0))
    throw ConfigError("adam: b1 and b2 must lie in (0, 1)");
  if (!(adam.eps_hat > 0.0)) throw ConfigError("adam.eps: must be > 0");

  if (space == Space::U) {
    if (projection != ProjectionKind::Softmax)
      throw ConfigError("space=u requires projection=softmax");
    if (optimizer != OptimizerKind::MdClosed && optimizer != OptimizerKind::MdStable &&
        optimizer != OptimizerKind::GdProj)
      throw ConfigError("space=u supports md_closed, md_stable, or gd_proj");
  } else {
    if (projection == ProjectionKind::Softmax)
      throw ConfigError("projection=softmax requires space=u");
  }
  if (optimizer == OptimizerKind::BcSte && projection != ProjectionKind::Sign)
    throw ConfigError("optimizer=bc_ste requires projection=sign");
  if (projection == ProjectionKind::Sign && optimizer != OptimizerKind::BcSte)
    throw ConfigError("projection=sign is only used by optimizer=bc_ste");
  if (optimizer == OptimizerKind::MdClosed && space == Space::W &&
      projection != ProjectionKind::Tanh)
    throw ConfigError("optimizer=md_closed in w-space has a closed form for tanh only");

  // level sets consistent with the projection image
  bool uses_projection = optimizer == OptimizerKind::MdClosed ||
                         optimizer == OptimizerKind::MdStable ||
                         optimizer == OptimizerKind::GdProj ||
                         optimizer == OptimizerKind::BcSte;
  if (uses_projection && space == Space::W) {
    if (projection == ProjectionKind::Tanh || projection == ProjectionKind::Sign) {
      if (levels.levels != std::vector<double>{-1.0, 1.0})
        throw ConfigError("levels: tanh/sign projections quantize to {-1, 1}");
    } else if (projection == ProjectionKind::ShiftedTanh) {
      if (levels.levels != std::vector<double>{-1.0, 0.0, 1.0})
        throw ConfigError("levels: shifted_tanh quantizes to {-1, 0, 1}");
    }
  }
}

TrainConfig TrainConfig::from_json(const json& j) {
  reject_unknown_keys(j, {"space", "projection", "optimizer", "levels", "eta", "beta", "adam",
                          "epochs", "batch_size", "seed", "dataset", "arch", "log_interval",
                          "out"},
                      "");
  TrainConfig c;
  if (j.contains("space")) {
    std::string s = j.at("space").get<std::string>();
    if (s == "w") c.space = Space::W;
    else if (s == "u") c.space = Space::U;
    else throw ConfigError("config: space must be \"w\" or \"u\"");
  }
  if (j.contains("projection"))
    c.projection = projection_kind_from_string(j.at("projection").get<std::string>());
  if (j.contains("optimizer"))
    c.optimizer = optimizer_kind_from_string(j.at("optimizer").get<std::string>());
  if (j.contains("levels")) c.levels.levels = j.at("levels").get<std::vector<double>>();
  if (j.contains("eta")) {
    const json& e = j.at("eta");
    reject_unknown_keys(e, {"eta0", "lr_scale", "lr_interval"}, "eta");
    c.eta.eta0 = get_or(e, "eta0", c.eta.eta0);
    c.eta.lr_scale = get_or(e, "lr_scale", c.eta.lr_scale);
    c.eta.lr_interval = get_or(e, "lr_interval", c.eta.lr_interval);
  }
  if (j.contains("beta")) {
    const json& b = j.at("beta");
    reject_unknown_keys(b, {"beta0", "scale", "interval", "cap"}, "beta");
    c.beta.beta0 = get_or(b, "beta0", c.beta.beta0);
    c.beta.scale = get_or(b, "scale", c.beta.scale);
    c.beta.interval = get_or(b, "interval", c.beta.interval);
    c.beta.cap = get_or(b, "cap", c.beta.cap);
  }
  if (j.contains("adam")) {
    const json& a = j.at("adam");
    reject_unknown_keys(a, {"enabled", "b1", "b2", "eps", "on_dual"}, "adam");
    c.adam.enabled = get_or(a, "enabled", c.adam.enabled);
    c.adam.b1 = get_or(a, "b1", c.adam.b1);
    c.adam.b2 = get_or(a, "b2", c.adam.b2);
    c.adam.eps_hat = get_or(a, "eps", c.adam.eps_hat);
    c.adam.on_dual = get_or(a, "on_dual", c.adam.on_dual);
  }
  c.epochs = get_or(j, "epochs", c.epochs);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.seed = get_or(j, "seed", c.seed);
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    reject_unknown_keys(d, {"kind", "n", "noise", "seed"}, "dataset");
    c.dataset.kind = get_or<std::string>(d, "kind", c.dataset.kind);
    c.dataset.n = get_or(d, "n", c.dataset.n);
    c.dataset.noise = get_or(d, "noise", c.dataset.noise);
    c.dataset.seed = get_or(d, "seed", c.dataset.seed);
  }
  if (j.contains("arch")) c.arch = j.at("arch").get<std::vector<long>>();
  c.log_interval = get_or(j, "log_interval", c.log_interval);
  c.out_dir = get_or<std::string>(j, "out", c.out_dir);
  c.validate();
  return c;
}

json TrainConfig::to_json() const {
  json j;
  j["space"] = space == Space::U ? "u" : "w";
  j["projection"] = to_string(projection);
  j["optimizer"] = to_string(optimizer);
  j["levels"] = levels.levels;
  j["eta"] = {{"eta0", eta.eta0}, {"lr_scale", eta.lr_scale}, {"lr_interval", eta.lr_interval}};
  j["beta"] = {{"beta0", beta.beta0}, {"scale", beta.scale}, {"interval", beta.interval},
               {"cap", beta.cap}};
  j["adam"] = {{"enabled", adam.enabled}, {"b1", adam.b1}, {"b2", adam.b2},
               {"eps", adam.eps_hat}, {"on_dual", adam.on_dual}};
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["seed"] = seed;
  j["dataset"] = {{"kind", dataset.kind}, {"n", dataset.n}, {"noise", dataset.noise},
                  {"seed", dataset.seed}};
  j["arch"] = arch;
  j["log_interval"] = log_interval;
  if (!out_dir.empty()) j["out"] = out_dir;
  return j;
}

double frac_quantized(const std::vector<double>& params, const QuantLevels& levels, double tol) {
  if (params.empty()) return 0.0;
  std::size_t hits = 0;
  for (double w : params)
    if (std::abs(w - levels.nearest(w)) < tol) ++hits;
  return static_cast<double>(hits) / static_cast<double>(params.size());
}

double frac_quantized_u(const std::vector<double>& u, std::size_t d, double tol) {
  if (u.empty() || d == 0 || u.size() % d != 0) return 0.0;
  std::size_t m = u.size() / d;
  std::size_t hits = 0;
  for (std::size_t j = 0; j < m; ++j) {
    double mx = u[j * d];
    for (std::size_t l = 1; l < d; ++l) mx = std::max(mx, u[j * d + l]);
    if (mx > 1.0 - tol) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(m);
}

std::vector<double> USpaceBind::materialize(const std::vector<double>& u) const {
  std::size_t d = q.size();
  std::size_t m = u.size() / d;
  std::vector<double> w(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (std::size_t l = 0; l < d; ++l) acc += u[j * d + l] * q[l];
    w[j] = acc;
  }
  return w;
}

std::vector<double> USpaceBind::chain(const std::vector<double>& g_w) const {
  std::size_t d = q.size();
  std::vector<double> g(g_w.size() * d);
  for (std::size_t j = 0; j < g_w.size(); ++j)
    for (std::size_t l = 0; l < d; ++l) g[j * d + l] = g_w[j] * q[l];
  return g;
}

const char* const kRecordsCsvHeader =
    "iter,epoch,train_loss,train_acc,test_acc,beta,eta,frac_quantized,grad_norm,"
    "quantized_test_acc";

void write_records_csv(const std::string& path, const std::vector<TrainRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << kRecordsCsvHeader << "\n";
  for (const auto& r : records) {
    out << r.iter << ',' << r.epoch << ',' << fmt_double(r.train_loss) << ','
        << fmt_double(r.train_acc) << ',' << fmt_double(r.test_acc) << ','
        << fmt_double(r.beta) << ',' << fmt_double(r.eta) << ','
        << fmt_double(r.frac_quantized) << ',' << fmt_double(r.grad_norm) << ','
        << fmt_double(r.quantized_test_acc) << "\n";
  }
}

TrainResult train(const TrainConfig& config) {
  config.validate();

  Dataset ds = generate_dataset(config.dataset.kind, config.dataset.n, config.dataset.noise,
                                config.dataset.seed);
  MlpModel model = MlpModel::zeros(config.arch);
  const long m = model.param_count();
  const std::size_t d = config.levels.size();
  Rng rng(config.seed);

  OptimizerState state;
  state.projection = Projection{config.projection, config.beta.beta0, static_cast<int>(d)};
  state.beta = anneal_beta(config.beta, 0);

  const bool u_space = config.space == Space::U;
  const bool has_dual = config.optimizer == OptimizerKind::MdStable ||
                        config.optimizer == OptimizerKind::GdProj ||
                        config.optimizer == OptimizerKind::BcSte;
  USpaceBind bind{config.levels.levels};

  if (u_space) {
    // Near-uniform rows: exact 1/d rows put every materialized weight at 0,
    // which is a stationary saddle of a zero ReLU network, so break the tie
    // with the same small dual noise used in w-space.
    std::vector<double> init(static_cast<std::size_t>(m) * d);
    for (double& v : init) v = rng.uniform(-0.05, 0.05);
    state.primal.assign(init.size(), 0.0);
    if (has_dual) {
      state.dual = init;
      state.project();
    } else {
      std::vector<double> row(d);
      for (std::size_t j = 0; j + d <= init.size(); j += d) {
        row.assign(init.begin() + j, init.begin() + j + d);
        std::vector<double> p = softmax_project(row, state.beta);
        std::copy(p.begin(), p.end(), state.primal.begin() + j);
      }
    }
  } else {
    std::vector<double> init(static_cast<std::size_t>(m));
    for (double& v : init) v = rng.uniform(-0.05, 0.05);
    switch (config.optimizer) {
      case OptimizerKind::MdStable:
      case OptimizerKind::GdProj:
      case OptimizerKind::BcSte:
        state.dual = init;
        state.primal.assign(init.size(), 0.0);
        state.project();
        break;
      case OptimizerKind::MdClosed:
        // closed form starts from the projected random duals, then tracks the primal only
        state.primal = tanh_project(init, state.beta);
        break;
      case OptimizerKind::Pgd:
      case OptimizerKind::FloatRef:
        state.primal = init;
        break;
    }
  }

  const long n_train = ds.x_train.rows;
  const long iters_per_epoch = std::max<long>(1, n_train / config.batch_size);
  const long total_iters = config.epochs * iters_per_epoch;
  const long batch = std::min(config.batch_size, n_train);

  std::vector<std::size_t> order(static_cast<std::size_t>(n_train));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  result.iters = total_iters;
  double best_acc = -1.0;
  std::vector<double> best_primal, best_dual;
  double best_beta = state.beta;

  Matrix xb(batch, 2);
  std::vector<int> yb(static_cast<std::size_t>(batch));

  auto adam_maybe = [&](const std::vector<double>& g) {
    if (!config.adam.enabled) return g;
    return adam_precondition(g, state.adam, config.adam.b1, config.adam.b2, config.adam.eps_hat);
  };

  for (long k = 0; k < total_iters; ++k) {
    if (k % iters_per_epoch == 0) rng.shuffle(order);
    const double beta_k = anneal_beta(config.beta, k);
    const double eta_k = eta_at(config.eta, k);
    state.beta = beta_k;
    state.projection.beta = beta_k;
    if (has_dual) state.project();  // primal = P_{beta_k}(dual) before taking gradients

    std::vector<double> w_net = u_space ? bind.materialize(state.primal) : state.primal;
    model.set_params(w_net);

    long off = (k % iters_per_epoch) * batch;
    for (long i = 0; i < batch; ++i) {
      std::size_t src = order[static_cast<std::size_t>((off + i) % n_train)];
      xb.at(i, 0) = ds.x_train.at(static_cast<long>(src), 0);
      xb.at(i, 1) = ds.x_train.at(static_cast<long>(src), 1);
      yb[static_cast<std::size_t>(i)] = ds.y_train[src];
    }

    ForwardCache cache;
    Matrix logits = forward(model, xb, &cache);
    auto [loss, dlogits] = cross_entropy(logits, yb);
    if (!std::isfinite(loss))
      throw std::runtime_error("train: loss diverged (NaN/inf) at iteration " +
                               std::to_string(k));
    std::vector<double> g_w = backward(model, cache, dlogits).flatten();

    if (k % config.log_interval == 0 || k == total_iters - 1) {
      TrainRecord rec;
      rec.iter = k;
      rec.epoch = k / iters_per_epoch;
      rec.train_acc = full_eval(model, ds.x_train, ds.y_train, &rec.train_loss);
      rec.test_acc = full_eval(model, ds.x_test, ds.y_test, nullptr);
      rec.beta = beta_k;
      rec.eta = eta_k;
      rec.grad_norm = l2_norm(g_w);
      rec.frac_quantized = u_space ? frac_quantized_u(state.primal, d)
                                   : frac_quantized(state.primal, config.levels);
      std::vector<double> q = finalize_quantize(state, config.levels, config.space);
      MlpModel probe = model;
      probe.set_params(q);
      rec.quantized_test_acc = full_eval(probe, ds.x_test, ds.y_test, nullptr);
      result.records.push_back(rec);

      if (rec.test_acc >= best_acc) {
        best_acc = rec.test_acc;
        best_primal = state.primal;
        best_dual = state.dual;
        best_beta = beta_k;
        result.best_iter = k;
      }
    }

    std::vector<double> g = u_space ? bind.chain(g_w) : g_w;

    switch (config.optimizer) {
      case OptimizerKind::MdStable:
        stable_md_step(state, adam_maybe(g), eta_k);
        break;
      case OptimizerKind::MdClosed: {
        std::vector<double> gh = adam_maybe(g);
        if (u_space) {
          std::vector<double> row(d), grow(d);
          for (std::size_t j = 0; j + d <= state.primal.size(); j += d) {
            row.assign(state.primal.begin() + j, state.primal.begin() + j + d);
            grow.assign(gh.begin() + j, gh.begin() + j + d);
            std::vector<double> next = md_softmax_step(row, grow, eta_k, beta_k);
            std::copy(next.begin(), next.end(), state.primal.begin() + j);
          }
        } else {
          state.primal = md_tanh_step(state.primal, gh, eta_k, beta_k);
        }
        state.step += 1;
        break;
      }
      case OptimizerKind::GdProj:
        if (config.adam.on_dual) {
          // precondition the dual-space direction g .* J instead of g
          std::vector<double> dir(g.size());
          if (config.projection == ProjectionKind::Softmax) {
            std::vector<double> row(d);
            for (std::size_t j = 0; j + d <= state.dual.size(); j += d) {
              row.assign(state.dual.begin() + j, state.dual.begin() + j + d);
              std::vector<double> jac = softmax_diag_jacobian(row, beta_k);
              for (std::size_t l = 0; l < d; ++l) dir[j + l] = g[j + l] * jac[l];
            }
          } else {
            for (std::size_t i = 0; i < g.size(); ++i)
              dir[i] = g[i] * state.projection.jacobian_scalar(state.dual[i]);
          }
          stable_md_step(state, adam_maybe(dir), eta_k);
        } else {
          gd_proj_step(state, adam_maybe(g), eta_k);
        }
        break;
      case OptimizerKind::BcSte:
        bc_ste_step(state, adam_maybe(g), eta_k);
        break;
      case OptimizerKind::Pgd:
        state.primal = pgd_step(state.primal, adam_maybe(g), eta_k, config.levels.lo(),
                                config.levels.hi());
        state.step += 1;
        break;
      case OptimizerKind::FloatRef: {
        std::vector<double> gh = adam_maybe(g);
        for (std::size_t i = 0; i < state.primal.size(); ++i)
          state.primal[i] -= eta_k * gh[i];
        state.step += 1;
        break;
      }
    }
  }

  result.end_state = state;
  result.beta_final = anneal_beta(config.beta, total_iters - 1);
  result.best_test_acc = best_acc;

  // Selected (best-validation) state, rounded to exact levels.
  OptimizerState best_state = state;
  best_state.primal = best_primal;
  best_state.dual = best_dual;
  best_state.beta = best_beta;
  if (config.optimizer == OptimizerKind::FloatRef) {
    result.final_params = best_primal;
  } else {
    result.final_params = finalize_quantize(best_state, config.levels, config.space);
  }
  model.set_params(result.final_params);
  result.model = model;
  result.final_quantized_acc = full_eval(model, ds.x_test, ds.y_test, nullptr);

  json histogram = json::object();
  {
    std::vector<double> q = config.optimizer == OptimizerKind::FloatRef
                                ? finalize_quantize_w(best_primal, config.levels)
                                : result.final_params;
    for (double level : config.levels.levels) {
      long count = static_cast<long>(std::count(q.begin(), q.end(), level));
      histogram[fmt_double(level)] = count;
    }
  }
  result.summary = json{
      {"config", config.to_json()},
      {"final",
       {{"iters", total_iters},
        {"best_iter", result.best_iter},
        {"test_acc", result.best_test_acc},
        {"quantized_test_acc", result.final_quantized_acc},
        {"beta_final", result.beta_final},
        {"eta_final", eta_at(config.eta, total_iters - 1)},
        {"frac_quantized", config.optimizer == OptimizerKind::FloatRef
                               ? frac_quantized(result.final_params, config.levels)
                               : 1.0}}},
      {"quantized_histogram", histogram}};

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    write_records_csv(config.out_dir + "/records.csv", result.records);
    std::ofstream out(config.out_dir + "/summary.json");
    if (!out) throw std::runtime_error("cannot open for writing: " + config.out_dir + "/summary.json");
    out << result.summary.dump(2) << "\n";
  }
  return result;
}

}  // namespace mirrorquant
