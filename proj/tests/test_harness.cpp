#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "mirrorquant/harness.hpp"
#include "oracles.hpp"

using namespace mirrorquant;
using nlohmann::json;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.space = Space::W;
  c.projection = ProjectionKind::Tanh;
  c.optimizer = OptimizerKind::MdStable;
  c.levels = QuantLevels::binary();
  c.eta = {1e-2, 0.5, 80};
  c.beta = {1.0, 2.0, 10, 16.0};
  c.epochs = 40;
  c.batch_size = 64;
  c.seed = 7;
  c.dataset = {"xor-blobs", 400, 0.25, 7};
  c.arch = {2, 8, 2};
  c.log_interval = 10;
  return c;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config validation enforces the compatibility rules") {
  CHECK_NOTHROW(small_config().validate());

  TrainConfig c = small_config();
  c.space = Space::U;  // u-space requires the softmax projection
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.projection = ProjectionKind::Softmax;
  CHECK_NOTHROW(c.validate());

  c = small_config();
  c.optimizer = OptimizerKind::BcSte;  // straight-through requires sign
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.projection = ProjectionKind::Sign;
  CHECK_NOTHROW(c.validate());

  c = small_config();
  c.projection = ProjectionKind::Sign;  // sign requires the straight-through optimizer
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = small_config();
  c.levels = QuantLevels::ternary();  // tanh is a binary projection
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.projection = ProjectionKind::ShiftedTanh;
  CHECK_NOTHROW(c.validate());

  c = small_config();
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = small_config();
  c.arch = {2};
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = small_config();
  c.space = Space::U;
  c.projection = ProjectionKind::Softmax;
  c.optimizer = OptimizerKind::BcSte;  // u-space only supports mirror/gd variants
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("config json round trip and strict unknown-key rejection") {
  TrainConfig c = small_config();
  TrainConfig back = TrainConfig::from_json(c.to_json());
  CHECK(back.space == c.space);
  CHECK(back.projection == c.projection);
  CHECK(back.optimizer == c.optimizer);
  CHECK(back.levels.levels == c.levels.levels);
  CHECK(back.eta.eta0 == c.eta.eta0);
  CHECK(back.eta.lr_interval == c.eta.lr_interval);
  CHECK(back.beta.cap == c.beta.cap);
  CHECK(back.adam.enabled == c.adam.enabled);
  CHECK(back.epochs == c.epochs);
  CHECK(back.batch_size == c.batch_size);
  CHECK(back.seed == c.seed);
  CHECK(back.dataset.kind == c.dataset.kind);
  CHECK(back.dataset.n == c.dataset.n);
  CHECK(back.arch == c.arch);
  CHECK(back.log_interval == c.log_interval);

  json j = c.to_json();
  j["bogus_key"] = 1;
  CHECK_THROWS_WITH_AS(TrainConfig::from_json(j), doctest::Contains("bogus_key"), ConfigError);

  json nested = c.to_json();
  nested["adam"]["momentum"] = 0.9;
  CHECK_THROWS_WITH_AS(TrainConfig::from_json(nested), doctest::Contains("adam.momentum"),
                       ConfigError);
}

TEST_CASE("quantization-progress metrics") {
  QuantLevels binary = QuantLevels::binary();
  CHECK(frac_quantized({1.0, -1.0, 1.0}, binary) == 1.0);
  CHECK(frac_quantized({0.0, 0.0}, binary) == 0.0);
  CHECK(frac_quantized({0.995, 0.5}, binary) == 0.5);
  CHECK(frac_quantized({0.995, 0.5}, binary, 1e-6) == 0.0);

  // u rows: committed means the max entry is within tol of 1
  CHECK(frac_quantized_u({0.995, 0.005, 0.6, 0.4}, 2) == 0.5);
  CHECK(frac_quantized_u({1.0, 0.0}, 2) == 1.0);
}

TEST_CASE("u-space binding: expectation weights and chain rule") {
  USpaceBind bind{{-1.0, 1.0}};
  std::vector<double> w = bind.materialize({0.5, 0.5, 0.0, 1.0});
  CHECK(w.size() == 2);
  CHECK(w[0] == 0.0);
  CHECK(w[1] == 1.0);

  std::vector<double> gu = bind.chain({2.0, -0.5});
  CHECK(gu == std::vector<double>({-2.0, 2.0, 0.5, -0.5}));

  // chain rule against finite differences of a scalar function of w
  auto loss = [&](const std::vector<double>& u) {
    std::vector<double> ww = bind.materialize(u);
    return std::sin(ww[0]) * ww[1] + 0.5 * ww[1] * ww[1];
  };
  std::vector<double> u0 = {0.3, 0.7, 0.6, 0.4};
  std::vector<double> w0 = bind.materialize(u0);
  std::vector<double> gw = {std::cos(w0[0]) * w0[1], std::sin(w0[0]) + w0[1]};
  std::vector<double> analytic = bind.chain(gw);
  for (std::size_t j = 0; j < u0.size(); ++j) {
    std::vector<double> probe = u0;
    const double h = 1e-6;
    probe[j] = u0[j] + h;
    double up = loss(probe);
    probe[j] = u0[j] - h;
    double down = loss(probe);
    CHECK(oracles::rel_err(analytic[j], (up - down) / (2.0 * h)) < 1e-5);
  }
}

TEST_CASE("stable tanh run: record hygiene, coherence, exact final levels") {
  TrainConfig config = small_config();
  TrainResult result = train(config);

  CHECK(result.iters == 40 * (320 / 64));  // epochs x iters-per-epoch
  CHECK(!result.records.empty());

  long prev_iter = -1;
  for (const TrainRecord& r : result.records) {
    CHECK(r.iter > prev_iter);
    prev_iter = r.iter;
    CHECK(r.train_loss >= 0.0);
    CHECK(r.train_acc >= 0.0);
    CHECK(r.train_acc <= 1.0);
    CHECK(r.test_acc >= 0.0);
    CHECK(r.test_acc <= 1.0);
    CHECK(r.frac_quantized >= 0.0);
    CHECK(r.frac_quantized <= 1.0);
    CHECK(r.quantized_test_acc >= 0.0);
    CHECK(r.quantized_test_acc <= 1.0);
    CHECK(r.beta >= 1.0);
    CHECK(r.beta <= 16.0);
    CHECK(r.eta > 0.0);
    CHECK(r.grad_norm >= 0.0);
  }
  CHECK(result.records.back().iter == result.iters - 1);
  CHECK(result.beta_final == 16.0);

  // stable runs keep primal = P_beta(dual) at all times
  const OptimizerState& end = result.end_state;
  CHECK(end.dual.size() == end.primal.size());
  for (std::size_t i = 0; i < end.dual.size(); ++i)
    CHECK(end.primal[i] ==
          doctest::Approx(tanh_project(end.dual[i], end.beta)).epsilon(1e-9));

  // the returned model is exactly binary
  for (double p : result.final_params) CHECK((p == 1.0 || p == -1.0));
  CHECK(result.final_quantized_acc >= 0.0);

  // saturation guarantee at the final sharpness: far-from-zero duals are
  // within 1e-3 of a level
  double gamma = epsilon_gamma(16.0, 1e-3);
  for (std::size_t i = 0; i < end.dual.size(); ++i)
    if (std::fabs(end.dual[i]) >= gamma * 1.001)
      CHECK(1.0 - std::fabs(end.primal[i]) < 1e-3);
}

TEST_CASE("same config and seed reproduce the run exactly") {
  TrainConfig config = small_config();
  TrainResult a = train(config);
  TrainResult b = train(config);

  CHECK(a.final_params == b.final_params);
  CHECK(a.best_iter == b.best_iter);
  CHECK(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].iter == b.records[i].iter);
    CHECK(a.records[i].train_loss == b.records[i].train_loss);
    CHECK(a.records[i].train_acc == b.records[i].train_acc);
    CHECK(a.records[i].test_acc == b.records[i].test_acc);
    CHECK(a.records[i].beta == b.records[i].beta);
    CHECK(a.records[i].eta == b.records[i].eta);
    CHECK(a.records[i].frac_quantized == b.records[i].frac_quantized);
    CHECK(a.records[i].grad_norm == b.records[i].grad_norm);
    CHECK(a.records[i].quantized_test_acc == b.records[i].quantized_test_acc);
  }

  TrainConfig other = config;
  other.seed = 8;
  other.dataset.seed = 8;
  TrainResult d = train(other);
  CHECK(a.records.back().train_loss != d.records.back().train_loss);
}

TEST_CASE("u-space run keeps simplex rows and rounds to exact levels") {
  TrainConfig config = small_config();
  config.space = Space::U;
  config.projection = ProjectionKind::Softmax;
  config.optimizer = OptimizerKind::MdStable;
  config.levels = QuantLevels::ternary();
  TrainResult result = train(config);

  const std::size_t d = 3;
  const OptimizerState& end = result.end_state;
  CHECK(end.primal.size() % d == 0);
  for (std::size_t j = 0; j < end.primal.size(); j += d) {
    double sum = 0.0;
    for (std::size_t l = 0; l < d; ++l) {
      CHECK(end.primal[j + l] >= 0.0);
      CHECK(end.primal[j + l] <= 1.0);
      sum += end.primal[j + l];
    }
    CHECK(std::fabs(sum - 1.0) < 1e-9);
  }

  for (double p : result.final_params) CHECK((p == -1.0 || p == 0.0 || p == 1.0));
}

TEST_CASE("train writes byte-stable csv and a summary that echoes the config") {
  namespace fs = std::filesystem;
  fs::path dir = fs::path("harness_tmp");
  fs::remove_all(dir);

  TrainConfig config = small_config();
  config.out_dir = (dir / "run1").string();
  TrainResult result = train(config);
  CHECK(fs::exists(dir / "run1" / "records.csv"));
  CHECK(fs::exists(dir / "run1" / "summary.json"));

  std::string csv = slurp((dir / "run1" / "records.csv").string());
  CHECK(csv.rfind(kRecordsCsvHeader, 0) == 0);  // header line first
  long lines = static_cast<long>(std::count(csv.begin(), csv.end(), '\n'));
  CHECK(lines == static_cast<long>(result.records.size()) + 1);
  CHECK(csv.find("\r") == std::string::npos);  // LF endings only

  config.out_dir = (dir / "run2").string();
  train(config);
  CHECK(slurp((dir / "run2" / "records.csv").string()) == csv);

  json summary = json::parse(slurp((dir / "run1" / "summary.json").string()));
  CHECK(summary["config"]["optimizer"] == "md_stable");
  CHECK(summary["config"]["dataset"]["n"] == 400);
  CHECK(summary["final"]["iters"] == result.iters);
  CHECK(summary["final"]["frac_quantized"] == 1.0);
  long total = 0;
  for (const auto& [level, count] : summary["quantized_histogram"].items())
    total += count.get<long>();
  CHECK(total == static_cast<long>(result.final_params.size()));

  fs::remove_all(dir);
}

TEST_CASE("float reference separates the noiseless xor layout") {
  TrainConfig config = small_config();
  config.optimizer = OptimizerKind::FloatRef;
  config.eta = {1e-3, 0.3, 4000};
  config.epochs = 120;
  config.dataset = {"xor-blobs", 400, 0.0, 5};
  config.arch = {2, 16, 16, 2};
  TrainResult result = train(config);
  CHECK(result.final_quantized_acc == 1.0);  // float weights, no rounding
}

TEST_CASE("divergence aborts with a diagnostic instead of emitting garbage") {
  TrainConfig config = small_config();
  config.optimizer = OptimizerKind::FloatRef;
  config.adam.enabled = false;
  config.eta = {1e200, 1.0, 100000};
  config.epochs = 2;
  CHECK_THROWS_WITH_AS(train(config), doctest::Contains("diverged"), std::runtime_error);
}
