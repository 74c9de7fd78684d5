#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mirrorquant/nn.hpp"
#include "mirrorquant/optimizers.hpp"

namespace mirrorquant {

enum class OptimizerKind { MdClosed, MdStable, GdProj, BcSte, Pgd, FloatRef };

const char* to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& name);

struct DatasetSpec {
  std::string kind = "xor-blobs";
  long n = 2000;
  double noise = 0.25;
  std::uint64_t seed = 7;
};

/// Full training-run configuration. Defaults are tuned for the desk-scale
/// 2-d datasets (about 15k iterations); every field can be overridden from
/// JSON (see TrainConfig::from_json and the README schema table).
struct TrainConfig {
  Space space = Space::W;
  ProjectionKind projection = ProjectionKind::Tanh;
  OptimizerKind optimizer = OptimizerKind::MdStable;
  QuantLevels levels = QuantLevels::binary();
  StepSizeSchedule eta{1e-3, 0.3, 4000};
  BetaSchedule beta{1.0, 1.1, 100, 1e4};
  AdamSettings adam;
  long epochs = 600;
  long batch_size = 64;
  std::uint64_t seed = 7;
  DatasetSpec dataset;
  std::vector<long> arch = {2, 16, 16, 2};
  long log_interval = 50;
  std::string out_dir;  // empty: no files written by train()

  /// Throws ConfigError on inconsistent settings (see README for the rules).
  void validate() const;

  /// Strict parse: unknown keys are rejected with their full key path.
  static TrainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct TrainRecord {
  long iter = 0;
  long epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  double frac_quantized = 0.0;
  double grad_norm = 0.0;
  double quantized_test_acc = 0.0;
};

struct TrainResult {
  MlpModel model;                     // final fully-quantized model (float weights for float_ref)
  std::vector<double> final_params;   // its flat parameters
  std::vector<TrainRecord> records;
  long iters = 0;
  long best_iter = 0;
  double best_test_acc = 0.0;         // validation accuracy of the selected state
  double final_quantized_acc = 0.0;   // test accuracy of the returned model
  double beta_final = 0.0;
  OptimizerState end_state;           // raw state after the last step (pre-selection)
  nlohmann::json summary;             // config echo + final metrics + level histogram
};

/// Train per the configured space/optimizer: sample a minibatch, take loss
/// gradients at the primal point, optionally Adam-precondition, step, anneal
/// beta. The state with the best validation accuracy is kept and rounded to
/// exact levels at the end (float_ref skips the rounding).
/// Writes <out>/records.csv and <out>/summary.json when out_dir is set.
TrainResult train(const TrainConfig& config);

/// Fraction of parameters within tol of their nearest level.
double frac_quantized(const std::vector<double>& params, const QuantLevels& levels,
                      double tol = 1e-2);
/// U-space variant: fraction of rows whose max entry exceeds 1 - tol.
double frac_quantized_u(const std::vector<double>& u, std::size_t d, double tol = 1e-2);

/// Couples per-parameter simplex rows u (row-major m x d) to network weights
/// w_j = sum_l u_{j,l} q_l, with the chain rule g_u[j,l] = g_w[j] * q_l.
struct USpaceBind {
  std::vector<double> q;  // the d level values

  std::vector<double> materialize(const std::vector<double>& u) const;
  std::vector<double> chain(const std::vector<double>& g_w) const;
};

void write_records_csv(const std::string& path, const std::vector<TrainRecord>& records);
extern const char* const kRecordsCsvHeader;

}  // namespace mirrorquant
