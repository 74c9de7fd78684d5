#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mirrorquant/checks.hpp"
#include "mirrorquant/convex_bench.hpp"
#include "mirrorquant/harness.hpp"

namespace mq = mirrorquant;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;   // assertion / bound failure
constexpr int kExitUsage = 2;     // usage / config error

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mq::ConfigError("cannot open config file: " + path);
  json j;
  in >> j;
  return j;
}

int worker_count() {
  const char* env = std::getenv("MIRRORQUANT_THREADS");
  if (!env) return 1;
  long n = std::strtol(env, nullptr, 10);
  if (n < 1) return 1;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw > 0 && n > static_cast<long>(hw)) n = static_cast<long>(hw);
  return static_cast<int>(n);
}

int cmd_check(std::uint64_t seed, bool quiet, bool inject_ste_bug) {
  std::vector<mq::CheckResult> results = mq::run_all_checks(seed, inject_ste_bug);
  int failed = 0;
  for (const auto& r : results) {
    if (!r.pass) ++failed;
    if (quiet && r.pass) continue;
    std::printf("[%s] %-45s worst=%s%s%s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                mq::fmt_double(r.worst).c_str(), r.detail.empty() ? "" : "  ",
                r.detail.c_str());
  }
  if (failed == 0) {
    std::printf("all %zu checks passed\n", results.size());
    return kExitOk;
  }
  std::printf("%d of %zu checks FAILED\n", failed, results.size());
  return kExitFailure;
}

struct ConvexCell {
  std::string problem;
  std::string map;
};

struct ConvexJob {
  ConvexCell cell;
  double B = 1.0;
  long t = 0;
  mq::ConvexReport report;
};

int cmd_convex(const std::string& config_path, const std::string& out_override, bool quiet) {
  json j = load_json_file(config_path);
  for (const auto& item : j.items()) {
    static const std::set<std::string> allowed = {"cells", "B", "t", "schedule", "out"};
    if (!allowed.count(item.key()))
      throw mq::ConfigError("config: unknown key '" + item.key() + "'");
  }
  std::vector<ConvexCell> cells;
  if (!j.contains("cells")) throw mq::ConfigError("config: missing key 'cells'");
  for (const auto& cj : j.at("cells")) {
    for (const auto& item : cj.items()) {
      static const std::set<std::string> allowed = {"problem", "map"};
      if (!allowed.count(item.key()))
        throw mq::ConfigError("config: unknown key 'cells." + item.key() + "'");
    }
    cells.push_back({cj.at("problem").get<std::string>(), cj.at("map").get<std::string>()});
  }
  std::vector<double> Bs = j.value("B", std::vector<double>{1.0, 100.0});
  std::vector<long> ts = j.value("t", std::vector<long>{10, 100, 1000, 10000});
  double beta0 = 1.0, scale = 1.05;
  long interval = 100;
  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    for (const auto& item : s.items()) {
      static const std::set<std::string> allowed = {"beta0", "scale", "interval"};
      if (!allowed.count(item.key()))
        throw mq::ConfigError("config: unknown key 'schedule." + item.key() + "'");
    }
    beta0 = s.value("beta0", beta0);
    scale = s.value("scale", scale);
    interval = s.value("interval", interval);
  }
  std::string out_dir = out_override.empty() ? j.value("out", std::string("convex_out"))
                                             : out_override;

  // Constants depend only on (problem, map): estimate once per cell.
  struct CellData {
    mq::ConvexProblem problem;
    mq::MirrorMap map;
    mq::ConvexConstants constants;
  };
  std::vector<CellData> cell_data;
  for (const auto& c : cells) {
    CellData cd{mq::ConvexProblem::by_id(c.problem), mq::MirrorMap::from_string(c.map), {}};
    cd.constants = mq::estimate_constants(cd.problem, cd.map);
    cell_data.push_back(std::move(cd));
  }

  std::vector<ConvexJob> jobs;
  for (std::size_t ci = 0; ci < cells.size(); ++ci)
    for (double B : Bs)
      for (long t : ts) jobs.push_back({cells[ci], B, t, {}});

  auto run_job = [&](ConvexJob& job) {
    std::size_t ci = 0;
    while (cells[ci].problem != job.cell.problem || cells[ci].map != job.cell.map) ++ci;
    const CellData& cd = cell_data[ci];
    mq::ConvergenceParams params = mq::ConvergenceParams::prescribed(
        cd.constants.R, cd.constants.L, cd.constants.rho, job.B, job.t);
    mq::BetaSchedule schedule{beta0, job.B > beta0 ? scale : 1.0, interval, job.B};
    job.report = mq::run_md_convex(cd.problem, cd.map, schedule, params);
  };

  int workers = worker_count();
  if (workers <= 1 || jobs.size() <= 1) {
    for (auto& job : jobs) run_job(job);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int wi = 0; wi < workers; ++wi) {
      pool.emplace_back([&]() {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= jobs.size()) return;
          run_job(jobs[i]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  std::filesystem::create_directories(out_dir);
  json summary = json::array();
  bool all_ok = true;
  for (const auto& c : cells) {
    for (double B : Bs) {
      char fname[256];
      std::snprintf(fname, sizeof(fname), "%s/%s_%s_B%s.csv", out_dir.c_str(),
                    c.problem.c_str(), c.map.c_str(), mq::fmt_double(B).c_str());
      std::ofstream csv(fname);
      if (!csv) throw std::runtime_error(std::string("cannot open for writing: ") + fname);
      csv << "t,gap,bound,beta,eta\n";
      for (const auto& job : jobs) {
        if (job.cell.problem != c.problem || job.cell.map != c.map || job.B != B) continue;
        const mq::ConvexReport& r = job.report;
        csv << r.t << ',' << mq::fmt_double(r.gap) << ',' << mq::fmt_double(r.bound) << ','
            << mq::fmt_double(r.beta_final) << ',' << mq::fmt_double(r.eta) << "\n";
        summary.push_back({{"problem", r.problem_id}, {"map", r.map_name}, {"B", r.B},
                           {"t", r.t}, {"gap", r.gap}, {"bound", r.bound}, {"eta", r.eta},
                           {"beta_final", r.beta_final}, {"R", r.R}, {"L", r.L},
                           {"rho", r.rho}, {"ok", r.ok}});
        if (!r.ok) all_ok = false;
        if (!quiet)
          std::printf("%-16s %-18s B=%-6s t=%-7ld gap=%-12s bound=%-12s %s\n",
                      r.problem_id.c_str(), r.map_name.c_str(), mq::fmt_double(r.B).c_str(),
                      r.t, mq::fmt_double(r.gap).c_str(), mq::fmt_double(r.bound).c_str(),
                      r.ok ? "ok" : "VIOLATED");
      }
    }
  }
  {
    std::ofstream sj(out_dir + "/summary.json");
    sj << summary.dump(2) << "\n";
  }
  if (all_ok) {
    std::printf("all %zu runs satisfied the convergence bound\n", jobs.size());
    return kExitOk;
  }
  std::printf("convergence bound VIOLATED in at least one run\n");
  return kExitFailure;
}

int cmd_train(const std::string& config_path, const std::string& out_override,
              bool seed_set, std::uint64_t seed, bool quiet) {
  json j = load_json_file(config_path);
  mq::TrainConfig config = mq::TrainConfig::from_json(j);
  if (!out_override.empty()) config.out_dir = out_override;
  if (seed_set) {
    config.seed = seed;
    config.dataset.seed = seed;
  }
  mq::TrainResult result = mq::train(config);
  if (!quiet) {
    for (const auto& r : result.records) {
      if (r.iter % (config.log_interval * 10) == 0)
        std::printf("iter %-6ld loss=%-10s train=%-8s test=%-8s beta=%-10s frac_q=%s\n",
                    r.iter, mq::fmt_double(r.train_loss).c_str(),
                    mq::fmt_double(r.train_acc).c_str(), mq::fmt_double(r.test_acc).c_str(),
                    mq::fmt_double(r.beta).c_str(), mq::fmt_double(r.frac_quantized).c_str());
    }
  }
  std::printf("float test accuracy: %s (best at iteration %ld)\n",
              mq::fmt_double(result.best_test_acc).c_str(), result.best_iter);
  std::printf("quantized test accuracy: %s\n", mq::fmt_double(result.final_quantized_acc).c_str());
  return kExitOk;
}

int cmd_gamma(double B, double eps) {
  double gamma = mq::epsilon_gamma(B, eps);  // throws std::domain_error on bad flags
  std::printf("gamma = %s\n", mq::fmt_double(gamma).c_str());
  std::printf("guarantee: every dual coordinate with |x| >= gamma has "
              "1 - |tanh(B x)| <= eps, i.e. its weight is within eps of a level "
              "(B=%s, eps=%s)\n",
              mq::fmt_double(B).c_str(), mq::fmt_double(eps).c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mirror-descent quantization toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 7;
  bool quiet = false;
  std::string out_dir;

  auto* check = app.add_subcommand("check", "run every invariant/property suite");
  bool inject_ste_bug = false;
  check->add_option("--seed", seed, "rng seed for the property samplers");
  check->add_flag("--quiet", quiet, "print failures and the summary only");
  check->add_flag("--inject-ste-bug", inject_ste_bug)->group("");  // hidden self-test hook

  auto* convex = app.add_subcommand("convex", "run the convex convergence benchmark");
  std::string convex_config;
  convex->add_option("config", convex_config, "benchmark config (JSON)")->required();
  convex->add_option("--out", out_dir, "output directory (overrides config)");
  convex->add_flag("--quiet", quiet, "suppress the per-run table");

  auto* tr = app.add_subcommand("train", "train a quantized MLP from a JSON config");
  std::string train_config;
  bool train_seed_set = false;
  tr->add_option("config", train_config, "training config (JSON)")->required();
  tr->add_option("--out", out_dir, "output directory (overrides config)");
  tr->add_option("--seed", seed, "seed override (run and dataset)")
      ->each([&](const std::string&) { train_seed_set = true; });
  tr->add_flag("--quiet", quiet, "suppress the progress table");

  auto* ga = app.add_subcommand("gamma", "saturation threshold for a given cap and eps");
  double gamma_B = 0.0, gamma_eps = 0.0;
  ga->add_option("--B", gamma_B, "annealing cap")->required();
  ga->add_option("--eps", gamma_eps, "discreteness tolerance in (0, 1)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (app.got_subcommand(check)) return cmd_check(seed, quiet, inject_ste_bug);
    if (app.got_subcommand(convex)) return cmd_convex(convex_config, out_dir, quiet);
    if (app.got_subcommand(tr))
      return cmd_train(train_config, out_dir, train_seed_set, seed, quiet);
    if (app.got_subcommand(ga)) return cmd_gamma(gamma_B, gamma_eps);
  } catch (const mq::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const mq::OutOfDomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
