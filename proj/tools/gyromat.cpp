#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>

#include "gyromat/config.hpp"
#include "gyromat/errors.hpp"
#include "gyromat/grassmann.hpp"
#include "gyromat/gyro_spd.hpp"
#include "gyromat/rng.hpp"
#include "gyromat/run.hpp"
#include "gyromat/suites.hpp"

namespace fs = std::filesystem;
using namespace gyromat;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

int cmd_check(const std::string& suite, std::uint64_t seed, const fs::path& out_dir) {
  const auto results = suites::run_suite(suite, seed);
  std::cout << suites::format_table(results);
  fs::create_directories(out_dir);
  const fs::path report = out_dir / ("check_" + suite + ".csv");
  suites::write_report(report, results);
  std::cout << "report: " << report.string() << "\n";
  for (const auto& r : results) {
    if (!r.pass) return kRuntime;
  }
  return kOk;
}

void print_record(const nn::EpochRecord& r) {
  std::printf("epoch %4d  %-5s  loss %.6f  acc %.4f\n", r.epoch, r.split.c_str(), r.loss, r.accuracy);
  std::fflush(stdout);
}

void print_splits(const RunSummary& s) {
  for (const auto& [name, e] : s.splits) {
    std::printf("%-5s  loss %.6f  acc %.4f\n", name.c_str(), e.loss, e.accuracy);
  }
}

int cmd_train(RunConfig cfg, const fs::path& out_dir, bool quiet) {
  const RunSummary s = run_training(cfg, out_dir, quiet ? nn::EpochCallback{} : print_record);
  print_splits(s);
  std::printf("checkpoint: %s\n", (out_dir / "checkpoint").string().c_str());
  std::printf("test accuracy: %.4f\n", s.test_accuracy);
  return kOk;
}

int cmd_eval(const RunConfig& cfg, const fs::path& out_dir) {
  const RunSummary s = run_evaluation(cfg, out_dir);
  print_splits(s);
  std::printf("test accuracy: %.4f\n", s.test_accuracy);
  return kOk;
}

int cmd_gradcheck(const std::string& target, std::uint64_t seed) {
  const double err = suites::run_gradcheck(target, seed);
  const bool pass = err < 1e-3;
  std::printf("%s seed=%llu max_rel_err=%.3e %s\n", target.c_str(), static_cast<unsigned long long>(seed),
              err, pass ? "PASS" : "FAIL");
  return pass ? kOk : kRuntime;
}

volatile double g_sink = 0.0;  // keeps the timed results observable

// Wall-clock timings of a few kernels; google-benchmark targets live in benchmarks/.
int cmd_bench(std::uint64_t seed, const fs::path& out_dir) {
  using Clock = std::chrono::steady_clock;
  Rng rng = make_rng(seed, "bench");
  const SpdMatrix a = spd_exp(SymMatrix(normal_sym(rng, 8, 0.5)));
  const SpdMatrix b = spd_exp(SymMatrix(normal_sym(rng, 8, 0.5)));
  const gr::ProjectorPoint p = gr::skew_param(normal_matrix(rng, 3, 3, 0.3));
  const gr::ProjectorPoint q = gr::skew_param(normal_matrix(rng, 3, 3, 0.3));
  const std::vector<std::pair<std::string, std::function<double()>>> kernels{
      {"spd_add_ai_8", [&] { return spd::spd_add({spd::Metric::AI, 0.0}, a, b).matrix()(0, 0); }},
      {"spd_add_le_8", [&] { return spd::spd_add({spd::Metric::LE, 0.0}, a, b).matrix()(0, 0); }},
      {"spd_add_lc_8", [&] { return spd::spd_add({spd::Metric::LC, 0.0}, a, b).matrix()(0, 0); }},
      {"gr_log_projector_6_3", [&] { return gr::gr_log_projector(p, q).matrix()(0, 0); }},
      {"gr_add_6_3", [&] { return gr::gr_add(p, q).matrix()(0, 0); }},
  };
  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "bench.csv");
  csv << "kernel,iterations,ns_per_op\n";
  for (const auto& [name, fn] : kernels) {
    const int iters = 2000;
    const auto t0 = Clock::now();
    for (int i = 0; i < iters; ++i) g_sink = fn();
    const double ns = std::chrono::duration<double, std::nano>(Clock::now() - t0).count() / iters;
    std::printf("%-22s %8.0f ns/op\n", name.c_str(), ns);
    csv << name << ',' << iters << ',' << ns << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gyrovector-space layers for SPD, SPSD and Grassmann networks"};
  app.require_subcommand(1);
  std::uint64_t seed = 42;
  bool seed_given = false;
  fs::path out_dir = "out";
  std::string config_path;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>(
           "--seed", [&](std::uint64_t s) { seed = s, seed_given = true; }, "Root seed")
        ->default_str("42");
  };

  std::string suite = "all";
  CLI::App* check = app.add_subcommand("check", "Run property suites");
  check->add_option("--suite", suite, "all | gyro | basis | grassmann | spsd | grad")
      ->check(CLI::IsMember({"all", "gyro", "basis", "grassmann", "spsd", "grad"}))
      ->capture_default_str();
  add_seed(check);
  check->add_option("--out-dir", out_dir, "Directory for the CSV report")->capture_default_str();

  bool quiet = false;
  CLI::App* train = app.add_subcommand("train", "Train a model from a config file");
  train->add_option("--config", config_path, "key=value config file")->required();
  add_seed(train);
  train->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  train->add_flag("--quiet", quiet, "Only print the final summary");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate the checkpoint in --out-dir");
  eval->add_option("--config", config_path, "key=value config file")->required();
  add_seed(eval);
  eval->add_option("--out-dir", out_dir, "Directory holding checkpoint/")->capture_default_str();

  std::string target;
  CLI::App* grad = app.add_subcommand("gradcheck", "Finite-difference check of one layer");
  grad->add_option("target", target, "Layer name")
      ->required()
      ->check(CLI::IsMember(suites::gradcheck_targets()));
  add_seed(grad);

  CLI::App* bench = app.add_subcommand("bench", "Time core kernels");
  add_seed(bench);
  bench->add_option("--out-dir", out_dir, "Directory for bench.csv")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (check->parsed()) return cmd_check(suite, seed, out_dir);
    if (grad->parsed()) return cmd_gradcheck(target, seed);
    if (bench->parsed()) return cmd_bench(seed, out_dir);
    RunConfig cfg = load_run_config(config_path);
    if (seed_given) cfg.seed = seed;
    if (train->parsed()) return cmd_train(cfg, out_dir, quiet);
    return cmd_eval(cfg, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
