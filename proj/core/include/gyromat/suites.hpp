#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gyromat::suites {

struct PropertyResult {
  std::string suite;
  std::string property;
  int cases = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// gyro, basis, grassmann, spsd, grad.
const std::vector<std::string>& suite_names();
bool is_suite(std::string_view name);  // also accepts "all"

// Each suite draws from make_rng(seed, "suite/<name>").
std::vector<PropertyResult> run_suite(std::string_view name, std::uint64_t seed);

std::string format_table(const std::vector<PropertyResult>& results);
void write_report(const std::filesystem::path& path, const std::vector<PropertyResult>& results);

// Layer gradient checks: spd-fc-le, spd-fc-ai, spd-fc-lc, spd-conv, spd-mlr,
// spsd-mlr, gr-gcn-embed, gr-gcn-layer, gr-gcn-head.
const std::vector<std::string>& gradcheck_targets();
bool is_gradcheck_target(std::string_view name);
// Max relative error of the analytic gradient against central differences.
double run_gradcheck(std::string_view target, std::uint64_t seed);

}  // namespace gyromat::suites
