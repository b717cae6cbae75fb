#pragma once

// Stage runners behind the CLI subcommands. They are plain functions over
// option structs so the test suites can drive them without spawning
// processes; the CLI binary only parses flags into these structs.

#include <echodec/pcp.hpp>
#include <echodec/tsnmf.hpp>
#include <echodec/types.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace echodec::cmd {

inline constexpr const char* kVersion = "0.1.0";

/// Thread cap: explicit flag value if > 0, else the ECHODEC_THREADS
/// environment variable, else 1.
int resolve_threads(int flag_value);

struct SynthOpts {
  std::filesystem::path out;
  Index n_depth = 12;
  Index n_ping = 16;
  Index n_freq = 2;
  Index days = 40;
  Index rank = 3;
  double sparsity = 0.02;
  double noise_sigma = 0.0;
  double smoothness = 0.1;
  std::uint64_t seed = 1;
};
int run_synth(const SynthOpts& opts);

struct PcpOpts {
  std::filesystem::path in;  // echogram bundle
  std::filesystem::path out;
  std::string fill = "fail";  // fail | column-mean | constant
  double fill_value = 0.0;
  double gamma = 0.0;  // 0 = auto
  double tol = 1e-7;
  int max_iter = 1000;
  double mu = 0.0;  // 0 = auto
  std::uint64_t seed = 1;
  bool strict = false;
};
int run_pcp(const PcpOpts& opts);

struct TsnmfOpts {
  std::filesystem::path in;  // D x T matrix CSV (e.g. the PCP low-rank output)
  std::filesystem::path out;
  Index rank = 3;
  double eta = 500000.0;
  double lambda = 0.0;
  double beta_w = 0.0;
  double beta_h = 0.0;
  double stop_ratio = 0.005;
  int stop_window = 5;
  int max_iter = 20000;
  int restarts = 320;
  double init_scale = 0.0;
  std::uint64_t seed = 1;
  int threads = 0;
};
int run_tsnmf(const TsnmfOpts& opts);

struct RankScanOpts {
  std::filesystem::path in;
  std::filesystem::path out;
  std::vector<int> ranks;
  double eta = 0.0;
  double stop_ratio = 0.005;
  int stop_window = 5;
  int max_iter = 20000;
  int restarts = 320;
  std::uint64_t seed = 1;
  int threads = 0;
};
int run_rank_scan(const RankScanOpts& opts);

struct LCurveOpts {
  std::filesystem::path in;
  std::filesystem::path out;
  std::vector<double> etas;
  Index rank = 3;
  double stop_ratio = 0.005;
  int stop_window = 5;
  int max_iter = 20000;
  int restarts = 320;
  std::uint64_t seed = 1;
  int threads = 0;
};
int run_lcurve(const LCurveOpts& opts);

struct SummarizeOpts {
  std::filesystem::path in;  // K x T scaled activation CSV
  std::filesystem::path out;
  Index clusters = 4;
  std::uint64_t seed = 1;
};
int run_summarize(const SummarizeOpts& opts);

struct UnflattenPatternOpts {
  std::filesystem::path in;      // D x K pattern matrix CSV
  std::filesystem::path bundle;  // bundle providing the layout and frequencies
  std::filesystem::path out;
  std::uint64_t seed = 1;
};
int run_unflatten_pattern(const UnflattenPatternOpts& opts);

struct PipelineOpts {
  std::filesystem::path in;  // echogram bundle
  std::filesystem::path out;
  std::string fill = "fail";
  double fill_value = 0.0;
  double gamma = 0.0;
  double pcp_tol = 1e-7;
  int pcp_max_iter = 1000;
  Index rank = 3;
  double eta = 500000.0;
  double lambda = 0.0;
  double beta_w = 0.0;
  double beta_h = 0.0;
  double stop_ratio = 0.005;
  int stop_window = 5;
  int max_iter = 20000;
  int restarts = 320;
  double init_scale = 0.0;
  Index clusters = 4;
  bool raw_distance = false;  // use raw H instead of norm-scaled activations
  std::uint64_t seed = 1;
  int threads = 0;
  bool strict = false;
};
int run_pipeline(const PipelineOpts& opts);

/// Expands "a..b" (inclusive integer range) or a comma list into ranks.
std::vector<int> parse_rank_list(const std::string& text);
/// Expands "a..b" (decade steps) or a comma list into etas.
std::vector<double> parse_eta_list(const std::string& text);

}  // namespace echodec::cmd
