#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "zdtree/knn.hpp"

namespace zdtree::cli {

/// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
  std::string command;
  std::string distribution = "3d-cube";
  std::size_t n = 1000;
  int dim = 2;  // update-bench only; elsewhere implied by the data
  std::size_t k = 1;
  std::size_t leaf_cutoff = 16;
  int bits_per_dim = 0;  // 0 = default for the dimension
  std::uint64_t seed = 0;
  std::size_t workers = 0;  // 0 = machine parallelism
  std::string variant = "leaf";
  bool presort = true;
  bool visits = false;
  double universe_lo = 0.0;
  double universe_hi = 1.0;
  std::string input;
  std::string queries;
  std::string output;  // empty = stdout
  std::vector<std::size_t> batch_sizes{1, 10, 100, 1000, 10000, 100000, 1000000};
  std::string axis = "n";
  std::vector<std::size_t> sweep;  // axis values; empty = per-axis default
  std::string inject_fault;        // verify: "unsorted-build"
};

/// Parses argv and runs the chosen subcommand. CSV goes to --out or `out`;
/// summaries and diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int cmd_generate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_knn_graph(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_query(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_update_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_scale_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err);

inline constexpr const char* kKnnCsvHeader = "query_id,neighbor_id,sqdist";
inline constexpr const char* kUpdateCsvHeader = "batch_size,insert_s_per_pt,delete_s_per_pt";
inline constexpr const char* kScaleCsvHeader =
    "axis,n,k,workers,variant,build_s,query_s,per_point_s,per_neighbor_s,work_s";

void write_knn_csv(std::ostream& out, const std::vector<KnnResult>& rows);

/// True when each per-point cost from batch size `from` on is at most
/// (1 + noise) times the previous one.
bool monotone_trend(const std::vector<std::size_t>& sizes, const std::vector<double>& per_point,
                    std::size_t from, double noise);

}  // namespace zdtree::cli
