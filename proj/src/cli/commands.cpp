#include "zdtree/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <tbb/parallel_for.h>

#include "zdtree/cli/point_file.hpp"
#include "zdtree/cli/verify.hpp"
#include "zdtree/datagen.hpp"
#include "zdtree/dynamic.hpp"
#include "zdtree/parallel.hpp"
#include "zdtree/sort.hpp"
#include "zdtree/timing.hpp"

namespace zdtree::cli {

namespace {

/// Input or usage problem; maps to exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes to --out when given, else to the fallback stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw UsageError("cannot open '" + path + "' for writing");
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

std::string seconds(double s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << s;
  return os.str();
}

std::string scientific(double s) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(4) << s;
  return os.str();
}

Quantizer make_quantizer(const RunConfig& cfg, int dim) {
  if (!(cfg.universe_lo < cfg.universe_hi)) throw UsageError("universe box is empty");
  const int bits = cfg.bits_per_dim > 0 ? cfg.bits_per_dim : Quantizer::default_bits(dim);
  const double lo = cfg.universe_lo;
  const double hi = cfg.universe_hi;
  try {
    return Quantizer::make(dim, {lo, lo, lo}, {hi, hi, hi}, bits, cfg.seed);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

PointCloud load(const std::string& path) {
  if (path.empty()) throw UsageError("missing input file");
  try {
    return read_point_cloud(path);
  } catch (const PointFileError& e) {
    throw UsageError(path + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
}

std::vector<QuantizedPoint> quantize_base(const PointCloud& cloud, const Quantizer& q) {
  std::vector<QuantizedPoint> out(cloud.points.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!q.contains(cloud.points[i])) {
      throw UsageError("line " + std::to_string(i + 2) + ": point outside the universe box");
    }
  }
  tbb::parallel_for(std::size_t{0}, out.size(),
                    [&](std::size_t i) { out[i] = q.quantize(cloud.points[i]); });
  return out;
}

ZdTree build_timed(const std::vector<QuantizedPoint>& quantized, const Quantizer& q,
                   std::size_t cutoff, double& build_s) {
  const Stopwatch w;
  auto pts = quantized;
  sort_by_morton(pts, q.key_bits());
  ZdTree tree = ZdTree::build(pts, q, cutoff);
  build_s = w.seconds();
  return tree;
}

Variant variant_of(const RunConfig& cfg) {
  try {
    return parse_variant(cfg.variant);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

Distribution distribution_of(const RunConfig& cfg) {
  try {
    return parse_distribution(cfg.distribution);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void check_common(const RunConfig& cfg) {
  if (cfg.k < 1) throw UsageError("--k must be at least 1");
  if (cfg.leaf_cutoff < 1) throw UsageError("--leaf-cutoff must be at least 1");
}

}  // namespace

void write_knn_csv(std::ostream& out, const std::vector<KnnResult>& rows) {
  out << kKnnCsvHeader << '\n';
  std::string line;
  for (const auto& r : rows) {
    for (const auto& nb : r.neighbors) {
      line.clear();
      line += std::to_string(r.query);
      line += ',';
      line += std::to_string(nb.id);
      line += ',';
      line += std::to_string(nb.sqdist);
      line += '\n';
      out << line;
    }
  }
}

bool monotone_trend(const std::vector<std::size_t>& sizes, const std::vector<double>& per_point,
                    std::size_t from, double noise) {
  bool have_prev = false;
  double prev = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < from) continue;
    if (have_prev && per_point[i] > prev * (1.0 + noise)) return false;
    prev = per_point[i];
    have_prev = true;
  }
  return true;
}

int cmd_generate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const PointCloud cloud = generate(distribution_of(cfg), cfg.n, cfg.seed);
  Sink sink(cfg.output, out);
  write_point_cloud(sink.get(), cloud);
  err << "generated " << cloud.size() << " points (" << cloud.distribution << ", seed "
      << cfg.seed << ")\n";
  return kExitOk;
}

int cmd_knn_graph(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  check_common(cfg);
  const Variant variant = variant_of(cfg);
  const PointCloud cloud = load(cfg.input);
  const Quantizer q = make_quantizer(cfg, cloud.dim);

  const Stopwatch wall;
  const auto quantized = quantize_base(cloud, q);
  double build_s = 0.0;
  const ZdTree tree = build_timed(quantized, q, cfg.leaf_cutoff, build_s);

  VisitSummary visits;
  BatchOptions opts;
  opts.variant = variant;
  opts.visits = cfg.visits ? &visits : nullptr;
  const Stopwatch query_clock;
  const auto rows = knn_graph(tree, cfg.k, opts);
  const double query_s = query_clock.seconds();
  const double total_s = wall.seconds();

  Sink sink(cfg.output, out);
  write_knn_csv(sink.get(), rows);

  err << "summary command=knn-graph n=" << cloud.size() << " k=" << cfg.k
      << " variant=" << variant_name(variant) << " workers=" << WorkerScope::active()
      << " depth=" << tree.depth() << " build_s=" << seconds(build_s)
      << " query_s=" << seconds(query_s) << " total_s=" << seconds(total_s);
  if (cfg.visits) err << " visits_mean=" << visits.mean << " visits_max=" << visits.max;
  err << '\n';
  return kExitOk;
}

int cmd_query(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  check_common(cfg);
  const Variant variant = variant_of(cfg);
  const PointCloud base = load(cfg.input);
  const PointCloud queries = load(cfg.queries);
  if (base.dim != queries.dim) {
    throw UsageError("dimension mismatch: base is " + std::to_string(base.dim) + "D, queries are " +
                     std::to_string(queries.dim) + "D");
  }
  const Quantizer q = make_quantizer(cfg, base.dim);

  double build_s = 0.0;
  const ZdTree tree = build_timed(quantize_base(base, q), q, cfg.leaf_cutoff, build_s);

  std::vector<QuantizedPoint> accepted;
  std::size_t skipped = 0;
  for (const auto& p : queries.points) {
    if (!q.contains(p)) {
      err << "skip query " << p.id << ": outside the universe box\n";
      ++skipped;
      continue;
    }
    accepted.push_back(q.quantize(p));
  }

  VisitSummary visits;
  BatchOptions opts;
  opts.variant = variant;
  opts.presort = cfg.presort;
  opts.visits = cfg.visits ? &visits : nullptr;
  const Stopwatch query_clock;
  const auto rows = knn_batch(tree, accepted, cfg.k, opts);
  const double query_s = query_clock.seconds();

  Sink sink(cfg.output, out);
  write_knn_csv(sink.get(), rows);
  err << "summary command=query n=" << base.size() << " queries=" << accepted.size()
      << " skipped=" << skipped << " k=" << cfg.k << " variant=" << variant_name(variant)
      << " presort=" << (cfg.presort ? "true" : "false") << " workers=" << WorkerScope::active()
      << " build_s=" << seconds(build_s) << " query_s=" << seconds(query_s);
  if (cfg.visits) err << " visits_mean=" << visits.mean << " visits_max=" << visits.max;
  err << '\n';
  return kExitOk;
}

int cmd_update_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.dim != 2 && cfg.dim != 3) throw UsageError("--d must be 2 or 3");
  if (cfg.batch_sizes.empty()) throw UsageError("--batch-sizes is empty");
  UpdateCostConfig probe;
  probe.n_base = cfg.n;
  probe.dim = cfg.dim;
  probe.leaf_cutoff = cfg.leaf_cutoff;
  probe.seed = cfg.seed;
  const auto rows = update_cost_probe(probe, cfg.batch_sizes);

  Sink sink(cfg.output, out);
  sink.get() << kUpdateCsvHeader << '\n';
  std::vector<std::size_t> sizes;
  std::vector<double> per_point;
  for (const auto& r : rows) {
    sink.get() << r.batch_size << ',' << scientific(r.insert_s_per_pt) << ','
               << scientific(r.delete_s_per_pt) << '\n';
    sizes.push_back(r.batch_size);
    per_point.push_back(r.insert_s_per_pt);
  }
  err << "summary command=update-bench n_base=" << cfg.n << " d=" << cfg.dim
      << " workers=" << WorkerScope::active()
      << " monotone_trend=" << (monotone_trend(sizes, per_point, 1000, 0.2) ? "true" : "false")
      << '\n';
  return kExitOk;
}

int cmd_scale_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  check_common(cfg);
  const Variant variant = variant_of(cfg);
  const Distribution dist = distribution_of(cfg);
  const int dim = distribution_dim(dist);

  std::vector<std::size_t> sweep = cfg.sweep;
  if (sweep.empty()) {
    if (cfg.axis == "n") sweep = {10000, 100000, 1000000};
    else if (cfg.axis == "k") sweep = {1, 2, 5, 10, 20, 50, 100};
    else if (cfg.axis == "threads") sweep = {1, 2, 4, 8};
  }
  if (cfg.axis != "n" && cfg.axis != "k" && cfg.axis != "threads") {
    throw UsageError("--axis must be n, k or threads");
  }

  Sink sink(cfg.output, out);
  sink.get() << kScaleCsvHeader << '\n';
  const Quantizer q = make_quantizer(cfg, dim);

  auto run_cell = [&](std::size_t n, std::size_t k, std::size_t workers) {
    const WorkerScope scope(workers);
    const PointCloud cloud = generate(dist, n, cfg.seed);
    const auto quantized = quantize_base(cloud, q);
    std::unique_ptr<ZdTree> tree;
    const double build_s = median_seconds([&] {
      auto pts = quantized;
      sort_by_morton(pts, q.key_bits());
      tree = std::make_unique<ZdTree>(ZdTree::build(pts, q, cfg.leaf_cutoff));
    });
    BatchOptions opts;
    opts.variant = variant;
    const double query_s = median_seconds([&] { (void)knn_graph(*tree, k, opts); });
    const std::size_t active = WorkerScope::active();
    const double nn = static_cast<double>(std::max<std::size_t>(n, 1));
    sink.get() << cfg.axis << ',' << n << ',' << k << ',' << active << ','
               << variant_name(variant) << ',' << seconds(build_s) << ',' << seconds(query_s)
               << ',' << scientific(query_s / nn) << ','
               << scientific(query_s / (nn * static_cast<double>(k))) << ','
               << seconds(static_cast<double>(active) * (build_s + query_s)) << '\n';
  };

  for (const std::size_t v : sweep) {
    if (cfg.axis == "n") run_cell(v, cfg.k, cfg.workers);
    else if (cfg.axis == "k") run_cell(cfg.n, v, cfg.workers);
    else run_cell(cfg.n, cfg.k, v);
  }
  err << "summary command=scale-bench axis=" << cfg.axis << " dist=" << distribution_name(dist)
      << " cells=" << sweep.size() << '\n';
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/) {
  verify::VerifyConfig vc;
  vc.n = cfg.n;
  vc.seed = cfg.seed;
  if (!cfg.inject_fault.empty()) {
    if (cfg.inject_fault != "unsorted-build") {
      throw UsageError("unknown fault '" + cfg.inject_fault + "' (unsorted-build)");
    }
    vc.inject_unsorted_build = true;
  }
  const auto results = verify::run_verify(vc);
  bool all = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " checks=" << r.checks
        << " failures=" << r.failures;
    if (!r.passed) out << " first_failure=\"" << r.detail << '"';
    out << '\n';
    all = all && r.passed;
  }
  out << (all ? "verify: all properties hold" : "verify: FAILED") << '\n';
  return all ? kExitOk : kExitVerifyFailed;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"zd-tree k-nearest-neighbor benchmark and verification harness", "zdknn"};
  app.require_subcommand(1);
  app.add_option("--workers", cfg.workers, "Worker threads (0 = all cores)");

  auto add_tree_opts = [&](CLI::App* sub) {
    sub->add_option("--k", cfg.k, "Neighbors per query");
    sub->add_option("--leaf-cutoff", cfg.leaf_cutoff, "Points per leaf before splitting");
    sub->add_option("--bits", cfg.bits_per_dim, "Grid bits per axis (0 = default)");
    sub->add_option("--seed", cfg.seed, "Seed for data and random shift");
    sub->add_option("--variant", cfg.variant, "root | leaf | bit");
    sub->add_option("--universe-lo", cfg.universe_lo, "Universe box lower bound, every axis");
    sub->add_option("--universe-hi", cfg.universe_hi, "Universe box upper bound, every axis");
    sub->add_flag("--visits", cfg.visits, "Count nodes visited per query");
    sub->add_option("--out", cfg.output, "Output path (default stdout)");
  };

  auto* gen = app.add_subcommand("generate", "Write a synthetic point cloud");
  gen->add_option("--dist", cfg.distribution, "2d-cube|3d-cube|3d-sphere|3d-plummer|2d-kuzmin");
  gen->add_option("--n", cfg.n, "Number of points");
  gen->add_option("--seed", cfg.seed, "Generator seed");
  gen->add_option("--out", cfg.output, "Output path (default stdout)");

  auto* graph = app.add_subcommand("knn-graph", "kNN graph of a point file");
  graph->add_option("--input", cfg.input, "Point file")->required();
  add_tree_opts(graph);

  auto* query = app.add_subcommand("query", "kNN of query points against a base cloud");
  query->add_option("--input", cfg.input, "Base point file")->required();
  query->add_option("--queries", cfg.queries, "Query point file")->required();
  query->add_flag("--presort,!--no-presort", cfg.presort, "Morton-sort queries first");
  add_tree_opts(query);

  auto* update = app.add_subcommand("update-bench", "Per-point batch update cost curve");
  update->add_option("--n", cfg.n, "Base tree size");
  update->add_option("--d", cfg.dim, "Dimension (2 or 3)");
  update->add_option("--batch-sizes", cfg.batch_sizes, "Batch sizes")->delimiter(',');
  update->add_option("--leaf-cutoff", cfg.leaf_cutoff, "Points per leaf before splitting");
  update->add_option("--seed", cfg.seed, "Seed");
  update->add_option("--out", cfg.output, "Output path (default stdout)");

  auto* scale = app.add_subcommand("scale-bench", "Sweep n, k or worker count");
  scale->add_option("--axis", cfg.axis, "n | k | threads");
  scale->add_option("--dist", cfg.distribution, "Distribution");
  scale->add_option("--n", cfg.n, "Points when n is not the swept axis");
  scale->add_option("--values", cfg.sweep, "Axis values")->delimiter(',');
  add_tree_opts(scale);

  auto* ver = app.add_subcommand("verify", "Run the correctness property suite");
  ver->add_option("--n", cfg.n, "Points per oracle check");
  ver->add_option("--seed", cfg.seed, "Seed");
  ver->add_option("--inject-fault", cfg.inject_fault, "Fault fixture: unsorted-build");

  cfg.n = 1000;
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (ver->parsed() && ver->count("--n") == 0) cfg.n = 2000;
  if (update->parsed() && update->count("--n") == 0) cfg.n = 1000000;
  if (scale->parsed() && scale->count("--n") == 0) cfg.n = 100000;

  try {
    const WorkerScope scope(cfg.workers);
    if (gen->parsed()) return cmd_generate(cfg, out, err);
    if (graph->parsed()) return cmd_knn_graph(cfg, out, err);
    if (query->parsed()) return cmd_query(cfg, out, err);
    if (update->parsed()) return cmd_update_bench(cfg, out, err);
    if (scale->parsed()) return cmd_scale_bench(cfg, out, err);
    if (ver->parsed()) return cmd_verify(cfg, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace zdtree::cli
