#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "zdtree/cli/commands.hpp"
#include "zdtree/cli/point_file.hpp"
#include "zdtree/oracle.hpp"

using namespace zdtree;
using namespace zdtree::cli;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "zdknn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("zdknn-test-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// query id -> neighbor ids in CSV order
std::map<std::uint32_t, std::vector<std::uint32_t>> parse_knn_csv(const std::string& csv) {
  std::map<std::uint32_t, std::vector<std::uint32_t>> rows;
  const auto ls = lines(csv);
  EXPECT_FALSE(ls.empty());
  EXPECT_EQ(ls[0], kKnnCsvHeader);
  for (std::size_t i = 1; i < ls.size(); ++i) {
    std::uint32_t q = 0, nb = 0;
    char comma = 0;
    std::istringstream row(ls[i]);
    row >> q >> comma >> nb;
    rows[q].push_back(nb);
  }
  return rows;
}

}  // namespace

TEST(PointFile, FormatAndRoundTrip) {
  PointCloud c;
  c.dim = 2;
  c.points = {{0, {0.25, 1.0}}, {1, {0.1, 0.0}}};
  std::ostringstream os;
  write_point_cloud(os, c);
  EXPECT_EQ(os.str(), "pointcloud 2 2\n0.25 1\n0.1 0\n");

  const auto cloud = generate(Distribution::Plummer3D, 500, 3);
  std::ostringstream full;
  write_point_cloud(full, cloud);
  std::istringstream in(full.str());
  const auto back = read_point_cloud(in);
  ASSERT_EQ(back.size(), cloud.size());
  EXPECT_EQ(back.dim, 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    EXPECT_EQ(back.points[i].id, i);
    EXPECT_EQ(back.points[i].coords, cloud.points[i].coords);
  }
}

TEST(PointFile, ErrorsNameTheLine) {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      read_point_cloud(in);
    } catch (const PointFileError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of(""), 1u);
  EXPECT_EQ(line_of("pointcloud 4 1\n0 0 0 0\n"), 1u);
  EXPECT_EQ(line_of("points 2 1\n0 0\n"), 1u);
  EXPECT_EQ(line_of("pointcloud 2 2\n0 0\n0.5\n"), 3u);
  EXPECT_EQ(line_of("pointcloud 2 2\n0 0\n0.5 x\n"), 3u);
  EXPECT_EQ(line_of("pointcloud 2 2\n0 0 0\n0.5 0.5\n"), 2u);
  EXPECT_EQ(line_of("pointcloud 2 3\n0 0\n0.5 0.5\n"), 4u);
  EXPECT_EQ(line_of("pointcloud 2 1\n0 0\n1 1\n"), 3u);
  EXPECT_EQ(line_of("pointcloud 2 1\n0 nan\n"), 2u);
  EXPECT_EQ(line_of("pointcloud 2 1\n0 0\n"), 0u);
}

TEST(Cli, GenerateWritesHeaderAndIsReproducible) {
  TempDir dir;
  const auto a = run({"generate", "--dist", "3d-cube", "--n", "1000", "--seed", "7", "--out",
                      dir.file("a.txt")});
  const auto b = run({"generate", "--dist", "3d-cube", "--n", "1000", "--seed", "7", "--out",
                      dir.file("b.txt")});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  ASSERT_EQ(b.code, kExitOk);
  const std::string text = slurp(dir.file("a.txt"));
  EXPECT_EQ(lines(text).size(), 1001u);
  EXPECT_EQ(lines(text)[0], "pointcloud 3 1000");
  EXPECT_EQ(text, slurp(dir.file("b.txt")));

  const auto empty = run({"generate", "--dist", "2d-kuzmin", "--n", "0"});
  EXPECT_EQ(empty.code, kExitOk);
  EXPECT_EQ(empty.out, "pointcloud 2 0\n");
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"generate", "--dist", "4d-cube"}).code, kExitUsage);
  EXPECT_EQ(run({"knn-graph"}).code, kExitUsage);
  EXPECT_EQ(run({"knn-graph", "--input", "/nonexistent/file"}).code, kExitUsage);

  TempDir dir;
  write_text(dir.file("bad.txt"), "pointcloud 2 2\n0 0\n0.5\n");
  const auto bad = run({"knn-graph", "--input", dir.file("bad.txt")});
  EXPECT_EQ(bad.code, kExitUsage);
  EXPECT_NE(bad.err.find("line 3"), std::string::npos) << bad.err;

  write_text(dir.file("ok.txt"), "pointcloud 2 2\n0 0\n0.5 0.5\n");
  EXPECT_EQ(run({"knn-graph", "--input", dir.file("ok.txt"), "--k", "0"}).code, kExitUsage);
  EXPECT_EQ(run({"knn-graph", "--input", dir.file("ok.txt"), "--variant", "up"}).code, kExitUsage);
  EXPECT_EQ(run({"knn-graph", "--input", dir.file("ok.txt"), "--bits", "40"}).code, kExitUsage);

  write_text(dir.file("far.txt"), "pointcloud 2 1\n3 0\n");
  EXPECT_EQ(run({"knn-graph", "--input", dir.file("far.txt")}).code, kExitUsage);
}

TEST(Cli, TwoPointGraph) {
  TempDir dir;
  write_text(dir.file("two.txt"), "pointcloud 2 2\n0.1 0.2\n0.7 0.9\n");
  for (const char* v : {"root", "leaf", "bit"}) {
    const auto r = run({"knn-graph", "--input", dir.file("two.txt"), "--k", "1", "--variant", v});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto rows = parse_knn_csv(r.out);
    ASSERT_EQ(lines(r.out).size(), 3u);
    EXPECT_EQ(rows.at(0), (std::vector<std::uint32_t>{1}));
    EXPECT_EQ(rows.at(1), (std::vector<std::uint32_t>{0}));
    EXPECT_NE(r.err.find("summary command=knn-graph"), std::string::npos);
  }
}

TEST(Cli, GraphMatchesOracle) {
  TempDir dir;
  ASSERT_EQ(run({"generate", "--dist", "3d-sphere", "--n", "800", "--seed", "4", "--out",
                 dir.file("s.txt")}).code, kExitOk);
  const auto r = run({"knn-graph", "--input", dir.file("s.txt"), "--k", "6", "--seed", "4",
                      "--visits"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("visits_mean="), std::string::npos);

  const auto cloud = read_point_cloud(dir.file("s.txt"));
  const auto q = unit_quantizer(3, 4);
  std::vector<QuantizedPoint> pts;
  for (const auto& p : cloud.points) pts.push_back(q.quantize(p));
  const auto oracle = oracle_knn_graph(pts, 6, 3);
  std::ostringstream expected;
  write_knn_csv(expected, oracle);
  EXPECT_EQ(r.out, expected.str());
}

TEST(Cli, QueryAgainstItselfIsGraphPlusSelf) {
  TempDir dir;
  ASSERT_EQ(run({"generate", "--dist", "2d-kuzmin", "--n", "2000", "--seed", "5", "--out",
                 dir.file("k.txt")}).code, kExitOk);
  const auto graph = run({"knn-graph", "--input", dir.file("k.txt"), "--k", "4"});
  const auto query = run({"query", "--input", dir.file("k.txt"), "--queries", dir.file("k.txt"),
                          "--k", "5"});
  ASSERT_EQ(graph.code, kExitOk);
  ASSERT_EQ(query.code, kExitOk) << query.err;
  const auto g = parse_knn_csv(graph.out);
  auto qr = parse_knn_csv(query.out);
  ASSERT_EQ(g.size(), qr.size());
  for (auto& [id, nbs] : qr) {
    // Every query sits on its own stored point; dropping it leaves the graph row.
    const auto self = std::find(nbs.begin(), nbs.end(), id);
    ASSERT_NE(self, nbs.end());
    nbs.erase(self);
    if (nbs.size() == 5) nbs.pop_back();
    EXPECT_EQ(nbs, g.at(id)) << "query " << id;
  }
}

TEST(Cli, QueryPresortAndSkips) {
  TempDir dir;
  ASSERT_EQ(run({"generate", "--dist", "3d-plummer", "--n", "3000", "--seed", "6", "--out",
                 dir.file("base.txt")}).code, kExitOk);
  ASSERT_EQ(run({"generate", "--dist", "3d-cube", "--n", "500", "--seed", "8", "--out",
                 dir.file("q.txt")}).code, kExitOk);
  const auto on = run({"query", "--input", dir.file("base.txt"), "--queries", dir.file("q.txt"),
                       "--k", "3"});
  const auto off = run({"query", "--input", dir.file("base.txt"), "--queries", dir.file("q.txt"),
                        "--k", "3", "--no-presort", "--variant", "root"});
  ASSERT_EQ(on.code, kExitOk);
  ASSERT_EQ(off.code, kExitOk);
  EXPECT_EQ(on.out, off.out);
  EXPECT_EQ(lines(on.out).size(), 1u + 500 * 3);

  write_text(dir.file("mixed.txt"), "pointcloud 3 3\n0.5 0.5 0.5\n1.5 0 0\n0.2 0.2 0.2\n");
  const auto mixed = run({"query", "--input", dir.file("base.txt"), "--queries",
                          dir.file("mixed.txt")});
  ASSERT_EQ(mixed.code, kExitOk);
  EXPECT_NE(mixed.err.find("skip query 1: outside the universe box"), std::string::npos);
  const auto rows = parse_knn_csv(mixed.out);
  EXPECT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows.count(1), 0u);

  write_text(dir.file("flat.txt"), "pointcloud 2 1\n0.5 0.5\n");
  EXPECT_EQ(run({"query", "--input", dir.file("base.txt"), "--queries", dir.file("flat.txt")}).code,
            kExitUsage);
}

TEST(Cli, QueryOnStoredPositionFindsIt) {
  TempDir dir;
  write_text(dir.file("base.txt"), "pointcloud 2 3\n0.1 0.1\n0.4 0.8\n0.9 0.3\n");
  write_text(dir.file("q.txt"), "pointcloud 2 1\n0.4 0.8\n");
  const auto r = run({"query", "--input", dir.file("base.txt"), "--queries", dir.file("q.txt")});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, std::string(kKnnCsvHeader) + "\n0,1,0\n");
}

TEST(Cli, UpdateBenchRows) {
  const auto r = run({"update-bench", "--n", "20000", "--batch-sizes", "1,100,1000"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls[0], kUpdateCsvHeader);
  EXPECT_EQ(ls[1].rfind("1,", 0), 0u);
  EXPECT_EQ(ls[3].rfind("1000,", 0), 0u);
  EXPECT_NE(r.err.find("monotone_trend="), std::string::npos);
}

TEST(Cli, ScaleBenchRows) {
  const auto r = run({"scale-bench", "--axis", "k", "--n", "5000", "--values", "1,10"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 3u);
  EXPECT_EQ(ls[0], kScaleCsvHeader);
  EXPECT_EQ(ls[1].rfind("k,5000,1,", 0), 0u);
  EXPECT_EQ(run({"scale-bench", "--axis", "x"}).code, kExitUsage);

  const auto threads = run({"scale-bench", "--axis", "threads", "--n", "3000", "--values", "1"});
  ASSERT_EQ(threads.code, kExitOk);
  EXPECT_EQ(lines(threads.out)[1].rfind("threads,3000,1,1,leaf,", 0), 0u);
}

TEST(Cli, MonotoneTrend) {
  const std::vector<std::size_t> sizes{1, 1000, 10000, 100000};
  EXPECT_TRUE(monotone_trend(sizes, {1.0, 5.0, 4.0, 4.5}, 1000, 0.2));
  EXPECT_FALSE(monotone_trend(sizes, {1.0, 5.0, 4.0, 5.0}, 1000, 0.2));
  EXPECT_TRUE(monotone_trend(sizes, {0.1, 5.0, 4.0, 3.0}, 1000, 0.0));
}

TEST(Cli, VerifyPassesAndCatchesInjectedFault) {
  const auto ok = run({"verify", "--n", "300"});
  EXPECT_EQ(ok.code, kExitOk) << ok.out;
  EXPECT_NE(ok.out.find("verify: all properties hold"), std::string::npos);

  const auto bad = run({"verify", "--n", "300", "--inject-fault", "unsorted-build"});
  EXPECT_EQ(bad.code, kExitVerifyFailed);
  EXPECT_NE(bad.out.find("FAIL build-invariants"), std::string::npos) << bad.out;
  EXPECT_EQ(run({"verify", "--inject-fault", "nope"}).code, kExitUsage);
}

TEST(Cli, PerNeighborCostDoesNotBlowUpWithK) {
  const auto r = run({"scale-bench", "--axis", "k", "--n", "20000", "--values", "1,100"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 3u);
  auto per_neighbor = [](const std::string& row) {
    std::vector<std::string> cols;
    std::istringstream in(row);
    for (std::string c; std::getline(in, c, ',');) cols.push_back(c);
    return std::stod(cols.at(8));
  };
  EXPECT_LE(per_neighbor(ls[2]), 3.0 * per_neighbor(ls[1])) << r.out;
}
