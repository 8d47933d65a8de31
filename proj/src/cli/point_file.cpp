#include "zdtree/cli/point_file.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <system_error>

namespace zdtree::cli {

namespace {

std::string_view next_token(std::string_view& rest) {
  const auto end = rest.find(' ');
  const std::string_view tok = rest.substr(0, end);
  rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end + 1);
  return tok;
}

template <class T>
bool parse_number(std::string_view tok, T& value) {
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  return ec == std::errc{} && ptr == tok.data() + tok.size();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("cannot format coordinate");
  return std::string(buf, ptr);
}

void write_point_cloud(std::ostream& out, const PointCloud& cloud) {
  out << "pointcloud " << cloud.dim << ' ' << cloud.points.size() << '\n';
  std::string line;
  for (const auto& p : cloud.points) {
    line.clear();
    for (int i = 0; i < cloud.dim; ++i) {
      if (i) line += ' ';
      line += format_double(p.coords[i]);
    }
    line += '\n';
    out << line;
  }
}

void write_point_cloud(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_point_cloud(out, cloud);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

PointCloud read_point_cloud(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw PointFileError(1, "missing header");
  std::string_view rest = line;
  int dim = 0;
  std::size_t n = 0;
  if (next_token(rest) != "pointcloud" || !parse_number(next_token(rest), dim) ||
      !parse_number(next_token(rest), n) || !rest.empty()) {
    throw PointFileError(1, "expected header 'pointcloud <d> <n>'");
  }
  if (dim != 2 && dim != 3) throw PointFileError(1, "dimension must be 2 or 3");

  PointCloud cloud;
  cloud.dim = dim;
  cloud.distribution = "file";
  cloud.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lineno = i + 2;
    if (!std::getline(in, line)) {
      throw PointFileError(lineno, "expected " + std::to_string(n) + " points, file ends early");
    }
    rest = line;
    RawPoint& p = cloud.points[i];
    p.id = static_cast<PointId>(i);
    for (int a = 0; a < dim; ++a) {
      const std::string_view tok = next_token(rest);
      if (!parse_number(tok, p.coords[a]) || !std::isfinite(p.coords[a])) {
        throw PointFileError(lineno, "bad coordinate '" + std::string(tok) + "'");
      }
    }
    if (!rest.empty()) throw PointFileError(lineno, "expected " + std::to_string(dim) + " values");
  }
  while (std::getline(in, line)) {
    if (!line.empty()) throw PointFileError(n + 2, "trailing data after " + std::to_string(n) + " points");
  }
  return cloud;
}

PointCloud read_point_cloud(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_point_cloud(in);
}

}  // namespace zdtree::cli
