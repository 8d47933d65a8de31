#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "zdtree/datagen.hpp"

namespace zdtree::cli {

/// Malformed point file; `line` is 1-based.
class PointFileError : public std::runtime_error {
 public:
  PointFileError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Format:
//   pointcloud <d> <n>
//   n lines of d coordinates separated by single spaces, each written as the
//   shortest decimal that parses back to the same double.
// Point ids are the 0-based row index.
void write_point_cloud(std::ostream& out, const PointCloud& cloud);
void write_point_cloud(const std::string& path, const PointCloud& cloud);
PointCloud read_point_cloud(std::istream& in);
PointCloud read_point_cloud(const std::string& path);

std::string format_double(double v);

}  // namespace zdtree::cli
