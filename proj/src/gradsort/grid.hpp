#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gradsort/error.hpp"

namespace gradsort {

// Rectangular grid, cells numbered row-major: cell i sits at column
// i % nx, row i / nx.
class GridShape {
 public:
  GridShape(std::size_t nx, std::size_t ny) : nx_(nx), ny_(ny) {
    if (nx == 0 || ny == 0) fail(ErrorKind::usage, "grid dimensions must be positive");
  }

  // Parses "WxH".
  static GridShape parse(const std::string& text);

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t size() const noexcept { return nx_ * ny_; }
  std::size_t col(std::size_t cell) const noexcept { return cell % nx_; }
  std::size_t row(std::size_t cell) const noexcept { return cell / nx_; }

  std::string str() const { return std::to_string(nx_) + "x" + std::to_string(ny_); }

 private:
  std::size_t nx_;
  std::size_t ny_;
};

// Permutation in "order" form: entry c is the index of the input vector placed
// in grid cell c. This is the row-wise argmax of the hard permutation matrix,
// so Y = P * X gives Y[c] = X[order[c]].
using Permutation = std::vector<std::size_t>;

bool is_bijection(const Permutation& p);
Permutation inverse(const Permutation& p);

}  // namespace gradsort
