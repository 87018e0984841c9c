#include "gradsort/grid.hpp"

#include <charconv>

namespace gradsort {

GridShape GridShape::parse(const std::string& text) {
  const auto x = text.find_first_of("xX");
  auto bad = [&] { fail(ErrorKind::usage, "grid must look like WxH, got '" + text + "'"); };
  if (x == std::string::npos || x == 0 || x + 1 >= text.size()) bad();
  std::size_t w = 0, h = 0;
  const char* b = text.data();
  auto [p1, e1] = std::from_chars(b, b + x, w);
  auto [p2, e2] = std::from_chars(b + x + 1, b + text.size(), h);
  if (e1 != std::errc() || e2 != std::errc() || p1 != b + x || p2 != b + text.size()) bad();
  return GridShape(w, h);
}

bool is_bijection(const Permutation& p) {
  std::vector<bool> seen(p.size(), false);
  for (std::size_t v : p) {
    if (v >= p.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

Permutation inverse(const Permutation& p) {
  Permutation inv(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) inv[p[i]] = i;
  return inv;
}

}  // namespace gradsort
