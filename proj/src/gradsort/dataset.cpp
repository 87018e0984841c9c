#include "gradsort/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace gradsort::io {

const char* to_string(DatasetKind kind) {
  return kind == DatasetKind::rgb_color ? "rgb-color" : "feature-csv";
}

void validate(const Dataset& ds) {
  const Matrix& x = ds.vectors;
  if (x.rows() < 2) fail(ErrorKind::data, "dataset '" + ds.name + "' needs at least 2 vectors");
  if (x.cols() < 1) fail(ErrorKind::data, "dataset '" + ds.name + "' has zero-dimensional vectors");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]))
      fail(ErrorKind::data, "dataset '" + ds.name + "' has a non-finite value in row " + std::to_string(i / x.cols()));
  for (std::size_t r = 1; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c)
      if (x(r, c) != x(0, c)) return;
  fail(ErrorKind::data, "dataset '" + ds.name + "' has all vectors identical");
}

Dataset gen_colors(std::size_t n, std::uint64_t seed) {
  if (n < 2) fail(ErrorKind::usage, "gen_colors: n must be >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dataset ds;
  ds.name = "colors-" + std::to_string(n);
  ds.kind = DatasetKind::rgb_color;
  ds.provenance = "gen-colors seed=" + std::to_string(seed);
  ds.vectors = Matrix(n, 3);
  for (std::size_t i = 0; i < ds.vectors.size(); ++i) ds.vectors[i] = unit(rng);
  return ds;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string base_name(const std::string& path) {
  const auto slash = path.find_last_of('/');
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = name.rfind('.');
  return dot == std::string::npos || dot == 0 ? name : name.substr(0, dot);
}

}  // namespace

Dataset parse_csv(const std::string& text, const std::string& name) {
  Dataset ds;
  ds.name = name;
  std::vector<double> values;
  std::size_t cols = 0, rows = 0, line_no = 0;
  bool first_content = true;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      if (first_content && view.substr(0, 11) == "# rgb-color") ds.kind = DatasetKind::rgb_color;
      first_content = false;
      continue;
    }
    first_content = false;
    std::size_t count = 0;
    std::string_view rest = view;
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view cell = trim(rest.substr(0, comma));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        fail(ErrorKind::data, "csv line " + std::to_string(line_no) + ": non-numeric cell '" + std::string(cell) + "'");
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (rows == 0) cols = count;
    else if (count != cols)
      fail(ErrorKind::data, "csv line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                                " values, found " + std::to_string(count));
    ++rows;
  }
  if (rows < 2) fail(ErrorKind::data, "csv '" + name + "' has " + std::to_string(rows) + " vectors, need at least 2");
  ds.vectors = Matrix(rows, cols, std::move(values));
  validate(ds);
  return ds;
}

Dataset load_csv(const std::string& path) {
  Dataset ds = parse_csv(read_file(path), base_name(path));
  ds.provenance = path;
  return ds;
}

std::string to_csv(const Dataset& ds) {
  std::string out = ds.kind == DatasetKind::rgb_color ? "# rgb-color" : "# feature-csv";
  if (!ds.provenance.empty()) out += " " + ds.provenance;
  out += '\n';
  char buf[32];
  const Matrix& x = ds.vectors;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (c) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", x(r, c));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void save_csv(const Dataset& ds, const std::string& path) { write_file(path, to_csv(ds)); }

std::string to_ppm(const Dataset& ds, const Permutation& order, const GridShape& grid, std::size_t cell_px) {
  const Matrix& x = ds.vectors;
  if (x.cols() != 3) fail(ErrorKind::unsupported, "render: dataset '" + ds.name + "' is not an RGB color set");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] >= 0.0 && x[i] <= 1.0))
      fail(ErrorKind::unsupported, "render: dataset '" + ds.name + "' has values outside [0, 1]");
  if (cell_px < 1) fail(ErrorKind::usage, "render: cell size must be >= 1 pixel");
  if (order.size() != x.rows() || !is_bijection(order))
    fail(ErrorKind::data, "render: permutation is not a bijection over the dataset");
  if (grid.size() != x.rows()) fail(ErrorKind::usage, "render: grid " + grid.str() + " does not match the dataset");

  const std::size_t width = grid.nx() * cell_px, height = grid.ny() * cell_px;
  std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + width * height * 3);
  for (std::size_t cell = 0; cell < grid.size(); ++cell) {
    unsigned char rgb[3];
    for (std::size_t k = 0; k < 3; ++k)
      rgb[k] = static_cast<unsigned char>(std::floor(x(order[cell], k) * 255.0 + 0.5));
    const std::size_t x0 = grid.col(cell) * cell_px, y0 = grid.row(cell) * cell_px;
    for (std::size_t py = y0; py < y0 + cell_px; ++py)
      for (std::size_t px = x0; px < x0 + cell_px; ++px) {
        const std::size_t at = header + (py * width + px) * 3;
        out[at] = static_cast<char>(rgb[0]);
        out[at + 1] = static_cast<char>(rgb[1]);
        out[at + 2] = static_cast<char>(rgb[2]);
      }
  }
  return out;
}

void render_ppm(const Dataset& ds, const Permutation& order, const GridShape& grid, std::size_t cell_px,
                const std::string& path) {
  write_file(path, to_ppm(ds, order, grid, cell_px));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::data, "cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::data, "write to '" + path + "' failed");
}

}  // namespace gradsort::io
