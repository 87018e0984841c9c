#pragma once

#include <cstdint>
#include <string>

#include "gradsort/grid.hpp"
#include "gradsort/matrix.hpp"

namespace gradsort::io {

enum class DatasetKind { rgb_color, feature_csv };

const char* to_string(DatasetKind kind);

struct Dataset {
  std::string name;
  Matrix vectors;  // n x d
  DatasetKind kind = DatasetKind::feature_csv;
  std::string provenance;
};

// n >= 2, finite entries, not all rows identical.
void validate(const Dataset& ds);

// n random RGB colors, components uniform in [0, 1].
Dataset gen_colors(std::size_t n, std::uint64_t seed);

// One vector per line, comma separated. Lines starting with '#' are comments;
// a first line "# rgb-color ..." marks the file as a color dataset.
Dataset load_csv(const std::string& path);
Dataset parse_csv(const std::string& text, const std::string& name);

// Writes 17 significant digits so load_csv reproduces the values exactly.
std::string to_csv(const Dataset& ds);
void save_csv(const Dataset& ds, const std::string& path);

// Binary PPM (P6) with one solid cell_px x cell_px block per grid cell; cell c
// shows vector order[c].
std::string to_ppm(const Dataset& ds, const Permutation& order, const GridShape& grid, std::size_t cell_px);
void render_ppm(const Dataset& ds, const Permutation& order, const GridShape& grid, std::size_t cell_px,
                const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace gradsort::io
