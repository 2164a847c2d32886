#pragma once

#include <string>
#include <vector>

#include "dbcore/geometry.hpp"
#include "dbcore/types.hpp"

namespace dbcore {

// All loaders throw std::runtime_error on unreadable or malformed input.

// Binary map container: 8-byte magic "F32MAP\n\0", ASCII "<rows> <cols>\n",
// then rows*cols little-endian float32 values in row-major order.
void write_float_map(const std::string& path, const FloatMap& map);
FloatMap read_float_map(const std::string& path);

// Polygon list, one polygon per line as "x1,y1,x2,y2,...". Blank lines and
// lines starting with '#' are skipped. LF line endings.
void write_polygons(const std::string& path, const std::vector<Polygon>& polys);
std::vector<Polygon> read_polygons(const std::string& path);

// Detection list, one per line as "score;x1,y1,x2,y2,..." with the score
// formatted "%.4f".
struct ScoredPolygon {
  double score;
  Polygon polygon;
};
void write_detections(const std::string& path, const std::vector<ScoredPolygon>& dets);
std::vector<ScoredPolygon> read_detections(const std::string& path);

// 8-bit binary PGM preview; values clamped to [0, 1] then scaled to 0..255.
void write_pgm(const std::string& path, const FloatMap& map);

// Numeric text formatting used across all text artifacts ("%.9g").
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace dbcore
