#include "dbcore/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dbcore {
namespace {

constexpr char kMagic[8] = {'F', '3', '2', 'M', 'A', 'P', '\n', '\0'};

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

std::vector<double> parse_number_list(const std::string& text, const std::string& path,
                                      int line_no) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(field, &used);
    } catch (const std::exception&) {
      fail(path, "line " + std::to_string(line_no) + ": bad number '" + field + "'");
    }
    while (used < field.size() && std::isspace(static_cast<unsigned char>(field[used]))) ++used;
    if (used != field.size())
      fail(path, "line " + std::to_string(line_no) + ": bad number '" + field + "'");
    out.push_back(v);
  }
  return out;
}

Polygon polygon_from_numbers(const std::vector<double>& nums, const std::string& path,
                             int line_no) {
  if (nums.size() < 6 || nums.size() % 2 != 0)
    fail(path, "line " + std::to_string(line_no) + ": expected an even list of at least 6 coordinates");
  std::vector<Vec2> verts;
  verts.reserve(nums.size() / 2);
  for (size_t i = 0; i < nums.size(); i += 2) verts.emplace_back(nums[i], nums[i + 1]);
  try {
    return Polygon(std::move(verts));
  } catch (const std::invalid_argument& e) {
    fail(path, "line " + std::to_string(line_no) + ": " + e.what());
  }
}

std::string polygon_line(const Polygon& poly) {
  std::string line;
  for (int i = 0; i < poly.size(); ++i) {
    if (i > 0) line += ',';
    line += format_double(poly[i].x());
    line += ',';
    line += format_double(poly[i].y());
  }
  return line;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_float_map(const std::string& path, const FloatMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out.write(kMagic, sizeof(kMagic));
  out << map.rows() << ' ' << map.cols() << '\n';
  for (Eigen::Index r = 0; r < map.rows(); ++r) {
    for (Eigen::Index c = 0; c < map.cols(); ++c) {
      const float f = static_cast<float>(map(r, c));
      char bytes[4];
      std::memcpy(bytes, &f, 4);  // host is little-endian x86
      out.write(bytes, 4);
    }
  }
  if (!out) fail(path, "write failed");
}

FloatMap read_float_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) fail(path, "bad magic");
  long rows = 0, cols = 0;
  in >> rows >> cols;
  char nl = '\0';
  in.get(nl);
  if (!in || nl != '\n' || rows <= 0 || cols <= 0) fail(path, "bad header");
  FloatMap map(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      char bytes[4];
      in.read(bytes, 4);
      if (!in) fail(path, "truncated payload");
      float f = 0.0f;
      std::memcpy(&f, bytes, 4);
      map(r, c) = static_cast<double>(f);
    }
  }
  return map;
}

void write_polygons(const std::string& path, const std::vector<Polygon>& polys) {
  std::string text;
  for (const Polygon& p : polys) {
    text += polygon_line(p);
    text += '\n';
  }
  write_text_file(path, text);
}

std::vector<Polygon> read_polygons(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  std::vector<Polygon> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(polygon_from_numbers(parse_number_list(line, path, line_no), path, line_no));
  }
  return out;
}

void write_detections(const std::string& path, const std::vector<ScoredPolygon>& dets) {
  std::string text;
  for (const ScoredPolygon& d : dets) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", d.score);
    text += buf;
    text += ';';
    text += polygon_line(d.polygon);
    text += '\n';
  }
  write_text_file(path, text);
}

std::vector<ScoredPolygon> read_detections(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  std::vector<ScoredPolygon> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t semi = line.find(';');
    if (semi == std::string::npos)
      fail(path, "line " + std::to_string(line_no) + ": missing score separator ';'");
    const auto score = parse_number_list(line.substr(0, semi), path, line_no);
    if (score.size() != 1) fail(path, "line " + std::to_string(line_no) + ": bad score");
    out.push_back({score[0], polygon_from_numbers(
                                 parse_number_list(line.substr(semi + 1), path, line_no),
                                 path, line_no)});
  }
  return out;
}

void write_pgm(const std::string& path, const FloatMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "P5\n" << map.cols() << ' ' << map.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < map.rows(); ++r) {
    for (Eigen::Index c = 0; c < map.cols(); ++c) {
      double v = map(r, c);
      v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
      const unsigned char byte = static_cast<unsigned char>(std::lround(v * 255.0));
      out.put(static_cast<char>(byte));
    }
  }
  if (!out) fail(path, "write failed");
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);  // binary: keep LF on every platform
  if (!out) fail(path, "cannot open for writing");
  out << content;
  if (!out) fail(path, "write failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dbcore
