#include <doctest.h>

#include <cstdint>
#include <stdexcept>
#include <string>

#include "dbcore/io.hpp"
#include "dbcore/rng.hpp"
#include "helpers.hpp"

using dbcore::FloatMap;

TEST_SUITE("io") {

TEST_CASE("float map round trip") {
  testutil::TempDir tmp("io");
  dbcore::Xoshiro256pp rng(11);
  FloatMap map(7, 5);
  for (long i = 0; i < map.size(); ++i) map.data()[i] = rng.uniform(-10.0, 10.0);
  const auto path = tmp.str("map.f32map");
  dbcore::write_float_map(path, map);
  const FloatMap back = dbcore::read_float_map(path);
  REQUIRE(back.rows() == 7);
  REQUIRE(back.cols() == 5);
  for (long i = 0; i < map.size(); ++i) {
    // Container stores float32, so the round trip is exact after one cast.
    CHECK(back.data()[i] == static_cast<double>(static_cast<float>(map.data()[i])));
  }
}

TEST_CASE("float map write twice is byte identical") {
  testutil::TempDir tmp("io");
  FloatMap map = FloatMap::Constant(3, 4, 0.25);
  map(1, 2) = -1.5;
  dbcore::write_float_map(tmp.str("a"), map);
  dbcore::write_float_map(tmp.str("b"), map);
  CHECK(dbcore::read_text_file(tmp.str("a")) == dbcore::read_text_file(tmp.str("b")));
}

TEST_CASE("float map loader rejects corrupt input") {
  testutil::TempDir tmp("io");
  dbcore::write_text_file(tmp.str("bad1"), "NOTAMAP\n2 2\n0000000000000000");
  CHECK_THROWS_AS(dbcore::read_float_map(tmp.str("bad1")), std::runtime_error);
  dbcore::write_text_file(tmp.str("bad2"), std::string("F32MAP\n\0", 8) + "2 2\nxy");
  CHECK_THROWS_AS(dbcore::read_float_map(tmp.str("bad2")), std::runtime_error);
  CHECK_THROWS_AS(dbcore::read_float_map(tmp.str("absent")), std::runtime_error);
}

TEST_CASE("polygon file round trip with comments and blank lines") {
  testutil::TempDir tmp("io");
  std::vector<dbcore::Polygon> polys = {testutil::square(0, 0, 10),
                                        testutil::square(20, 20, 4.25)};
  const auto path = tmp.str("polys.txt");
  dbcore::write_polygons(path, polys);
  const auto text = dbcore::read_text_file(path);
  dbcore::write_text_file(path, "# header comment\n\n" + text + "\n# trailing\n");
  const auto back = dbcore::read_polygons(path);
  REQUIRE(back.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    REQUIRE(back[i].size() == polys[i].size());
    for (int k = 0; k < back[i].size(); ++k)
      CHECK((back[i][k] - polys[i][k]).norm() < 1e-7);
  }
}

TEST_CASE("polygon loader tolerates CRLF and reports the bad line") {
  testutil::TempDir tmp("io");
  dbcore::write_text_file(tmp.str("crlf.txt"), "0,0,4,0,4,4,0,4\r\n");
  CHECK(dbcore::read_polygons(tmp.str("crlf.txt")).size() == 1);
  dbcore::write_text_file(tmp.str("bad.txt"), "0,0,4,0,4,4,0,4\n1,2,3\n");
  try {
    dbcore::read_polygons(tmp.str("bad.txt"));
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("empty polygon file parses to an empty list") {
  testutil::TempDir tmp("io");
  dbcore::write_text_file(tmp.str("empty.txt"), "# nothing here\n");
  CHECK(dbcore::read_polygons(tmp.str("empty.txt")).empty());
}

TEST_CASE("detection file round trip keeps scores at report precision") {
  testutil::TempDir tmp("io");
  std::vector<dbcore::ScoredPolygon> dets = {{0.87654321, testutil::square(1, 1, 5)},
                                             {0.5, testutil::square(10, 10, 3)}};
  const auto path = tmp.str("dets.txt");
  dbcore::write_detections(path, dets);
  const auto back = dbcore::read_detections(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].score == doctest::Approx(0.8765).epsilon(1e-12));
  CHECK(back[1].score == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(back[0].polygon.size() == 4);
}

TEST_CASE("pgm preview has the expected header and clamped payload") {
  testutil::TempDir tmp("io");
  FloatMap map(1, 4);
  map << -0.5, 0.0, 0.5, 2.0;
  dbcore::write_pgm(tmp.str("m.pgm"), map);
  const auto text = dbcore::read_text_file(tmp.str("m.pgm"));
  CHECK(text.substr(0, 11) == "P5\n4 1\n255\n");
  REQUIRE(text.size() == 11 + 4);
  CHECK(static_cast<unsigned char>(text[11]) == 0);
  CHECK(static_cast<unsigned char>(text[12]) == 0);
  CHECK(static_cast<unsigned char>(text[13]) == 128);
  CHECK(static_cast<unsigned char>(text[14]) == 255);
}

TEST_CASE("double formatting is compact and stable") {
  CHECK(dbcore::format_double(0.1) == "0.1");
  CHECK(dbcore::format_double(2.175) == "2.175");
  CHECK(dbcore::format_double(-0.0) == "-0");
  CHECK(dbcore::format_double(1e-9) == "1e-09");
}

}  // TEST_SUITE
