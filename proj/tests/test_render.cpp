#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ooskit/render.hpp"
#include "ooskit/rng.hpp"
#include "test_helpers.hpp"

using namespace ooskit;
using namespace ooskit::testing;
using Kind = PixelCategory::Kind;

TEST_CASE("ppm header and payload") {
  const auto map = render_decision_map(config_b(), ViabilityMode::generic, {}, 7, 5);
  std::ostringstream os;
  write_ppm(map.image, os);
  const std::string s = os.str();
  const std::string header = "P6\n7 5\n255\n";
  REQUIRE(s.size() == header.size() + 7 * 5 * 3);
  CHECK(s.substr(0, header.size()) == header);

  const auto path = std::filesystem::temp_directory_path() / "ooskit_render_roundtrip.ppm";
  write_ppm(map.image, path.string());
  const Raster back = read_ppm(path.string());
  CHECK(back.width == 7);
  CHECK(back.height == 5);
  CHECK(back.rgb == map.image.rgb);
  std::filesystem::remove(path);
}

TEST_CASE("palette decodes every colour it produces") {
  const Palette pal(config_b());
  std::set<Rgb> seen;
  std::vector<PixelCategory> cats{{Kind::oos_core, kOosSlot, false}};
  for (ClassId id = 1; id <= 4; ++id) {
    cats.push_back({Kind::class_region, id, true});
    cats.push_back({Kind::class_region, id, false});
  }
  for (const auto& c : cats) {
    for (bool b : {false, true}) {
      const Rgb rgb = pal.color(c, b);
      CHECK(seen.insert(rgb).second);
      PixelCategory got;
      bool edge = !b;
      REQUIRE(pal.decode(rgb, got, edge));
      CHECK(got == c);
      CHECK(edge == b);
    }
  }
}

TEST_CASE("pixels agree with classify_cell") {
  const PrototypeContext ctx = config_b();
  const auto map = render_decision_map(ctx, ViabilityMode::generic, {}, 128, 96);
  const Palette pal(ctx);
  CounterRng rng(1, 0);
  for (int s = 0; s < 500; ++s) {
    const int col = static_cast<int>(rng.uniform_index(128)), row = static_cast<int>(rng.uniform_index(96));
    const PixelCategory expect = categorize(classify_cell(map.pixel_center(col, row), ctx), ViabilityMode::generic);
    PixelCategory got;
    bool edge = false;
    if (expect.kind == Kind::tie) continue;
    REQUIRE(pal.decode(map.image.at(col, row), got, edge));
    CHECK(got == expect);
  }
  CHECK(map.pixel_center(0, 0)[1] > map.pixel_center(0, 95)[1]);
  CHECK(map.pixel_center(0, 0)[0] < map.pixel_center(127, 0)[0]);
}

TEST_CASE("four viable lobes around the core") {
  const auto map = render_decision_map(config_b(), ViabilityMode::generic, {}, 200, 200);
  std::map<ClassId, long> viable;
  long core = 0;
  for (const auto& c : map.categories) {
    if (c.kind == Kind::class_region && c.viable) viable[c.top]++;
    core += c.kind == Kind::oos_core;
  }
  CHECK(viable.size() == 4);
  CHECK(core > 0);
  // The origin itself is a tie among the four prototypes; a point next to it is core.
  const auto center = render_decision_map(config_b(), ViabilityMode::generic, {-1, 1, -1, 1}, 3, 3);
  CHECK(center.categories[4].kind == Kind::tie);
  const auto near = render_decision_map(config_b(), ViabilityMode::generic, {-0.9, 1.1, -0.95, 1.05}, 3, 3);
  CHECK(near.categories[4].kind == Kind::oos_core);
}

TEST_CASE("single class splits along one line") {
  PrototypeContext c;
  c.prototypes = {{1, pt({2, 0})}};
  c.generic = pt({0, 0});
  const int w = 40, h = 10;
  const auto map = render_decision_map(c, ViabilityMode::generic, {-1, 3, -1, 1}, w, h);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const auto& cat = map.categories[row * w + col];
      if (col < w / 2) CHECK(cat.kind == Kind::oos_core);
      else CHECK((cat.kind == Kind::class_region && cat.top == 1 && cat.viable));
      CHECK(map.boundary[row * w + col] == (col == w / 2 - 1 || col == w / 2));
    }
  }
}

TEST_CASE("standard mode is an all-viable Voronoi map") {
  PrototypeContext c;
  c.prototypes = {{1, pt({1, 0})}, {2, pt({-1, 0.5})}, {3, pt({0, -1})}};
  const auto map = render_decision_map(c, ViabilityMode::standard, {}, 64, 64);
  std::set<ClassId> tops;
  for (const auto& cat : map.categories) {
    CHECK(cat.kind != Kind::oos_core);
    if (cat.kind == Kind::class_region) {
      CHECK(cat.viable);
      tops.insert(cat.top);
    }
  }
  CHECK(tops.size() == 3);
}

TEST_CASE("threads do not change the image") {
  const auto one = render_decision_map(config_b(), ViabilityMode::generic, {}, 97, 61, 1);
  const auto many = render_decision_map(config_b(), ViabilityMode::generic, {}, 97, 61, 4);
  CHECK(one.image.rgb == many.image.rgb);
}

TEST_CASE("render rejects other dimensions") {
  PrototypeContext c;
  c.prototypes = {{1, pt({1, 0, 0})}};
  c.generic = pt({0, 0, 0});
  CHECK_THROWS_AS(render_decision_map(c, ViabilityMode::generic, {}, 8, 8), InvalidArgument);
}
