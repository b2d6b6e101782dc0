#include "ooskit/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

namespace ooskit {

PixelCategory categorize(const CellLabel& label, ViabilityMode mode) {
  PixelCategory cat;
  if (label.on_boundary) return cat;
  const ClassId first = label.ordering.at(0);
  if (first == kOosSlot) {
    cat.kind = PixelCategory::Kind::oos_core;
    return cat;
  }
  cat.kind = PixelCategory::Kind::class_region;
  cat.top = first;
  cat.viable = mode == ViabilityMode::standard || (label.ordering.size() > 1 && label.ordering[1] == kOosSlot);
  return cat;
}

Rgb Raster::at(int col, int row) const {
  const std::size_t i = 3 * (static_cast<std::size_t>(row) * width + col);
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

Point DecisionMap::pixel_center(int col, int row) const {
  Point p(2);
  p[0] = bounds.xmin + (col + 0.5) * (bounds.xmax - bounds.xmin) / image.width;
  p[1] = bounds.ymax - (row + 0.5) * (bounds.ymax - bounds.ymin) / image.height;
  return p;
}

namespace {

Rgb hsv(double h, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(h, 1.0) * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  auto q = [](double u) { return static_cast<std::uint8_t>(std::lround(std::clamp(u, 0.0, 1.0) * 255.0)); };
  return {q(r + m), q(g + m), q(b + m)};
}

Rgb halve(Rgb c) { return {static_cast<std::uint8_t>(c[0] / 2), static_cast<std::uint8_t>(c[1] / 2), static_cast<std::uint8_t>(c[2] / 2)}; }

constexpr Rgb kCore{70, 70, 70};
constexpr Rgb kTie{0, 0, 0};

}  // namespace

Palette::Palette(const PrototypeContext& ctx) {
  for (const auto& [id, p] : ctx.prototypes) ids_.push_back(id);
}

Rgb Palette::color(const PixelCategory& cat, bool boundary) const {
  Rgb c = kTie;
  switch (cat.kind) {
    case PixelCategory::Kind::tie:
      return kTie;
    case PixelCategory::Kind::oos_core:
      c = kCore;
      break;
    case PixelCategory::Kind::class_region: {
      const auto it = std::find(ids_.begin(), ids_.end(), cat.top);
      const double h = static_cast<double>(it - ids_.begin()) / static_cast<double>(ids_.size());
      c = cat.viable ? hsv(h, 0.85, 0.95) : hsv(h, 0.22, 0.92);
      break;
    }
  }
  return boundary ? halve(c) : c;
}

bool Palette::decode(const Rgb& rgb, PixelCategory& cat, bool& boundary) const {
  std::vector<PixelCategory> all{PixelCategory{PixelCategory::Kind::oos_core, kOosSlot, false}};
  for (ClassId id : ids_) {
    all.push_back({PixelCategory::Kind::class_region, id, true});
    all.push_back({PixelCategory::Kind::class_region, id, false});
  }
  for (const auto& c : all) {
    for (bool b : {false, true}) {
      if (color(c, b) == rgb) {
        cat = c;
        boundary = b;
        return true;
      }
    }
  }
  if (rgb == kTie) {
    cat = PixelCategory{};
    boundary = false;
    return true;
  }
  return false;
}

DecisionMap render_decision_map(const PrototypeContext& ctx, ViabilityMode mode, const Bounds& bounds,
                                int width, int height, int threads) {
  ctx.validate();
  if (ctx.dim() != 2) throw InvalidArgument("decision maps need 2-D prototypes, got d=" + std::to_string(ctx.dim()));
  if (width < 1 || height < 1) throw InvalidArgument("resolution must be positive");
  if (!(bounds.xmax > bounds.xmin && bounds.ymax > bounds.ymin)) throw InvalidArgument("empty bounds rectangle");
  if (mode == ViabilityMode::generic && !ctx.generic) throw InvalidArgument("generic mode needs a generic point");
  require_distinct_points(ctx);

  PrototypeContext use = ctx;
  if (mode == ViabilityMode::standard) use.generic.reset();

  DecisionMap map;
  map.bounds = bounds;
  map.image.width = width;
  map.image.height = height;
  map.image.rgb.assign(static_cast<std::size_t>(width) * height * 3, 0);
  map.categories.resize(static_cast<std::size_t>(width) * height);
  map.boundary.assign(static_cast<std::size_t>(width) * height, false);
  std::vector<std::vector<ClassId>> orderings(static_cast<std::size_t>(width) * height);

  auto classify_rows = [&](int first, int step) {
    for (int row = first; row < height; row += step) {
      for (int col = 0; col < width; ++col) {
        const std::size_t i = static_cast<std::size_t>(row) * width + col;
        const CellLabel label = classify_cell(map.pixel_center(col, row), use);
        map.categories[i] = categorize(label, mode);
        orderings[i] = label.on_boundary ? std::vector<ClassId>{} : label.ordering;
      }
    }
  };
  const int workers = std::max(1, std::min(threads, height));
  if (workers == 1) {
    classify_rows(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(classify_rows, w, workers);
    for (auto& t : pool) t.join();
  }

  const Palette palette(use);
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      const std::size_t i = static_cast<std::size_t>(row) * width + col;
      bool edge = false;
      if (col + 1 < width && orderings[i] != orderings[i + 1]) edge = true;
      if (col > 0 && orderings[i] != orderings[i - 1]) edge = true;
      if (row + 1 < height && orderings[i] != orderings[i + width]) edge = true;
      if (row > 0 && orderings[i] != orderings[i - width]) edge = true;
      map.boundary[i] = edge;
      const Rgb c = palette.color(map.categories[i], edge);
      std::copy(c.begin(), c.end(), map.image.rgb.begin() + 3 * i);
    }
  }
  return map;
}

void write_ppm(const Raster& image, std::ostream& out) {
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()), static_cast<std::streamsize>(image.rgb.size()));
}

void write_ppm(const Raster& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot open " + path + " for writing");
  write_ppm(image, out);
  if (!out) throw RuntimeError("failed writing " + path);
}

Raster read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("cannot open " + path);
  std::string magic;
  int maxval = 0;
  Raster r;
  in >> magic >> r.width >> r.height >> maxval;
  if (magic != "P6" || maxval != 255 || r.width < 1 || r.height < 1) throw RuntimeError(path + ": not an 8-bit P6 PPM");
  in.get();
  r.rgb.resize(static_cast<std::size_t>(r.width) * r.height * 3);
  in.read(reinterpret_cast<char*>(r.rgb.data()), static_cast<std::streamsize>(r.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(r.rgb.size())) throw RuntimeError(path + ": truncated pixel data");
  return r;
}

}  // namespace ooskit
