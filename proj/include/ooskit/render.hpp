#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ooskit/geometry.hpp"

namespace ooskit {

struct Bounds {
  double xmin = -2.0, xmax = 2.0, ymin = -2.0, ymax = 2.0;
};

using Rgb = std::array<std::uint8_t, 3>;

/// What a decision-map pixel shows.
struct PixelCategory {
  enum class Kind : std::uint8_t { class_region, oos_core, tie } kind = Kind::tie;
  ClassId top = kOosSlot;  // nearest slot for class regions
  bool viable = false;

  bool operator==(const PixelCategory&) const = default;
};

PixelCategory categorize(const CellLabel& label, ViabilityMode mode);

struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, top row first

  Rgb at(int col, int row) const;
};

/// Per-pixel classification plus its RGB rendering. Pixel (col, row) samples
/// the center of its cell; row 0 is the top (ymax) edge.
struct DecisionMap {
  Raster image;
  std::vector<PixelCategory> categories;
  std::vector<bool> boundary;  // cell ordering differs from a 4-neighbour

  Point pixel_center(int col, int row) const;
  Bounds bounds;
};

/// Colours: class hue per prototype (saturated when viable, washed out when
/// not), charcoal for the OOS core, black for exact ties. Boundary pixels are
/// drawn at half intensity so the underlying category stays decodable.
class Palette {
 public:
  explicit Palette(const PrototypeContext& ctx);

  Rgb color(const PixelCategory& cat, bool boundary) const;
  // Inverse of color(); false when rgb is not a palette entry.
  bool decode(const Rgb& rgb, PixelCategory& cat, bool& boundary) const;

 private:
  std::vector<ClassId> ids_;
};

DecisionMap render_decision_map(const PrototypeContext& ctx, ViabilityMode mode, const Bounds& bounds,
                                int width, int height, int threads = 1);

void write_ppm(const Raster& image, std::ostream& out);
void write_ppm(const Raster& image, const std::string& path);
Raster read_ppm(const std::string& path);

}  // namespace ooskit
