#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wsiroi {

using Coord = std::int64_t;

struct Point {
  Coord x = 0;
  Coord y = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

// Axis-aligned rectangle in level-0 slide pixels, half-open: [x0,x1) x [y0,y1).
// Empty boxes cannot be constructed.
class Box {
 public:
  Box(Coord x0, Coord y0, Coord x1, Coord y1);

  static Box from_origin_size(Point origin, Coord width, Coord height) {
    return Box(origin.x, origin.y, origin.x + width, origin.y + height);
  }

  Coord x0() const noexcept { return x0_; }
  Coord y0() const noexcept { return y0_; }
  Coord x1() const noexcept { return x1_; }
  Coord y1() const noexcept { return y1_; }
  Coord width() const noexcept { return x1_ - x0_; }
  Coord height() const noexcept { return y1_ - y0_; }
  Coord area() const noexcept { return width() * height(); }
  Point origin() const noexcept { return {x0_, y0_}; }

  Box translated(Point offset) const {
    return Box(x0_ + offset.x, y0_ + offset.y, x1_ + offset.x, y1_ + offset.y);
  }

  bool contains(const Box& other) const noexcept {
    return other.x0_ >= x0_ && other.y0_ >= y0_ && other.x1_ <= x1_ && other.y1_ <= y1_;
  }

  std::string to_string() const;

  friend bool operator==(const Box&, const Box&) = default;

 private:
  Coord x0_, y0_, x1_, y1_;
};

// Order used wherever boxes are emitted: (y0, x0, x1, y1).
struct RasterOrder {
  bool operator()(const Box& a, const Box& b) const noexcept {
    if (a.y0() != b.y0()) return a.y0() < b.y0();
    if (a.x0() != b.x0()) return a.x0() < b.x0();
    if (a.x1() != b.x1()) return a.x1() < b.x1();
    return a.y1() < b.y1();
  }
};

std::optional<Box> intersection(const Box& a, const Box& b);
Coord intersection_area(const Box& a, const Box& b) noexcept;
Box bounding_union(const Box& a, const Box& b) noexcept;

// |a ∩ b| / |a ∪ b|; both areas are exact integers, so the only rounding is
// the final division.
double iou(const Box& a, const Box& b) noexcept;

// Connected components of the graph with an edge wherever iou >= threshold.
// Each result lists indices into `boxes`, ascending.
std::vector<std::vector<std::size_t>> iou_components(std::span<const Box> boxes,
                                                     double iou_threshold);

struct MergedBox {
  Box box;
  std::vector<std::size_t> members;  // indices into the original input, ascending
};

// Transitive merge: union bounding box of every IoU-connected component,
// repeated until no two output boxes reach the threshold. Output is sorted in
// RasterOrder and is independent of input order.
std::vector<MergedBox> merge_connected_members(std::span<const Box> boxes, double iou_threshold);

std::vector<Box> merge_connected(std::span<const Box> boxes, double iou_threshold);

}  // namespace wsiroi
