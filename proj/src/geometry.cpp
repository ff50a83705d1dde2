#include "wsiroi/geometry.hpp"

#include <algorithm>
#include <numeric>

#include "wsiroi/errors.hpp"
#include "union_find.hpp"

namespace wsiroi {

Box::Box(Coord x0, Coord y0, Coord x1, Coord y1) : x0_(x0), y0_(y0), x1_(x1), y1_(y1) {
  if (x0 >= x1 || y0 >= y1) {
    throw ValidationError("empty box (" + std::to_string(x0) + "," + std::to_string(y0) + "," +
                          std::to_string(x1) + "," + std::to_string(y1) + ")");
  }
}

std::string Box::to_string() const {
  return "(" + std::to_string(x0_) + "," + std::to_string(y0_) + "," + std::to_string(x1_) + "," +
         std::to_string(y1_) + ")";
}

std::optional<Box> intersection(const Box& a, const Box& b) {
  const Coord x0 = std::max(a.x0(), b.x0());
  const Coord y0 = std::max(a.y0(), b.y0());
  const Coord x1 = std::min(a.x1(), b.x1());
  const Coord y1 = std::min(a.y1(), b.y1());
  if (x0 >= x1 || y0 >= y1) return std::nullopt;
  return Box(x0, y0, x1, y1);
}

Coord intersection_area(const Box& a, const Box& b) noexcept {
  const Coord w = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
  const Coord h = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
  return (w > 0 && h > 0) ? w * h : 0;
}

Box bounding_union(const Box& a, const Box& b) noexcept {
  return Box(std::min(a.x0(), b.x0()), std::min(a.y0(), b.y0()), std::max(a.x1(), b.x1()),
             std::max(a.y1(), b.y1()));
}

double iou(const Box& a, const Box& b) noexcept {
  const Coord inter = intersection_area(a, b);
  if (inter == 0) return 0.0;
  const Coord uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

void check_threshold(double t) {
  if (!(t > 0.0 && t <= 1.0)) {
    throw ValidationError("iou threshold must lie in (0,1], got " + std::to_string(t));
  }
}

}  // namespace

std::vector<std::vector<std::size_t>> iou_components(std::span<const Box> boxes,
                                                     double iou_threshold) {
  check_threshold(iou_threshold);
  const std::size_t n = boxes.size();
  std::vector<std::size_t> by_x(n);
  std::iota(by_x.begin(), by_x.end(), std::size_t{0});
  std::sort(by_x.begin(), by_x.end(), [&](std::size_t a, std::size_t b) {
    return boxes[a].x0() != boxes[b].x0() ? boxes[a].x0() < boxes[b].x0() : a < b;
  });

  detail::UnionFind uf(n);
  // Only boxes whose x-ranges overlap can have positive IoU.
  for (std::size_t i = 0; i < n; ++i) {
    const Box& a = boxes[by_x[i]];
    for (std::size_t j = i + 1; j < n && boxes[by_x[j]].x0() < a.x1(); ++j) {
      if (iou(a, boxes[by_x[j]]) >= iou_threshold) uf.unite(by_x[i], by_x[j]);
    }
  }

  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = uf.find(i);
    if (slot[root] == n) {
      slot[root] = groups.size();
      groups.emplace_back();
    }
    groups[slot[root]].push_back(i);
  }
  return groups;
}

std::vector<MergedBox> merge_connected_members(std::span<const Box> boxes, double iou_threshold) {
  check_threshold(iou_threshold);
  std::vector<MergedBox> current;
  current.reserve(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) current.push_back({boxes[i], {i}});

  auto sort_current = [&] {
    std::sort(current.begin(), current.end(), [](const MergedBox& a, const MergedBox& b) {
      if (a.box != b.box) return RasterOrder{}(a.box, b.box);
      return a.members < b.members;
    });
  };
  sort_current();

  // Union boxes can reach the threshold against each other even when none of
  // their members did, so iterate to a fixpoint.
  for (;;) {
    std::vector<Box> current_boxes;
    current_boxes.reserve(current.size());
    for (const auto& m : current) current_boxes.push_back(m.box);
    auto groups = iou_components(current_boxes, iou_threshold);
    if (groups.size() == current.size()) break;

    std::vector<MergedBox> next;
    next.reserve(groups.size());
    for (const auto& group : groups) {
      MergedBox merged = current[group.front()];
      for (std::size_t k = 1; k < group.size(); ++k) {
        const MergedBox& other = current[group[k]];
        merged.box = bounding_union(merged.box, other.box);
        merged.members.insert(merged.members.end(), other.members.begin(), other.members.end());
      }
      std::sort(merged.members.begin(), merged.members.end());
      next.push_back(std::move(merged));
    }
    current = std::move(next);
    sort_current();
  }
  return current;
}

std::vector<Box> merge_connected(std::span<const Box> boxes, double iou_threshold) {
  std::vector<Box> out;
  for (auto& m : merge_connected_members(boxes, iou_threshold)) out.push_back(m.box);
  return out;
}

}  // namespace wsiroi
