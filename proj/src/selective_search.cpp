#include "wsiroi/selective_search.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include <json.hpp>

#include "union_find.hpp"
#include "wsiroi/errors.hpp"

namespace wsiroi {

namespace {

struct PixelEdge {
  std::int32_t a;
  std::int32_t b;
  std::int32_t sq_dist;  // exact squared RGB distance; sorting on it avoids float ties
};

std::int32_t sq_distance(const std::uint8_t* p, const std::uint8_t* q) {
  const int dr = p[0] - q[0];
  const int dg = p[1] - q[1];
  const int db = p[2] - q[2];
  return dr * dr + dg * dg + db * db;
}

std::vector<PixelEdge> build_edges(const Image& img) {
  const int w = img.width();
  const int h = img.height();
  std::vector<PixelEdge> edges;
  edges.reserve(2 * img.pixel_count());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::int32_t v = y * w + x;
      if (x + 1 < w) edges.push_back({v, v + 1, sq_distance(img.pixel_ptr(x, y), img.pixel_ptr(x + 1, y))});
      if (y + 1 < h) edges.push_back({v, v + w, sq_distance(img.pixel_ptr(x, y), img.pixel_ptr(x, y + 1))});
    }
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const PixelEdge& l, const PixelEdge& r) { return l.sq_dist < r.sq_dist; });
  return edges;
}

}  // namespace

Segmentation segment_initial(const Image& patch, double k, int min_size) {
  if (patch.width() < 2 || patch.height() < 2) {
    throw ValidationError("segmentation needs a patch of at least 2x2 pixels, got " +
                          std::to_string(patch.width()) + "x" + std::to_string(patch.height()));
  }
  if (!(k > 0.0)) throw ValidationError("segmentation k must be > 0");
  if (min_size < 1) throw ValidationError("segmentation min_size must be >= 1");

  const int w = patch.width();
  const int h = patch.height();
  const std::size_t n = patch.pixel_count();
  const auto edges = build_edges(patch);

  detail::UnionFind forest(n);
  std::vector<double> threshold(n, k);  // internal(C) + k/|C| with internal 0, |C| 1
  for (const auto& e : edges) {
    std::size_t a = forest.find(static_cast<std::size_t>(e.a));
    std::size_t b = forest.find(static_cast<std::size_t>(e.b));
    if (a == b) continue;
    const double weight = std::sqrt(static_cast<double>(e.sq_dist));
    if (weight <= threshold[a] && weight <= threshold[b]) {
      const std::size_t root = forest.unite(a, b);
      threshold[root] = weight + k / static_cast<double>(forest.size(root));
    }
  }
  if (min_size > 1) {
    const auto small = static_cast<std::size_t>(min_size);
    for (const auto& e : edges) {
      const std::size_t a = forest.find(static_cast<std::size_t>(e.a));
      const std::size_t b = forest.find(static_cast<std::size_t>(e.b));
      if (a != b && (forest.size(a) < small || forest.size(b) < small)) forest.unite(a, b);
    }
  }

  Segmentation out;
  out.width = w;
  out.height = h;
  out.labels.assign(n, -1);
  std::vector<int> id_of_root(n, -1);
  struct Accum {
    std::int64_t count = 0;
    Coord x0, y0, x1, y1;
    std::array<std::int64_t, kHistogramSize> bins{};
  };
  std::vector<Accum> acc;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t v = static_cast<std::size_t>(y) * w + x;
      const std::size_t root = forest.find(v);
      if (id_of_root[root] < 0) {
        id_of_root[root] = static_cast<int>(acc.size());
        acc.push_back({0, x, y, x + 1, y + 1, {}});
      }
      const int id = id_of_root[root];
      out.labels[v] = id;
      Accum& a = acc[static_cast<std::size_t>(id)];
      ++a.count;
      a.x0 = std::min<Coord>(a.x0, x);
      a.y0 = std::min<Coord>(a.y0, y);
      a.x1 = std::max<Coord>(a.x1, x + 1);
      a.y1 = std::max<Coord>(a.y1, y + 1);
      const auto* p = patch.pixel_ptr(x, y);
      for (int c = 0; c < 3; ++c) ++a.bins[static_cast<std::size_t>(c * kHistogramBins + histogram_bin(p[c]))];
    }
  }

  out.segments.reserve(acc.size());
  for (std::size_t id = 0; id < acc.size(); ++id) {
    const Accum& a = acc[id];
    Segment s;
    s.id = static_cast<int>(id);
    s.pixel_count = a.count;
    s.bbox = Box(a.x0, a.y0, a.x1, a.y1);
    for (std::size_t i = 0; i < kHistogramSize; ++i) {
      s.histogram[i] = static_cast<double>(a.bins[i]) / static_cast<double>(a.count);
    }
    out.segments.push_back(s);
  }
  std::sort(out.segments.begin(), out.segments.end(), [](const Segment& l, const Segment& r) {
    return std::make_tuple(l.bbox.y0(), l.bbox.x0(), l.id) < std::make_tuple(r.bbox.y0(), r.bbox.x0(), r.id);
  });
  return out;
}

double similarity(const Segment& a, const Segment& b, std::int64_t patch_area) {
  double color = 0.0;
  for (std::size_t i = 0; i < kHistogramSize; ++i) color += std::min(a.histogram[i], b.histogram[i]);
  color /= 3.0;
  const double area = static_cast<double>(patch_area);
  const double joint = static_cast<double>(a.pixel_count + b.pixel_count);
  const double size = 1.0 - joint / area;
  const double hull = static_cast<double>(bounding_union(a.bbox, b.bbox).area());
  const double fill = 1.0 - (hull - joint) / area;
  auto unit = [](double v) { return std::clamp(v, 0.0, 1.0); };
  return (unit(color) + unit(size) + unit(fill)) / 3.0;
}

Segment merge_segments(const Segment& a, const Segment& b, int new_id) {
  Segment m;
  m.id = new_id;
  m.pixel_count = a.pixel_count + b.pixel_count;
  m.bbox = bounding_union(a.bbox, b.bbox);
  const double wa = static_cast<double>(a.pixel_count);
  const double wb = static_cast<double>(b.pixel_count);
  const double total = wa + wb;
  for (std::size_t i = 0; i < kHistogramSize; ++i) {
    m.histogram[i] = (wa * a.histogram[i] + wb * b.histogram[i]) / total;
  }
  return m;
}

void SelectiveSearchConfig::validate() const {
  if (!(k > 0.0)) throw ValidationError("selective search k must be > 0");
  if (min_size < 1) throw ValidationError("selective search min_size must be >= 1");
  if (max_proposals < 1) throw ValidationError("max_proposals must be >= 1");
}

std::vector<Segment> merge_hierarchy(const Segmentation& segmentation) {
  const std::size_t initial = segmentation.segments.size();
  std::vector<Segment> regions(initial);
  for (const auto& s : segmentation.segments) regions[static_cast<std::size_t>(s.id)] = s;
  if (initial < 2) return regions;

  const std::int64_t patch_area = static_cast<std::int64_t>(segmentation.width) * segmentation.height;
  std::vector<std::set<int>> neighbours(initial);
  for (int y = 0; y < segmentation.height; ++y) {
    for (int x = 0; x < segmentation.width; ++x) {
      const int l = segmentation.label_at(x, y);
      if (x + 1 < segmentation.width) {
        const int r = segmentation.label_at(x + 1, y);
        if (r != l) {
          neighbours[static_cast<std::size_t>(l)].insert(r);
          neighbours[static_cast<std::size_t>(r)].insert(l);
        }
      }
      if (y + 1 < segmentation.height) {
        const int d = segmentation.label_at(x, y + 1);
        if (d != l) {
          neighbours[static_cast<std::size_t>(l)].insert(d);
          neighbours[static_cast<std::size_t>(d)].insert(l);
        }
      }
    }
  }

  // Highest score first, then the lexicographically smaller (low, high) id pair.
  struct Candidate {
    double score;
    int low;
    int high;
    bool operator<(const Candidate& o) const {
      if (score != o.score) return score > o.score;
      if (low != o.low) return low < o.low;
      return high < o.high;
    }
  };
  std::set<Candidate> queue;
  std::map<std::pair<int, int>, double> score_of;
  auto add_pair = [&](int i, int j) {
    const int lo = std::min(i, j);
    const int hi = std::max(i, j);
    const double s = similarity(regions[static_cast<std::size_t>(lo)], regions[static_cast<std::size_t>(hi)], patch_area);
    if (score_of.emplace(std::pair{lo, hi}, s).second) queue.insert({s, lo, hi});
  };
  auto drop_pair = [&](int i, int j) {
    const int lo = std::min(i, j);
    const int hi = std::max(i, j);
    auto it = score_of.find({lo, hi});
    if (it == score_of.end()) return;
    queue.erase({it->second, lo, hi});
    score_of.erase(it);
  };

  for (std::size_t i = 0; i < initial; ++i) {
    for (int j : neighbours[i]) {
      if (static_cast<int>(i) < j) add_pair(static_cast<int>(i), j);
    }
  }

  while (!queue.empty()) {
    const Candidate best = *queue.begin();
    const int a = best.low;
    const int b = best.high;
    const int c = static_cast<int>(regions.size());
    regions.push_back(merge_segments(regions[static_cast<std::size_t>(a)], regions[static_cast<std::size_t>(b)], c));

    std::set<int> joined;
    for (int nb : {a, b}) {
      for (int n : neighbours[static_cast<std::size_t>(nb)]) {
        drop_pair(nb, n);
        if (n != a && n != b) joined.insert(n);
      }
      neighbours[static_cast<std::size_t>(nb)].clear();
    }
    neighbours.emplace_back();
    for (int n : joined) {
      auto& ns = neighbours[static_cast<std::size_t>(n)];
      ns.erase(a);
      ns.erase(b);
      ns.insert(c);
      neighbours[static_cast<std::size_t>(c)].insert(n);
      add_pair(n, c);
    }
  }
  return regions;
}

std::vector<Proposal> propose(const Image& patch, const SelectiveSearchConfig& config) {
  config.validate();
  const Segmentation segmentation = segment_initial(patch, config.k, config.min_size);
  const auto regions = merge_hierarchy(segmentation);
  const int initial = static_cast<int>(segmentation.segments.size());

  std::vector<Proposal> all;
  all.reserve(regions.size());
  for (const auto& r : regions) all.push_back({r.bbox, r.id < initial ? 0 : r.id - initial + 1});
  std::stable_sort(all.begin(), all.end(),
                   [](const Proposal& l, const Proposal& r) { return l.birth_step < r.birth_step; });

  std::set<Box, RasterOrder> seen;
  std::vector<Proposal> out;
  for (const auto& p : all) {
    if (seen.insert(p.local_box).second) out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const Proposal& l, const Proposal& r) {
    if (l.birth_step != r.birth_step) return l.birth_step < r.birth_step;
    return RasterOrder{}(l.local_box, r.local_box);
  });
  if (out.size() > static_cast<std::size_t>(config.max_proposals)) {
    out.erase(out.begin() + config.max_proposals, out.end());
  }
  return out;
}

RegionProposal to_slide_coords(const Proposal& proposal, const TileRef& tile, Point tile_origin,
                               Point crop_offset, Coord slide_width, Coord slide_height) {
  const Box slide_box =
      proposal.local_box.translated({tile_origin.x + crop_offset.x, tile_origin.y + crop_offset.y});
  if (slide_box.x0() < 0 || slide_box.y0() < 0 || slide_box.x1() > slide_width ||
      slide_box.y1() > slide_height) {
    throw ValidationError("proposal " + slide_box.to_string() + " from tile (" +
                          std::to_string(tile.grid_row) + "," + std::to_string(tile.grid_col) +
                          ") leaves the slide");
  }
  return {tile, proposal.local_box, slide_box, proposal.birth_step};
}

std::string proposal_json_line(const RegionProposal& p) {
  auto box = [](const Box& b) { return nlohmann::json::array({b.x0(), b.y0(), b.x1(), b.y1()}); };
  const nlohmann::json doc = {{"slide_id", p.tile.slide_id},
                              {"grid_row", p.tile.grid_row},
                              {"grid_col", p.tile.grid_col},
                              {"local_box", box(p.local_box)},
                              {"slide_box", box(p.slide_box)},
                              {"birth_step", p.birth_step}};
  return doc.dump();
}

}  // namespace wsiroi
