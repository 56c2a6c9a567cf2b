#include "magipipe/panel_order.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

namespace magipipe {

bool PanelDag::is_complete_orientation() const {
  std::vector<int> seen(n * n, 0);
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n || a == b) return false;
    const std::size_t lo = std::min(a, b);
    const std::size_t hi = std::max(a, b);
    if (++seen[lo * n + hi] > 1) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (seen[i * n + j] != 1) return false;
    }
  }
  return true;
}

bool reads_before_by_center(const Box& a, std::size_t ia, const Box& b, std::size_t ib) {
  if (a.center_y() != b.center_y()) return a.center_y() < b.center_y();
  if (a.center_x() != b.center_x()) return a.center_x() > b.center_x();
  return ia < ib;
}

namespace {

enum class CutResult { kTopLeftFirst, kBottomRightFirst, kNoCut };

// Splits `members` into bands separated by gaps in their projections onto one
// axis. Bands come out in ascending coordinate order; band_of[k] is the band
// of members[k].
struct Bands {
  std::size_t count = 0;
  std::vector<std::size_t> band_of;
};

Bands split_into_bands(const std::vector<std::size_t>& members, std::span<const Box> boxes, bool vertical_axis,
                       double epsilon) {
  auto lo = [&](std::size_t p) { return vertical_axis ? boxes[p].y1 : boxes[p].x1; };
  auto hi = [&](std::size_t p) { return vertical_axis ? boxes[p].y2 : boxes[p].x2; };

  std::vector<std::size_t> sorted(members.size());
  std::iota(sorted.begin(), sorted.end(), 0);
  std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
    if (lo(members[a]) != lo(members[b])) return lo(members[a]) < lo(members[b]);
    return members[a] < members[b];
  });

  Bands bands;
  bands.band_of.assign(members.size(), 0);
  double reach = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const std::size_t p = members[sorted[k]];
    if (k == 0) {
      bands.count = 1;
      reach = hi(p);
    } else if (lo(p) + epsilon >= reach) {
      // Same closed-with-slack test as is_strictly_above / is_strictly_right_of.
      ++bands.count;
      reach = hi(p);
    } else {
      reach = std::max(reach, hi(p));
    }
    bands.band_of[sorted[k]] = bands.count - 1;
  }
  return bands;
}

// Recursive cut search: horizontal cuts of the current partition first, then
// vertical ones, descending into the partition that still holds both panels.
CutResult search_cuts(std::size_t top_left, std::size_t bottom_right, std::span<const Box> boxes, double epsilon) {
  std::vector<std::size_t> members(boxes.size());
  std::iota(members.begin(), members.end(), 0);

  auto position = [&](std::size_t panel) {
    return static_cast<std::size_t>(std::find(members.begin(), members.end(), panel) - members.begin());
  };

  while (members.size() >= 2) {
    const Bands rows = split_into_bands(members, boxes, /*vertical_axis=*/true, epsilon);
    const std::size_t row_tl = rows.band_of[position(top_left)];
    const std::size_t row_br = rows.band_of[position(bottom_right)];
    if (rows.count > 1) {
      if (row_tl != row_br) return row_tl < row_br ? CutResult::kTopLeftFirst : CutResult::kBottomRightFirst;
      std::vector<std::size_t> next;
      for (std::size_t k = 0; k < members.size(); ++k) {
        if (rows.band_of[k] == row_tl) next.push_back(members[k]);
      }
      members = std::move(next);
      continue;
    }

    const Bands cols = split_into_bands(members, boxes, /*vertical_axis=*/false, epsilon);
    const std::size_t col_tl = cols.band_of[position(top_left)];
    const std::size_t col_br = cols.band_of[position(bottom_right)];
    if (cols.count > 1) {
      // Bands ascend left to right; the rightmost is read first.
      if (col_tl != col_br) return col_br > col_tl ? CutResult::kBottomRightFirst : CutResult::kTopLeftFirst;
      std::vector<std::size_t> next;
      for (std::size_t k = 0; k < members.size(); ++k) {
        if (cols.band_of[k] == col_tl) next.push_back(members[k]);
      }
      members = std::move(next);
      continue;
    }
    return CutResult::kNoCut;
  }
  return CutResult::kNoCut;
}

// True when `top_left` is read before `bottom_right`.
bool resolve_diagonal(std::size_t top_left, std::size_t bottom_right, std::span<const Box> panels,
                      const Tolerance& tol) {
  std::vector<Box> eroded(panels.begin(), panels.end());
  for (int level = 0; level <= tol.max_erosion_iters; ++level) {
    if (level > 0) {
      for (std::size_t p = 0; p < panels.size(); ++p) eroded[p] = erode(panels[p], level * tol.erosion_step);
    }
    switch (search_cuts(top_left, bottom_right, eroded, tol.epsilon)) {
      case CutResult::kTopLeftFirst: return true;
      case CutResult::kBottomRightFirst: return false;
      case CutResult::kNoCut: break;
    }
  }
  return reads_before_by_center(panels[top_left], top_left, panels[bottom_right], bottom_right);
}

Order fallback(std::size_t i, std::size_t j, std::span<const Box> panels) {
  return reads_before_by_center(panels[i], i, panels[j], j) ? Order::kBefore : Order::kAfter;
}

void check_pair(std::size_t i, std::size_t j, std::size_t n) {
  if (i >= n || j >= n) throw std::out_of_range("panel index out of range");
  if (i == j) throw std::invalid_argument("relative order of a panel with itself");
}

}  // namespace

Order disambiguate_diagonal(std::size_t i, std::size_t j, std::span<const Box> panels, const Tolerance& tol,
                            const OrderOptions& options) {
  check_pair(i, j, panels.size());
  Box a = panels[i];
  Box b = panels[j];
  if (options.erosion && boxes_overlap(a, b, tol.epsilon)) {
    if (auto eroded = erode_pair_until_disjoint(a, b, tol)) std::tie(a, b) = *eroded;
  }
  if (is_strictly_above(a, b, tol) && is_strictly_right_of(b, a, tol)) {
    return resolve_diagonal(i, j, panels, tol) ? Order::kBefore : Order::kAfter;
  }
  if (is_strictly_above(b, a, tol) && is_strictly_right_of(a, b, tol)) {
    return resolve_diagonal(j, i, panels, tol) ? Order::kAfter : Order::kBefore;
  }
  return fallback(i, j, panels);
}

Order disambiguate_diagonal(std::size_t i, std::size_t j, const PageGraph& page, const Tolerance& tol,
                            const OrderOptions& options) {
  return disambiguate_diagonal(i, j, std::span<const Box>(page.panels), tol, options);
}

Order relative_order(std::size_t i, std::size_t j, std::span<const Box> panels, const Tolerance& tol,
                     const OrderOptions& options, Warnings* warnings) {
  check_pair(i, j, panels.size());
  if (i > j) return opposite(relative_order(j, i, panels, tol, options, warnings));

  Box a = panels[i];
  Box b = panels[j];
  if (boxes_overlap(a, b, tol.epsilon)) {
    std::optional<std::pair<Box, Box>> eroded;
    if (options.erosion) eroded = erode_pair_until_disjoint(a, b, tol);
    if (!eroded) {
      if (warnings != nullptr && options.erosion) {
        warnings->push_back({WarningKind::kContainment, "panels " + std::to_string(i) + " and " +
                                                            std::to_string(j) +
                                                            " cannot be separated by erosion; "
                                                            "ordered by center"});
      }
      return fallback(i, j, panels);
    }
    std::tie(a, b) = *eroded;
  }

  const bool i_above_j = is_strictly_above(a, b, tol);
  const bool j_above_i = is_strictly_above(b, a, tol);
  const bool i_right_of_j = is_strictly_right_of(a, b, tol);
  const bool j_right_of_i = is_strictly_right_of(b, a, tol);

  if (i_above_j && !j_right_of_i) return Order::kBefore;
  if (j_above_i && !i_right_of_j) return Order::kAfter;
  if (i_right_of_j && !j_above_i) return Order::kBefore;
  if (j_right_of_i && !i_above_j) return Order::kAfter;
  if (i_above_j && j_right_of_i) return resolve_diagonal(i, j, panels, tol) ? Order::kBefore : Order::kAfter;
  if (j_above_i && i_right_of_j) return resolve_diagonal(j, i, panels, tol) ? Order::kAfter : Order::kBefore;
  return fallback(i, j, panels);
}

Order relative_order(std::size_t i, std::size_t j, const PageGraph& page, const Tolerance& tol,
                     const OrderOptions& options, Warnings* warnings) {
  return relative_order(i, j, std::span<const Box>(page.panels), tol, options, warnings);
}

PanelDag build_dag(std::span<const Box> panels, const Tolerance& tol, const OrderOptions& options,
                   Warnings* warnings) {
  PanelDag dag;
  dag.n = panels.size();
  for (std::size_t i = 0; i < dag.n; ++i) {
    for (std::size_t j = i + 1; j < dag.n; ++j) {
      if (relative_order(i, j, panels, tol, options, warnings) == Order::kBefore) {
        dag.edges.emplace_back(i, j);
      } else {
        dag.edges.emplace_back(j, i);
      }
    }
  }
  return dag;
}

PanelDag build_dag(const PageGraph& page, const Tolerance& tol, const OrderOptions& options,
                   Warnings* warnings) {
  return build_dag(std::span<const Box>(page.panels), tol, options, warnings);
}

TopologicalResult topological_order(const PanelDag& dag, std::span<const Box> panels) {
  if (panels.size() != dag.n) throw std::invalid_argument("topological_order: need one box per node");
  const std::size_t n = dag.n;
  std::vector<std::vector<bool>> has_edge(n, std::vector<bool>(n, false));
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& [from, to] : dag.edges) {
    if (from >= n || to >= n) throw std::out_of_range("topological_order: edge endpoint out of range");
    if (from == to) throw std::invalid_argument("topological_order: self-edge");
    if (!has_edge[from][to]) {
      has_edge[from][to] = true;
      ++indegree[to];
    }
  }

  TopologicalResult result;
  std::vector<bool> emitted(n, false);
  auto first_of = [&](auto&& accept) {
    std::optional<std::size_t> best;
    for (std::size_t v = 0; v < n; ++v) {
      if (emitted[v] || !accept(v)) continue;
      if (!best || reads_before_by_center(panels[v], v, panels[*best], *best)) best = v;
    }
    return best;
  };

  for (std::size_t step = 0; step < n; ++step) {
    std::optional<std::size_t> next = first_of([&](std::size_t v) { return indegree[v] == 0; });
    if (!next) {
      next = first_of([](std::size_t) { return true; });
      std::string dropped;
      for (std::size_t u = 0; u < n; ++u) {
        if (!emitted[u] && has_edge[u][*next]) {
          result.dropped_edges.emplace_back(u, *next);
          dropped += " (" + std::to_string(u) + "," + std::to_string(*next) + ")";
        }
      }
      result.warnings.push_back({WarningKind::kCycle, "cycle in panel order graph; emitted panel " +
                                                          std::to_string(*next) + " early, dropping edges" +
                                                          dropped});
      indegree[*next] = 0;
    }
    const std::size_t v = *next;
    emitted[v] = true;
    result.order.push_back(v);
    for (std::size_t w = 0; w < n; ++w) {
      if (has_edge[v][w] && !emitted[w] && indegree[w] > 0) --indegree[w];
    }
  }
  return result;
}

std::vector<std::size_t> order_texts_in_panel(std::vector<std::size_t> text_indices, const PageGraph& page,
                                              const Box& panel) {
  auto distance = [&](std::size_t t) {
    const Box& b = page.texts.at(t).box;
    return std::hypot(b.center_x() - panel.x2, b.center_y() - panel.y1);
  };
  std::sort(text_indices.begin(), text_indices.end(), [&](std::size_t a, std::size_t b) {
    const double da = distance(a);
    const double db = distance(b);
    if (da != db) return da < db;
    return a < b;
  });
  return text_indices;
}

ReadingOrderResult reading_order(const PageGraph& page, const PanelAssignment& assignment, const Tolerance& tol,
                                 const OrderOptions& options) {
  if (assignment.text_to_panel.size() != page.texts.size()) {
    throw std::invalid_argument("reading_order: assignment does not match the page's texts");
  }
  ReadingOrderResult result;
  const PanelDag dag = build_dag(page, tol, options, &result.warnings);
  TopologicalResult topo = topological_order(dag, page.panels);
  append(result.warnings, topo.warnings);
  result.order.panel_order = std::move(topo.order);

  std::vector<std::vector<std::size_t>> per_panel(page.panels.size());
  std::vector<std::size_t> unassigned;
  for (std::size_t t = 0; t < page.texts.size(); ++t) {
    const auto& p = assignment.text_to_panel[t];
    if (p && *p < page.panels.size()) {
      per_panel[*p].push_back(t);
    } else {
      unassigned.push_back(t);
    }
  }
  for (std::size_t p : result.order.panel_order) {
    for (std::size_t t : order_texts_in_panel(per_panel[p], page, page.panels[p])) {
      result.order.text_order.push_back(t);
    }
  }
  const Box whole_page{0.0, 0.0, page.width, page.height};
  for (std::size_t t : order_texts_in_panel(unassigned, page, whole_page)) result.order.text_order.push_back(t);
  return result;
}

}  // namespace magipipe
