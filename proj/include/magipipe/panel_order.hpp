#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "magipipe/geometry.hpp"
#include "magipipe/page_model.hpp"
#include "magipipe/warning.hpp"

namespace magipipe {

enum class Order { kBefore, kAfter };

constexpr Order opposite(Order o) { return o == Order::kBefore ? Order::kAfter : Order::kBefore; }

/// Directed graph over panels; an edge (i, j) means i is read before j.
struct PanelDag {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  /// Exactly one orientation per unordered pair and no self-edges.
  bool is_complete_orientation() const;

  friend bool operator==(const PanelDag&, const PanelDag&) = default;
};

struct ReadingOrder {
  std::vector<std::size_t> panel_order;
  std::vector<std::size_t> text_order;

  friend bool operator==(const ReadingOrder&, const ReadingOrder&) = default;
};

struct OrderOptions {
  /// When false, overlapping pairs and uncuttable diagonals go straight to
  /// the fallback comparator.
  bool erosion = true;
};

/// "Top to bottom, right to left" on box centers, then index. Used wherever
/// geometry cannot decide.
bool reads_before_by_center(const Box& a, std::size_t ia, const Box& b, std::size_t ib);

/// Relative order of panels i and j from the pairwise rules, with pairwise
/// erosion for overlapping panels and cut-based disambiguation for
/// top-left/bottom-right pairs. Antisymmetric by construction.
Order relative_order(std::size_t i, std::size_t j, std::span<const Box> panels, const Tolerance& tol,
                     const OrderOptions& options = {}, Warnings* warnings = nullptr);

Order relative_order(std::size_t i, std::size_t j, const PageGraph& page, const Tolerance& tol,
                     const OrderOptions& options = {}, Warnings* warnings = nullptr);

/// Order of a diagonal pair (one panel strictly above and strictly left of
/// the other). Tries a horizontal cut first (top panel first), then a
/// vertical cut (right panel first); cuts are searched over the whole page
/// and recursively inside the partition holding both panels. When some
/// partition admits no cut at all, every panel is eroded one more step and
/// the search restarts.
Order disambiguate_diagonal(std::size_t i, std::size_t j, std::span<const Box> panels,
                            const Tolerance& tol, const OrderOptions& options = {});

Order disambiguate_diagonal(std::size_t i, std::size_t j, const PageGraph& page, const Tolerance& tol,
                            const OrderOptions& options = {});

PanelDag build_dag(std::span<const Box> panels, const Tolerance& tol, const OrderOptions& options = {},
                   Warnings* warnings = nullptr);

PanelDag build_dag(const PageGraph& page, const Tolerance& tol, const OrderOptions& options = {},
                   Warnings* warnings = nullptr);

struct TopologicalResult {
  std::vector<std::size_t> order;
  /// Edges (i, j) dropped because a cycle forced j out before i.
  std::vector<std::pair<std::size_t, std::size_t>> dropped_edges;
  Warnings warnings;
};

/// Kahn's algorithm. Among available sources the one read first by
/// reads_before_by_center is emitted; if a cycle leaves no source, the
/// first remaining panel under the same comparator is emitted anyway and a
/// cycle warning is recorded. `panels` supplies the comparator geometry and
/// must have dag.n entries.
TopologicalResult topological_order(const PanelDag& dag, std::span<const Box> panels);

/// Texts sorted by the distance from their center to the panel's top-right
/// corner; ties keep the lower index first.
std::vector<std::size_t> order_texts_in_panel(std::vector<std::size_t> text_indices,
                                              const PageGraph& page, const Box& panel);

struct ReadingOrderResult {
  ReadingOrder order;
  Warnings warnings;
};

ReadingOrderResult reading_order(const PageGraph& page, const PanelAssignment& assignment,
                                 const Tolerance& tol, const OrderOptions& options = {});

}  // namespace magipipe
