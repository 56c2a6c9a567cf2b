#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "magipipe/geometry.hpp"
#include "magipipe/page_model.hpp"
#include "magipipe/panel_order.hpp"

namespace magipipe {

inline constexpr std::string_view kGeneratorVersion = "magipipe-synth/1";

/// Node of a guillotine cut tree. Leaves carry the panel index; inner nodes
/// carry the cut axis and the coordinate where the first child ends.
struct CutNode {
  enum class Axis { kLeaf, kHorizontal, kVertical };

  Axis axis = Axis::kLeaf;
  double position = 0.0;
  std::optional<std::size_t> panel;
  std::vector<CutNode> children;
};

struct GuillotineLayout {
  double width = 0.0;
  double height = 0.0;
  std::vector<Box> panels;
  /// Panel indices in cut-tree traversal order: top child before bottom
  /// child, right child before left child.
  std::vector<std::size_t> truth_order;
  CutNode cut_tree;
};

/// Recursive random splits of the page with a minimum panel side of 10% of
/// the page side and a 2% gap between panels. A vertical split is only kept
/// when its region admits no horizontal cut, so the truth order is the only
/// order consistent with horizontal-before-vertical cut priority. Panel
/// indices are shuffled.
GuillotineLayout generate_guillotine(std::uint64_t seed, int max_depth, double width = 1000.0,
                                     double height = 1500.0);

/// Grows every panel outward by an independent amount of up to
/// magnitude x size on each axis, keeping its center fixed (apart from
/// clipping at the page border).
std::vector<Box> perturb_overlap(const GuillotineLayout& layout, std::uint64_t seed, double magnitude);

/// True when some overlapping pair cannot be separated by pairwise erosion.
bool has_containment(const std::vector<Box>& panels, const Tolerance& tol);

/// True iff `order` is a permutation of the dag's nodes that respects every
/// edge.
bool oracle_check_order(const std::vector<std::size_t>& order, const PanelDag& dag);

/// Random acyclic graph on n nodes: a hidden permutation, with each
/// consistent edge kept with probability `density`.
PanelDag random_dag(std::uint64_t seed, std::size_t n, double density = 0.3);

struct RandomPageOptions {
  /// 0 gives scores that agree exactly with the ground truth.
  double noise = 0.0;
  int max_depth = 3;
  std::size_t max_texts_per_panel = 3;
  std::size_t max_characters_per_panel = 2;
  std::size_t identity_pool = 4;
  std::size_t embedding_dim = 8;
};

struct SyntheticPage {
  PageGraph graph;
  PageAnnotation annotation;
};

/// Guillotine panels with texts stacked down each panel's right half and
/// characters down its left half. Predicted boxes equal the ground truth.
SyntheticPage generate_random_page(std::uint64_t seed, const RandomPageOptions& options = {});

}  // namespace magipipe
