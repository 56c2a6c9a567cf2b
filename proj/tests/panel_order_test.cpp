#include "magipipe/panel_order.hpp"

#include <gtest/gtest.h>

#include <random>

#include "magipipe/synth.hpp"

using namespace magipipe;

namespace {

const Tolerance kTol = Tolerance::for_page(100, 100);

PageGraph page_of(std::vector<Box> panels, double w = 100, double h = 100) {
  PageGraph page;
  page.width = w;
  page.height = h;
  page.panels = std::move(panels);
  return page;
}

Order order_of(const std::vector<Box>& panels, std::size_t i, std::size_t j, const OrderOptions& options = {}) {
  return relative_order(i, j, std::span<const Box>(panels), kTol, options);
}

}  // namespace

TEST(RelativeOrder, StackedPanelsReadTopFirst) {
  EXPECT_EQ(order_of({{0, 0, 100, 40}, {0, 60, 100, 100}}, 0, 1), Order::kBefore);
}

TEST(RelativeOrder, SideBySideReadRightFirst) {
  EXPECT_EQ(order_of({{0, 0, 40, 100}, {60, 0, 100, 100}}, 0, 1), Order::kAfter);
}

TEST(RelativeOrder, TopRightBeforeBottomLeft) {
  EXPECT_EQ(order_of({{60, 0, 100, 40}, {0, 60, 40, 100}}, 0, 1), Order::kBefore);
}

TEST(RelativeOrder, Antisymmetric) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const GuillotineLayout layout = generate_guillotine(seed, 4, 100, 100);
    const std::vector<Box> panels = perturb_overlap(layout, seed, 0.1);
    for (std::size_t i = 0; i < panels.size(); ++i) {
      for (std::size_t j = i + 1; j < panels.size(); ++j) {
        ASSERT_EQ(order_of(panels, i, j), opposite(order_of(panels, j, i))) << "seed " << seed;
      }
    }
  }
}

TEST(RelativeOrder, OverlappingPairUsesErosion) {
  // Slight vertical overlap: largely above.
  EXPECT_EQ(order_of({{0, 0, 100, 55}, {0, 50, 100, 100}}, 0, 1), Order::kBefore);
  // Slight horizontal overlap: largely right of.
  EXPECT_EQ(order_of({{0, 0, 55, 100}, {50, 0, 100, 100}}, 1, 0), Order::kBefore);
}

TEST(RelativeOrder, ContainmentFallsBackWithWarning) {
  const std::vector<Box> panels = {{0, 0, 100, 100}, {40, 40, 60, 60}};
  Warnings warnings;
  const Order o = relative_order(0, 1, std::span<const Box>(panels), kTol, {}, &warnings);
  EXPECT_EQ(o, reads_before_by_center(panels[0], 0, panels[1], 1) ? Order::kBefore : Order::kAfter);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_EQ(warnings[0].kind, WarningKind::kContainment);
}

TEST(RelativeOrder, RejectsBadIndices) {
  const std::vector<Box> panels = {{0, 0, 10, 10}};
  EXPECT_THROW(order_of(panels, 0, 0), std::invalid_argument);
  EXPECT_THROW(order_of(panels, 0, 3), std::out_of_range);
}

TEST(DisambiguateDiagonal, HorizontalWhitespaceReadsTopFirst) {
  const std::vector<Box> p = {{0, 0, 45, 50}, {55, 0, 100, 50}, {55, 60, 100, 100}, {0, 60, 45, 100}};
  EXPECT_EQ(disambiguate_diagonal(0, 2, std::span<const Box>(p), kTol), Order::kBefore);
}

TEST(DisambiguateDiagonal, VerticalWhitespaceReadsRightFirst) {
  const std::vector<Box> p = {{0, 0, 45, 30}, {55, 0, 100, 55}, {55, 60, 100, 100}, {0, 35, 45, 100}};
  EXPECT_EQ(disambiguate_diagonal(0, 2, std::span<const Box>(p), kTol), Order::kAfter);
  EXPECT_EQ(disambiguate_diagonal(2, 0, std::span<const Box>(p), kTol), Order::kBefore);
}

TEST(DisambiguateDiagonal, BothCutsPreferHorizontal) {
  const std::vector<Box> p = {{0, 0, 40, 40}, {60, 60, 100, 100}};
  EXPECT_EQ(disambiguate_diagonal(0, 1, std::span<const Box>(p), kTol), Order::kBefore);
}

TEST(DisambiguateDiagonal, NestedRegionUsesLocalCut) {
  // A tall right column, then a left region split into a top row and a
  // bottom pair: the cut between 1 and 2 exists only inside the left region.
  const std::vector<Box> p = {{60, 0, 100, 100}, {0, 0, 55, 40}, {30, 45, 55, 100}, {0, 45, 25, 100}};
  const PageGraph page = page_of(p);
  EXPECT_EQ(reading_order(page, {}, kTol).order.panel_order, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(BuildDag, Examples) {
  EXPECT_EQ(build_dag(page_of({}), kTol).n, 0u);
  const PanelDag one = build_dag(page_of({{0, 0, 10, 10}}), kTol);
  EXPECT_EQ(one.n, 1u);
  EXPECT_TRUE(one.edges.empty());

  const PanelDag three = build_dag(page_of({{0, 0, 100, 30}, {0, 35, 100, 65}, {0, 70, 100, 100}}), kTol);
  using E = std::pair<std::size_t, std::size_t>;
  EXPECT_EQ(three.edges, (std::vector<E>{{0, 1}, {0, 2}, {1, 2}}));
  EXPECT_TRUE(three.is_complete_orientation());
}

TEST(TopologicalOrder, TransitiveTournament) {
  const PanelDag dag{3, {{0, 1}, {0, 2}, {1, 2}}};
  const std::vector<Box> boxes = {{0, 0, 1, 1}, {0, 2, 1, 3}, {0, 4, 1, 5}};
  const TopologicalResult r = topological_order(dag, boxes);
  EXPECT_EQ(r.order, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_TRUE(r.warnings.empty());
}

TEST(TopologicalOrder, SinglePanel) {
  const std::vector<Box> boxes = {{0, 0, 1, 1}};
  EXPECT_EQ(topological_order(PanelDag{1, {}}, boxes).order, (std::vector<std::size_t>{0}));
}

TEST(TopologicalOrder, CycleIsBrokenDeterministically) {
  const PanelDag dag{3, {{0, 1}, {1, 2}, {2, 0}}};
  // Panel 1 is topmost, so it is forced out first.
  const std::vector<Box> boxes = {{0, 50, 10, 60}, {0, 0, 10, 10}, {0, 90, 10, 100}};
  const TopologicalResult a = topological_order(dag, boxes);
  const TopologicalResult b = topological_order(dag, boxes);
  EXPECT_EQ(a.order, b.order);
  EXPECT_EQ(a.order, (std::vector<std::size_t>{1, 2, 0}));
  ASSERT_EQ(a.warnings.size(), 1u);
  EXPECT_EQ(a.warnings[0].kind, WarningKind::kCycle);
  using E = std::pair<std::size_t, std::size_t>;
  EXPECT_EQ(a.dropped_edges, (std::vector<E>{{0, 1}}));
}

TEST(TopologicalOrder, RespectsEdgesOnRandomDags) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const PanelDag dag = random_dag(seed, seed % 10, 0.4);
    std::vector<Box> boxes(dag.n, Box{0, 0, 1, 1});
    const TopologicalResult r = topological_order(dag, boxes);
    EXPECT_TRUE(oracle_check_order(r.order, dag));
    EXPECT_TRUE(r.dropped_edges.empty());
  }
}

TEST(OrderTextsInPanel, Examples) {
  PageGraph page = page_of({{0, 0, 100, 100}});
  page.texts = {{{85, 5, 95, 15}, {}}, {{15, 75, 25, 85}, {}}};
  const Box panel{0, 0, 100, 100};
  EXPECT_EQ(order_texts_in_panel({1, 0}, page, panel), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(order_texts_in_panel({1}, page, panel), (std::vector<std::size_t>{1}));

  page.texts = {{{90, 0, 100, 20}, {}}, {{80, 0, 100, 10}, {}}};  // centers (95,10) and (90,5): equidistant
  EXPECT_EQ(order_texts_in_panel({1, 0}, page, panel), (std::vector<std::size_t>{0, 1}));
}

TEST(ReadingOrder, TwoByTwoGrid) {
  const PageGraph page = page_of({{0, 0, 45, 45}, {55, 0, 100, 45}, {0, 55, 45, 100}, {55, 55, 100, 100}});
  EXPECT_EQ(reading_order(page, {}, kTol).order.panel_order, (std::vector<std::size_t>{1, 0, 3, 2}));
}

TEST(ReadingOrder, NoPanelsOrdersTextsFromTopRight) {
  PageGraph page = page_of({});
  page.texts = {{{0, 0, 10, 10}, {}}, {{90, 0, 100, 10}, {}}, {{40, 40, 60, 60}, {}}};
  const PanelAssignment assignment = assign_boxes_to_panels(page, kTol);
  EXPECT_EQ(reading_order(page, assignment, kTol).order.text_order, (std::vector<std::size_t>{1, 2, 0}));
}

TEST(ReadingOrder, EmptyPage) {
  const ReadingOrderResult r = reading_order(page_of({}), {}, kTol);
  EXPECT_TRUE(r.order.panel_order.empty());
  EXPECT_TRUE(r.order.text_order.empty());
}

TEST(ReadingOrder, UnassignedTextsComeLast) {
  PageGraph page = page_of({{0, 0, 40, 40}});
  page.texts = {{{60, 60, 70, 70}, {}}, {{10, 10, 20, 20}, {}}};
  PanelAssignment assignment;
  assignment.text_to_panel = {std::nullopt, 0};
  EXPECT_EQ(reading_order(page, assignment, kTol).order.text_order, (std::vector<std::size_t>{1, 0}));
}

TEST(ReadingOrder, TextsFollowPanelOrder) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const SyntheticPage s = generate_random_page(seed);
    const Tolerance tol = Tolerance::for_page(s.graph.width, s.graph.height);
    const PanelAssignment assignment = assign_boxes_to_panels(s.graph, tol);
    const ReadingOrder order = reading_order(s.graph, assignment, tol).order;
    EXPECT_EQ(order.panel_order, *s.annotation.gt_panel_order);
    EXPECT_EQ(order.text_order, *s.annotation.gt_text_order);
  }
}

TEST(ReadingOrder, ErosionNeutralOnDisjointPanels) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const GuillotineLayout layout = generate_guillotine(seed, 5);
    const PageGraph page = page_of(layout.panels, layout.width, layout.height);
    const Tolerance tol = Tolerance::for_page(layout.width, layout.height);
    EXPECT_EQ(reading_order(page, {}, tol, {true}).order, reading_order(page, {}, tol, {false}).order);
  }
}

TEST(ReadingOrder, StableUnderTranslationAndScaling) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const GuillotineLayout layout = generate_guillotine(seed, 5);
    const std::vector<Box> perturbed = perturb_overlap(layout, seed, 0.03);
    const PageGraph base = page_of(perturbed, layout.width, layout.height);
    const auto expected = reading_order(base, {}, Tolerance::for_page(base.width, base.height)).order;

    PageGraph shifted = base;
    shifted.width += 37;
    shifted.height += 11;
    for (Box& b : shifted.panels) b = {b.x1 + 37, b.y1 + 11, b.x2 + 37, b.y2 + 11};
    // Page grows with the shift so the tolerance stays almost identical.
    EXPECT_EQ(reading_order(shifted, {}, Tolerance::for_page(base.width, base.height)).order, expected);

    PageGraph scaled = base;
    scaled.width *= 2;
    scaled.height *= 2;
    for (Box& b : scaled.panels) b = {2 * b.x1, 2 * b.y1, 2 * b.x2, 2 * b.y2};
    EXPECT_EQ(reading_order(scaled, {}, Tolerance::for_page(scaled.width, scaled.height)).order, expected);
  }
}

TEST(ReadingOrder, Deterministic) {
  const GuillotineLayout layout = generate_guillotine(5, 6);
  const PageGraph page = page_of(perturb_overlap(layout, 1, 0.1), layout.width, layout.height);
  const Tolerance tol = Tolerance::for_page(page.width, page.height);
  const ReadingOrderResult a = reading_order(page, {}, tol);
  const ReadingOrderResult b = reading_order(page, {}, tol);
  EXPECT_EQ(a.order, b.order);
  EXPECT_EQ(a.warnings, b.warnings);
}
