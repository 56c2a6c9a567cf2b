#pragma once

#include <optional>
#include <utility>

namespace magipipe {

/// Axis-aligned rectangle in page pixels. Origin is the top-left corner of
/// the page, x grows rightward and y grows downward, so "above" means a
/// smaller y.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }

  /// x1 <= x2, y1 <= y2, every coordinate finite and non-negative.
  bool is_valid() const;

  friend bool operator==(const Box&, const Box&) = default;
};

/// Slack used by the directional predicates and the erosion schedule.
struct Tolerance {
  double epsilon = 0.0;
  double erosion_step = 1.0;
  int max_erosion_iters = 50;

  static constexpr double kDefaultEpsilonFraction = 0.001;
  static constexpr double kDefaultErosionStepFraction = 0.005;
  static constexpr int kDefaultMaxErosionIters = 50;

  /// Resolution-independent tolerance: epsilon is a fraction of the page
  /// diagonal, the erosion step a fraction of the shorter page side.
  static Tolerance for_page(double width, double height,
                            double epsilon_fraction = kDefaultEpsilonFraction,
                            double erosion_step_fraction = kDefaultErosionStepFraction,
                            int max_erosion_iters = kDefaultMaxErosionIters);

  /// Throws std::invalid_argument unless epsilon >= 0, step > 0, iters >= 1.
  void validate() const;
};

/// Width and height of the intersection; either may be negative when the
/// boxes are apart along that axis.
double overlap_x(const Box& a, const Box& b);
double overlap_y(const Box& a, const Box& b);

double intersection_area(const Box& a, const Box& b);
double iou(const Box& a, const Box& b);

/// True when the intersection area exceeds epsilon squared.
bool boxes_overlap(const Box& a, const Box& b, double epsilon);

bool is_strictly_above(const Box& a, const Box& b, const Tolerance& tol);
bool is_strictly_right_of(const Box& a, const Box& b, const Tolerance& tol);

/// Moves every side inward by `step`, collapsing onto the center line once
/// the side is exhausted.
Box erode(const Box& b, double step);

/// Erodes copies of `a` and `b` by erosion_step per iteration until they no
/// longer overlap. Returns nullopt when the iteration cap is reached, or when
/// one of them collapses to zero area while its center is still inside the
/// other (containment).
std::optional<std::pair<Box, Box>> erode_pair_until_disjoint(const Box& a, const Box& b,
                                                             const Tolerance& tol);

/// Number of erosion steps erode_pair_until_disjoint needed (0 when the pair
/// was already disjoint), or nullopt on failure.
std::optional<int> erosion_steps_to_separate(const Box& a, const Box& b, const Tolerance& tol);

}  // namespace magipipe
