#include "magipipe/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace magipipe {

bool Box::is_valid() const {
  const bool finite = std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2);
  return finite && x1 >= 0.0 && y1 >= 0.0 && x1 <= x2 && y1 <= y2;
}

Tolerance Tolerance::for_page(double width, double height, double epsilon_fraction,
                              double erosion_step_fraction, int max_erosion_iters) {
  Tolerance tol;
  tol.epsilon = epsilon_fraction * std::hypot(width, height);
  tol.erosion_step = erosion_step_fraction * std::min(width, height);
  tol.max_erosion_iters = max_erosion_iters;
  if (!(tol.erosion_step > 0.0)) tol.erosion_step = 1.0;
  return tol;
}

void Tolerance::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("tolerance: epsilon must be finite and >= 0");
  }
  if (!(erosion_step > 0.0) || !std::isfinite(erosion_step)) {
    throw std::invalid_argument("tolerance: erosion_step must be finite and > 0");
  }
  if (max_erosion_iters < 1) {
    throw std::invalid_argument("tolerance: max_erosion_iters must be >= 1");
  }
}

double overlap_x(const Box& a, const Box& b) { return std::min(a.x2, b.x2) - std::max(a.x1, b.x1); }

double overlap_y(const Box& a, const Box& b) { return std::min(a.y2, b.y2) - std::max(a.y1, b.y1); }

double intersection_area(const Box& a, const Box& b) {
  const double w = overlap_x(a, b);
  const double h = overlap_y(a, b);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

double iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

bool boxes_overlap(const Box& a, const Box& b, double epsilon) {
  return intersection_area(a, b) > epsilon * epsilon;
}

bool is_strictly_above(const Box& a, const Box& b, const Tolerance& tol) {
  return a.y2 <= b.y1 + tol.epsilon;
}

bool is_strictly_right_of(const Box& a, const Box& b, const Tolerance& tol) {
  return a.x1 >= b.x2 - tol.epsilon;
}

Box erode(const Box& b, double step) {
  const double cx = b.center_x();
  const double cy = b.center_y();
  Box out;
  out.x1 = std::min(b.x1 + step, cx);
  out.x2 = std::max(b.x2 - step, cx);
  out.y1 = std::min(b.y1 + step, cy);
  out.y2 = std::max(b.y2 - step, cy);
  return out;
}

namespace {

bool center_strictly_inside(const Box& inner, const Box& outer) {
  const double cx = inner.center_x();
  const double cy = inner.center_y();
  return cx > outer.x1 && cx < outer.x2 && cy > outer.y1 && cy < outer.y2;
}

bool collapsed_inside(const Box& a, const Box& b) {
  return (a.area() <= 0.0 && center_strictly_inside(a, b)) ||
         (b.area() <= 0.0 && center_strictly_inside(b, a));
}

}  // namespace

std::optional<int> erosion_steps_to_separate(const Box& a, const Box& b, const Tolerance& tol) {
  if (!boxes_overlap(a, b, tol.epsilon)) return 0;
  for (int k = 1; k <= tol.max_erosion_iters; ++k) {
    // Erode from the originals each time so the result does not depend on
    // accumulated rounding.
    const Box ea = erode(a, k * tol.erosion_step);
    const Box eb = erode(b, k * tol.erosion_step);
    if (collapsed_inside(ea, eb)) return std::nullopt;
    if (!boxes_overlap(ea, eb, tol.epsilon)) return k;
    if (ea.area() <= 0.0 && eb.area() <= 0.0) return std::nullopt;
  }
  return std::nullopt;
}

std::optional<std::pair<Box, Box>> erode_pair_until_disjoint(const Box& a, const Box& b,
                                                             const Tolerance& tol) {
  const auto steps = erosion_steps_to_separate(a, b, tol);
  if (!steps) return std::nullopt;
  if (*steps == 0) return std::make_pair(a, b);
  return std::make_pair(erode(a, *steps * tol.erosion_step), erode(b, *steps * tol.erosion_step));
}

}  // namespace magipipe
