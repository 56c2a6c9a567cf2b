#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "magipipe/geometry.hpp"
#include "magipipe/warning.hpp"

namespace magipipe {

/// Dense row-major matrix; pages carry tens of boxes at most.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  friend bool operator==(const ScoreMatrix&, const ScoreMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct TextBlock {
  Box box;
  std::optional<std::string> content;

  friend bool operator==(const TextBlock&, const TextBlock&) = default;
};

/// One page's detections and association scores.
///
/// char_char_scores is |characters| x |characters|, symmetric with unit
/// diagonal; text_char_scores is |texts| x |characters|. Detection confidences
/// are optional and default to 1 for every box.
struct PageGraph {
  std::string page_id;
  double width = 0.0;
  double height = 0.0;
  std::vector<Box> panels;
  std::vector<TextBlock> texts;
  std::vector<Box> characters;
  ScoreMatrix char_char_scores;
  ScoreMatrix text_char_scores;
  std::optional<std::vector<std::vector<double>>> char_embeddings;
  std::optional<std::vector<double>> panel_scores;
  std::optional<std::vector<double>> text_scores;
  std::optional<std::vector<double>> character_scores;

  friend bool operator==(const PageGraph&, const PageGraph&) = default;
};

struct SpeakerEdge {
  std::size_t text = 0;
  std::size_t character = 0;

  friend bool operator==(const SpeakerEdge&, const SpeakerEdge&) = default;
};

struct PageAnnotation {
  std::string page_id;
  std::optional<std::vector<Box>> gt_panels;
  std::vector<Box> gt_texts;
  std::vector<Box> gt_characters;
  std::vector<long long> gt_char_identity;
  std::vector<SpeakerEdge> gt_speaker_edges;
  // Written by the synthetic generator; real annotation sets omit them.
  std::optional<std::vector<std::size_t>> gt_panel_order;
  std::optional<std::vector<std::size_t>> gt_text_order;

  friend bool operator==(const PageAnnotation&, const PageAnnotation&) = default;
};

struct PanelAssignment {
  std::vector<std::optional<std::size_t>> text_to_panel;
  std::vector<std::optional<std::size_t>> char_to_panel;

  friend bool operator==(const PanelAssignment&, const PanelAssignment&) = default;
};

/// Raised for malformed page-graph or annotation files. path() names the
/// offending field, e.g. "texts[2].box".
class PageFormatError : public std::runtime_error {
 public:
  PageFormatError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

template <typename T>
struct Loaded {
  T value;
  Warnings warnings;
};

Loaded<PageGraph> load_page_graph(std::string_view bytes);
Loaded<PageAnnotation> load_page_annotation(std::string_view bytes);

/// Canonical serialization; loading the output reproduces the value exactly.
std::string serialize_page_graph(const PageGraph& page);
std::string serialize_page_annotation(const PageAnnotation& annotation);

double detection_score(const std::optional<std::vector<double>>& scores, std::size_t index);

/// Attributes every text and character to a panel: the panel containing the
/// box center, else the panel with the largest overlap, else the panel with
/// the nearest center. Ties prefer the smaller panel, then the lower index.
PanelAssignment assign_boxes_to_panels(const PageGraph& page, const Tolerance& tol);

std::optional<std::size_t> assign_box_to_panel(const Box& box, const std::vector<Box>& panels);

/// Page graph whose boxes are the annotation's ground-truth boxes; scores are
/// zero, diagonal one. Used to run baselines on ground-truth detections.
PageGraph page_graph_from_annotation(const PageAnnotation& annotation, double width,
                                     double height);

}  // namespace magipipe
