#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "magipipe/association.hpp"
#include "magipipe/geometry.hpp"
#include "magipipe/page_model.hpp"

namespace magipipe {

enum class DetectionClass { kPanel, kText, kCharacter };

struct Detection {
  Box box;
  double score = 1.0;
  DetectionClass cls = DetectionClass::kCharacter;
};

inline constexpr double kDefaultIouThreshold = 0.5;
inline constexpr std::size_t kDefaultTopK = 100;

/// Single-image, single-class average precision with 101-point interpolated
/// precision. Predictions are ranked by descending score (ties keep input
/// order) and truncated to top_k; each one greedily takes the unmatched
/// ground truth with the highest IoU >= iou_threshold. nullopt when there is
/// no ground truth.
std::optional<double> average_precision(const std::vector<Detection>& preds, const std::vector<Box>& gts,
                                        double iou_threshold = kDefaultIouThreshold,
                                        std::size_t top_k = kDefaultTopK);

struct ImageDetections {
  std::vector<Detection> preds;
  std::vector<Box> gts;
};

/// Pooled AP: matching and top_k truncation happen per image, the precision
/// recall curve is built over all images' detections.
std::optional<double> pooled_average_precision(const std::vector<ImageDetections>& images,
                                               double iou_threshold = kDefaultIouThreshold,
                                               std::size_t top_k = kDefaultTopK);

/// Minimum-cost assignment of rows to columns for a rectangular cost
/// matrix (cost[r][c]). Returns for every row its column, or nullopt when
/// there are more rows than columns and the row is left out.
std::vector<std::optional<std::size_t>> solve_assignment(const std::vector<std::vector<double>>& cost);

/// gt index -> pred index; cost is 1 - IoU and zero-IoU pairs are severed.
std::vector<std::optional<std::size_t>> hungarian_match_boxes(const std::vector<Box>& preds,
                                                              const std::vector<Box>& gts);

struct ClusteringScores {
  double ami = 0.0;
  double nmi = 0.0;
};

/// AMI with the hypergeometric expected mutual information and NMI, both
/// normalized by the arithmetic mean of the entropies. Identical partitions
/// score 1; a zero denominator otherwise scores 0. Throws
/// std::invalid_argument on length mismatch or empty input.
ClusteringScores clustering_metrics(const std::vector<long long>& pred, const std::vector<long long>& gt);

struct RetrievalScores {
  std::optional<double> mrr;
  std::optional<double> map_at_r;
  std::optional<double> p_at_1;
  std::optional<double> r_precision;
  std::size_t queries = 0;
};

/// Every character is a query against all others ranked by descending
/// similarity (ties by index). Queries whose class has no other member are
/// skipped; R is the class size minus one.
RetrievalScores retrieval_metrics(const ScoreMatrix& similarity, const std::vector<long long>& gt_labels);

/// gt -> pred index maps for the boxes a speaker assignment refers to.
struct BoxMatching {
  std::vector<std::optional<std::size_t>> texts;
  std::vector<std::optional<std::size_t>> characters;

  static BoxMatching identity(std::size_t n_texts, std::size_t n_characters);
};

/// Fraction of ground-truth speaker edges whose text's predicted speaker
/// maps onto the ground-truth character. nullopt without ground-truth edges.
std::optional<double> recall_at_num_texts(const SpeakerAssignment& pred, const std::vector<SpeakerEdge>& gt_edges,
                                          const BoxMatching& gt_match);

enum class SpeakerMethod { kModel, kNearestCharacter };

struct EvalConfig {
  double tau = kDefaultCharacterMatchThreshold;
  double iou_threshold = kDefaultIouThreshold;
  std::size_t top_k = kDefaultTopK;
  SpeakerMethod speaker_method = SpeakerMethod::kModel;
  bool sweep_tau = false;
};

struct PageMetrics {
  std::string page_id;
  std::optional<double> ami;
  std::optional<double> nmi;
  std::optional<double> mrr;
  std::optional<double> map_at_r;
  std::optional<double> p_at_1;
  std::optional<double> r_precision;
  std::optional<double> recall_at_num_texts;
};

struct TauSweepPoint {
  double tau = 0.0;
  std::optional<double> ami;
  std::optional<double> nmi;
};

struct EvalReport {
  std::optional<double> ap_panel;
  std::optional<double> ap_text;
  std::optional<double> ap_character;
  std::optional<double> ami;
  std::optional<double> nmi;
  std::optional<double> mrr;
  std::optional<double> map_at_r;
  std::optional<double> p_at_1;
  std::optional<double> r_precision;
  std::optional<double> recall_at_num_texts;
  std::size_t page_count = 0;
  std::vector<PageMetrics> pages;
  /// Filled when EvalConfig::sweep_tau is set; best_tau maximizes AMI.
  std::vector<TauSweepPoint> tau_sweep;
  std::optional<double> best_tau;
};

struct EvalPage {
  PageGraph graph;
  PageAnnotation annotation;
};

/// Throws std::invalid_argument when a graph and its annotation disagree
/// on page_id, or when there are no pages.
EvalReport evaluate_dataset(const std::vector<EvalPage>& pages, const EvalConfig& config = {});

/// Thresholds 0.05, 0.10, ..., 0.95.
std::vector<double> tau_sweep_grid();

std::string eval_report_json(const EvalReport& report);
std::string eval_report_table(const EvalReport& report);

}  // namespace magipipe
