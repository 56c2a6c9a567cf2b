#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "magipipe/page_model.hpp"
#include "magipipe/warning.hpp"

namespace magipipe {

inline constexpr double kDefaultCharacterMatchThreshold = 0.65;
inline constexpr double kDefaultConfidenceCutoff = 0.4;

/// Partition of a page's character boxes into identities. Labels are
/// consecutive from 0 in order of first appearance.
struct ClusterSet {
  std::vector<std::size_t> labels;
  double threshold_used = kDefaultCharacterMatchThreshold;

  std::size_t cluster_count() const;

  friend bool operator==(const ClusterSet&, const ClusterSet&) = default;
};

struct SpeakerPrediction {
  std::size_t character = 0;
  double confidence = 0.0;

  friend bool operator==(const SpeakerPrediction&, const SpeakerPrediction&) = default;
};

/// One optional prediction per text block.
struct SpeakerAssignment {
  std::vector<std::optional<SpeakerPrediction>> per_text;

  friend bool operator==(const SpeakerAssignment&, const SpeakerAssignment&) = default;
};

struct SpeakerResult {
  SpeakerAssignment assignment;
  Warnings warnings;
};

using IndexPair = std::pair<std::size_t, std::size_t>;

/// Mined pseudo-labels. Pairs are stored as (lo, hi) with lo < hi, sorted.
struct MinedPairs {
  std::vector<IndexPair> positives;
  std::vector<IndexPair> negatives;

  friend bool operator==(const MinedPairs&, const MinedPairs&) = default;
};

struct MiningResult {
  MinedPairs pairs;
  Warnings warnings;
};

/// Connected components of the graph linking characters whose score is
/// >= tau.
ClusterSet cluster_characters(const ScoreMatrix& char_char_scores, double tau);
ClusterSet cluster_characters(const PageGraph& page, double tau = kDefaultCharacterMatchThreshold);

/// Per-text argmax over text_char_scores; ties pick the lowest character
/// index. Rows that are all zero yield no prediction and a warning.
SpeakerResult assign_speakers(const PageGraph& page);

/// Drops predictions whose confidence is below `cutoff`.
SpeakerAssignment filter_low_confidence(const SpeakerAssignment& assignment,
                                        double cutoff = kDefaultConfidenceCutoff);

/// Assigns each text to the character with the nearest box center, with
/// confidence 1.
SpeakerAssignment nearest_character_baseline(const PageGraph& page);

/// Same-panel pairs become negatives; mutual nearest neighbours in embedding
/// space (cosine) become positives unless they share a panel; negatives are
/// then closed under "A = B and B != C implies A != C".
/// Throws std::invalid_argument when the page has no character embeddings.
MiningResult mine_character_pairs(const PageGraph& page, const PanelAssignment& assignment);

/// Closes `negatives` under the transitivity rule using `positives`. Any
/// positive that ends up also negative is removed (with a warning) and the
/// closure is recomputed from the rule-(a) negatives until stable.
MiningResult close_mined_pairs(std::vector<IndexPair> positives, std::vector<IndexPair> negatives);

/// Mutual nearest neighbours by cosine similarity; ties pick the lowest index.
std::vector<IndexPair> mutual_nearest_neighbours(const std::vector<std::vector<double>>& embeddings);

/// Text-to-character pseudo-pairs from the nearest-character rule.
std::vector<IndexPair> mine_text_pairs(const PageGraph& page);

}  // namespace magipipe
