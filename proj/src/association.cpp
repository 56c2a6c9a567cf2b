#include "magipipe/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace magipipe {

std::size_t ClusterSet::cluster_count() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

IndexPair ordered(std::size_t a, std::size_t b) { return a < b ? IndexPair{a, b} : IndexPair{b, a}; }

double center_distance(const Box& a, const Box& b) {
  return std::hypot(a.center_x() - b.center_x(), a.center_y() - b.center_y());
}

std::optional<std::size_t> nearest_character(const Box& text, const std::vector<Box>& characters) {
  std::optional<std::size_t> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < characters.size(); ++c) {
    const double d = center_distance(text, characters[c]);
    if (d < best_dist) {
      best_dist = d;
      best = c;
    }
  }
  return best;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::set<IndexPair> transitive_negatives(const std::set<IndexPair>& positives, std::set<IndexPair> negatives) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<IndexPair> added;
    for (const auto& [a, b] : positives) {
      for (const auto& [c, d] : negatives) {
        // positive {a,b} with negative {b,x} or {a,x} gives negative {a,x} / {b,x}.
        auto consider = [&](std::size_t keep, std::size_t shared, std::size_t p, std::size_t q) {
          std::size_t other;
          if (p == shared) {
            other = q;
          } else if (q == shared) {
            other = p;
          } else {
            return;
          }
          if (other == keep) return;
          const IndexPair n = ordered(keep, other);
          if (!negatives.count(n)) added.push_back(n);
        };
        consider(a, b, c, d);
        consider(b, a, c, d);
      }
    }
    for (const IndexPair& n : added) {
      if (negatives.insert(n).second) changed = true;
    }
  }
  return negatives;
}

}  // namespace

ClusterSet cluster_characters(const ScoreMatrix& scores, double tau) {
  if (scores.rows() != scores.cols()) throw std::invalid_argument("cluster_characters: score matrix is not square");
  const std::size_t n = scores.rows();
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (scores(i, j) >= tau) sets.unite(i, j);
    }
  }
  ClusterSet out;
  out.threshold_used = tau;
  out.labels.resize(n);
  std::vector<std::optional<std::size_t>> label_of_root(n);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& label = label_of_root[sets.find(i)];
    if (!label) label = next++;
    out.labels[i] = *label;
  }
  return out;
}

ClusterSet cluster_characters(const PageGraph& page, double tau) {
  return cluster_characters(page.char_char_scores, tau);
}

SpeakerResult assign_speakers(const PageGraph& page) {
  SpeakerResult result;
  const ScoreMatrix& scores = page.text_char_scores;
  result.assignment.per_text.resize(page.texts.size());
  if (page.characters.empty()) return result;
  for (std::size_t t = 0; t < page.texts.size(); ++t) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.cols(); ++c) {
      if (scores(t, c) > scores(t, best)) best = c;
    }
    if (scores(t, best) <= 0.0) {
      result.warnings.push_back({WarningKind::kDegenerateSpeakerRow,
                                 "text " + std::to_string(t) + ": all speaker scores are zero"});
      continue;
    }
    result.assignment.per_text[t] = SpeakerPrediction{best, scores(t, best)};
  }
  return result;
}

SpeakerAssignment filter_low_confidence(const SpeakerAssignment& assignment, double cutoff) {
  SpeakerAssignment out = assignment;
  for (auto& p : out.per_text) {
    if (p && p->confidence < cutoff) p.reset();
  }
  return out;
}

SpeakerAssignment nearest_character_baseline(const PageGraph& page) {
  SpeakerAssignment out;
  out.per_text.reserve(page.texts.size());
  for (const TextBlock& t : page.texts) {
    if (auto c = nearest_character(t.box, page.characters)) {
      out.per_text.push_back(SpeakerPrediction{*c, 1.0});
    } else {
      out.per_text.push_back(std::nullopt);
    }
  }
  return out;
}

std::vector<IndexPair> mutual_nearest_neighbours(const std::vector<std::vector<double>>& embeddings) {
  const std::size_t n = embeddings.size();
  std::vector<std::optional<std::size_t>> nearest(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double s = cosine(embeddings[i], embeddings[j]);
      if (s > best) {
        best = s;
        nearest[i] = j;
      }
    }
  }
  std::vector<IndexPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (nearest[i] && *nearest[i] > i && nearest[*nearest[i]] == i) out.emplace_back(i, *nearest[i]);
  }
  return out;
}

MiningResult close_mined_pairs(std::vector<IndexPair> positives, std::vector<IndexPair> negatives) {
  std::set<IndexPair> pos;
  std::set<IndexPair> neg;
  for (const auto& [a, b] : positives) {
    if (a != b) pos.insert(ordered(a, b));
  }
  for (const auto& [a, b] : negatives) {
    if (a != b) neg.insert(ordered(a, b));
  }

  MiningResult result;
  std::set<IndexPair> closed;
  for (;;) {
    closed = transitive_negatives(pos, neg);
    std::vector<IndexPair> conflicts;
    for (const IndexPair& p : pos) {
      if (closed.count(p)) conflicts.push_back(p);
    }
    if (conflicts.empty()) break;
    for (const IndexPair& p : conflicts) {
      pos.erase(p);
      result.warnings.push_back({WarningKind::kMiningConflict,
                                 "characters " + std::to_string(p.first) + " and " + std::to_string(p.second) +
                                     " mined as both same and different; kept as negative"});
    }
  }
  result.pairs.positives.assign(pos.begin(), pos.end());
  result.pairs.negatives.assign(closed.begin(), closed.end());
  return result;
}

MiningResult mine_character_pairs(const PageGraph& page, const PanelAssignment& assignment) {
  if (!page.char_embeddings) throw std::invalid_argument("mine_character_pairs: page has no char_embeddings");
  const std::size_t n = page.characters.size();
  if (page.char_embeddings->size() != n || assignment.char_to_panel.size() != n) {
    throw std::invalid_argument("mine_character_pairs: embeddings or assignment do not match characters");
  }
  auto same_panel = [&](std::size_t a, std::size_t b) {
    const auto& pa = assignment.char_to_panel[a];
    const auto& pb = assignment.char_to_panel[b];
    return pa && pb && *pa == *pb;
  };

  std::vector<IndexPair> negatives;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (same_panel(a, b)) negatives.emplace_back(a, b);
    }
  }
  std::vector<IndexPair> positives;
  for (const IndexPair& p : mutual_nearest_neighbours(*page.char_embeddings)) {
    if (!same_panel(p.first, p.second)) positives.push_back(p);
  }
  return close_mined_pairs(std::move(positives), std::move(negatives));
}

std::vector<IndexPair> mine_text_pairs(const PageGraph& page) {
  std::vector<IndexPair> out;
  const SpeakerAssignment nearest = nearest_character_baseline(page);
  for (std::size_t t = 0; t < nearest.per_text.size(); ++t) {
    if (nearest.per_text[t]) out.emplace_back(t, nearest.per_text[t]->character);
  }
  return out;
}

}  // namespace magipipe
