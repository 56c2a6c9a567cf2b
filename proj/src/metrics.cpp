#include "magipipe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace magipipe {

namespace {

struct RankedDetection {
  double score = 0.0;
  bool true_positive = false;
};

// Greedy per-image matching in descending-score order.
std::vector<RankedDetection> match_image(const std::vector<Detection>& preds, const std::vector<Box>& gts,
                                         double iou_threshold, std::size_t top_k) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  if (order.size() > top_k) order.resize(top_k);

  std::vector<bool> taken(gts.size(), false);
  std::vector<RankedDetection> out;
  out.reserve(order.size());
  for (std::size_t p : order) {
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(preds[p].box, gts[g]);
      if (v >= iou_threshold && v > best_iou) {
        best_iou = v;
        best = g;
      }
    }
    if (best) taken[*best] = true;
    out.push_back({preds[p].score, best.has_value()});
  }
  return out;
}

double interpolated_ap(const std::vector<RankedDetection>& ranked, std::size_t positives) {
  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (ranked[k].true_positive) ++tp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(positives));
  }
  for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);

  double sum = 0.0;
  for (int step = 0; step <= 100; ++step) {
    const double r = step / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

double entropy(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

template <typename T>
std::optional<double> mean_of(const std::vector<T>& items, std::optional<double> T::*field) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const T& item : items) {
    if (item.*field) {
      sum += *(item.*field);
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

}  // namespace

std::optional<double> average_precision(const std::vector<Detection>& preds, const std::vector<Box>& gts,
                                        double iou_threshold, std::size_t top_k) {
  return pooled_average_precision({ImageDetections{preds, gts}}, iou_threshold, top_k);
}

std::optional<double> pooled_average_precision(const std::vector<ImageDetections>& images, double iou_threshold,
                                               std::size_t top_k) {
  std::size_t positives = 0;
  std::vector<RankedDetection> pooled;
  for (const ImageDetections& image : images) {
    positives += image.gts.size();
    const auto ranked = match_image(image.preds, image.gts, iou_threshold, top_k);
    pooled.insert(pooled.end(), ranked.begin(), ranked.end());
  }
  if (positives == 0) return std::nullopt;
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const RankedDetection& a, const RankedDetection& b) { return a.score > b.score; });
  return interpolated_ap(pooled, positives);
}

std::vector<std::optional<std::size_t>> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t rows = cost.size();
  if (rows == 0) return {};
  const std::size_t cols = cost.front().size();
  for (const auto& row : cost) {
    if (row.size() != cols) throw std::invalid_argument("solve_assignment: ragged cost matrix");
  }
  if (cols == 0) return std::vector<std::optional<std::size_t>>(rows);

  if (rows > cols) {
    std::vector<std::vector<double>> transposed(cols, std::vector<double>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) transposed[c][r] = cost[r][c];
    }
    const auto col_to_row = solve_assignment(transposed);
    std::vector<std::optional<std::size_t>> out(rows);
    for (std::size_t c = 0; c < cols; ++c) {
      if (col_to_row[c]) out[*col_to_row[c]] = c;
    }
    return out;
  }

  // Shortest augmenting paths with row/column potentials; 1-based, slot 0 is
  // the virtual source column.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<std::size_t> match_col(cols + 1, 0), way(cols + 1, 0);
  for (std::size_t r = 1; r <= rows; ++r) {
    match_col[0] = r;
    std::size_t col0 = 0;
    std::vector<double> minv(cols + 1, inf);
    std::vector<bool> used(cols + 1, false);
    do {
      used[col0] = true;
      const std::size_t r0 = match_col[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t c = 1; c <= cols; ++c) {
        if (used[c]) continue;
        const double cur = cost[r0 - 1][c - 1] - u[r0] - v[c];
        if (cur < minv[c]) {
          minv[c] = cur;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = c;
        }
      }
      for (std::size_t c = 0; c <= cols; ++c) {
        if (used[c]) {
          u[match_col[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (match_col[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match_col[col0] = match_col[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<std::optional<std::size_t>> out(rows);
  for (std::size_t c = 1; c <= cols; ++c) {
    if (match_col[c] != 0) out[match_col[c] - 1] = c - 1;
  }
  return out;
}

std::vector<std::optional<std::size_t>> hungarian_match_boxes(const std::vector<Box>& preds,
                                                              const std::vector<Box>& gts) {
  std::vector<std::optional<std::size_t>> out(gts.size());
  if (gts.empty() || preds.empty()) return out;
  std::vector<std::vector<double>> cost(gts.size(), std::vector<double>(preds.size()));
  for (std::size_t g = 0; g < gts.size(); ++g) {
    for (std::size_t p = 0; p < preds.size(); ++p) cost[g][p] = 1.0 - iou(preds[p], gts[g]);
  }
  out = solve_assignment(cost);
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (out[g] && iou(preds[*out[g]], gts[g]) <= 0.0) out[g].reset();
  }
  return out;
}

ClusteringScores clustering_metrics(const std::vector<long long>& pred, const std::vector<long long>& gt) {
  if (pred.size() != gt.size()) throw std::invalid_argument("clustering_metrics: label lists differ in length");
  if (pred.empty()) throw std::invalid_argument("clustering_metrics: no labels");

  std::map<long long, std::size_t> pred_index;
  std::map<long long, std::size_t> gt_index;
  for (long long l : pred) pred_index.emplace(l, pred_index.size());
  for (long long l : gt) gt_index.emplace(l, gt_index.size());
  const std::size_t rows = pred_index.size();
  const std::size_t cols = gt_index.size();

  std::vector<std::vector<double>> table(rows, std::vector<double>(cols, 0.0));
  for (std::size_t k = 0; k < pred.size(); ++k) table[pred_index[pred[k]]][gt_index[gt[k]]] += 1.0;

  std::vector<double> a(rows, 0.0), b(cols, 0.0);
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      a[i] += table[i][j];
      b[j] += table[i][j];
      if (table[i][j] > 0.0) ++nonzero;
    }
  }
  // Same partition up to renaming: every cluster meets exactly one class.
  if (rows == cols && nonzero == rows) return {1.0, 1.0};

  const double n = static_cast<double>(pred.size());
  double mi = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double nij = table[i][j];
      if (nij > 0.0) mi += (nij / n) * std::log(n * nij / (a[i] * b[j]));
    }
  }
  mi = std::max(mi, 0.0);

  double emi = 0.0;
  const double lg_n = std::lgamma(n + 1.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double lo = std::max(1.0, a[i] + b[j] - n);
      const double hi = std::min(a[i], b[j]);
      for (double nij = lo; nij <= hi; nij += 1.0) {
        const double log_p = std::lgamma(a[i] + 1.0) + std::lgamma(b[j] + 1.0) + std::lgamma(n - a[i] + 1.0) +
                             std::lgamma(n - b[j] + 1.0) - lg_n - std::lgamma(nij + 1.0) -
                             std::lgamma(a[i] - nij + 1.0) - std::lgamma(b[j] - nij + 1.0) -
                             std::lgamma(n - a[i] - b[j] + nij + 1.0);
        emi += (nij / n) * std::log(n * nij / (a[i] * b[j])) * std::exp(log_p);
      }
    }
  }

  const double mean_h = 0.5 * (entropy(a, n) + entropy(b, n));
  ClusteringScores out;
  out.nmi = mean_h > 0.0 ? std::clamp(mi / mean_h, 0.0, 1.0) : 0.0;
  const double denom = mean_h - emi;
  out.ami = std::abs(denom) > 1e-15 ? (mi - emi) / denom : 0.0;
  out.ami = std::min(out.ami, 1.0);
  return out;
}

RetrievalScores retrieval_metrics(const ScoreMatrix& similarity, const std::vector<long long>& gt_labels) {
  const std::size_t n = gt_labels.size();
  if (similarity.rows() != n || similarity.cols() != n) {
    throw std::invalid_argument("retrieval_metrics: similarity shape does not match labels");
  }
  std::map<long long, std::size_t> class_size;
  for (long long l : gt_labels) ++class_size[l];

  double mrr = 0.0, map_r = 0.0, p1 = 0.0, rp = 0.0;
  RetrievalScores out;
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t r = class_size[gt_labels[q]] - 1;
    if (r == 0) continue;
    std::vector<std::size_t> candidates;
    for (std::size_t c = 0; c < n; ++c) {
      if (c != q) candidates.push_back(c);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) { return similarity(q, a) > similarity(q, b); });

    std::size_t hits = 0;
    double precision_sum = 0.0;
    std::optional<std::size_t> first_hit;
    for (std::size_t rank = 0; rank < candidates.size(); ++rank) {
      const bool relevant = gt_labels[candidates[rank]] == gt_labels[q];
      if (relevant && !first_hit) first_hit = rank + 1;
      if (rank < r && relevant) {
        ++hits;
        precision_sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
      }
    }
    mrr += 1.0 / static_cast<double>(*first_hit);
    p1 += gt_labels[candidates.front()] == gt_labels[q] ? 1.0 : 0.0;
    rp += static_cast<double>(hits) / static_cast<double>(r);
    map_r += precision_sum / static_cast<double>(r);
    ++out.queries;
  }
  if (out.queries > 0) {
    const double nq = static_cast<double>(out.queries);
    out.mrr = mrr / nq;
    out.map_at_r = map_r / nq;
    out.p_at_1 = p1 / nq;
    out.r_precision = rp / nq;
  }
  return out;
}

BoxMatching BoxMatching::identity(std::size_t n_texts, std::size_t n_characters) {
  BoxMatching m;
  for (std::size_t t = 0; t < n_texts; ++t) m.texts.push_back(t);
  for (std::size_t c = 0; c < n_characters; ++c) m.characters.push_back(c);
  return m;
}

std::optional<double> recall_at_num_texts(const SpeakerAssignment& pred, const std::vector<SpeakerEdge>& gt_edges,
                                          const BoxMatching& gt_match) {
  if (gt_edges.empty()) return std::nullopt;
  std::size_t correct = 0;
  for (const SpeakerEdge& edge : gt_edges) {
    if (edge.text >= gt_match.texts.size() || edge.character >= gt_match.characters.size()) continue;
    const auto& pred_text = gt_match.texts[edge.text];
    const auto& pred_char = gt_match.characters[edge.character];
    if (!pred_text || !pred_char || *pred_text >= pred.per_text.size()) continue;
    const auto& p = pred.per_text[*pred_text];
    if (p && p->character == *pred_char) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gt_edges.size());
}

std::vector<double> tau_sweep_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 19; ++k) grid.push_back(k * 5 / 100.0);
  return grid;
}

namespace {

struct MatchedCharacters {
  std::vector<std::size_t> gt;
  ScoreMatrix similarity;
  std::vector<long long> gt_labels;
};

MatchedCharacters matched_characters(const EvalPage& page, const std::vector<std::optional<std::size_t>>& match) {
  MatchedCharacters out;
  std::vector<std::size_t> pred;
  for (std::size_t g = 0; g < match.size(); ++g) {
    if (!match[g]) continue;
    out.gt.push_back(g);
    pred.push_back(*match[g]);
    out.gt_labels.push_back(page.annotation.gt_char_identity[g]);
  }
  out.similarity = ScoreMatrix(pred.size(), pred.size());
  for (std::size_t a = 0; a < pred.size(); ++a) {
    for (std::size_t b = 0; b < pred.size(); ++b) out.similarity(a, b) = page.graph.char_char_scores(pred[a], pred[b]);
  }
  return out;
}

std::optional<ClusteringScores> cluster_scores(const MatchedCharacters& chars, double tau) {
  if (chars.gt.empty()) return std::nullopt;
  const ClusterSet clusters = cluster_characters(chars.similarity, tau);
  std::vector<long long> pred(clusters.labels.begin(), clusters.labels.end());
  return clustering_metrics(pred, chars.gt_labels);
}

std::vector<Detection> detections(const std::vector<Box>& boxes, const std::optional<std::vector<double>>& scores,
                                  DetectionClass cls) {
  std::vector<Detection> out;
  for (std::size_t k = 0; k < boxes.size(); ++k) out.push_back({boxes[k], detection_score(scores, k), cls});
  return out;
}

}  // namespace

EvalReport evaluate_dataset(const std::vector<EvalPage>& pages, const EvalConfig& config) {
  if (pages.empty()) throw std::invalid_argument("no pages");
  EvalReport report;
  report.page_count = pages.size();

  std::vector<ImageDetections> panel_images, text_images, char_images;
  std::vector<MatchedCharacters> matched_chars;
  for (const EvalPage& page : pages) {
    const PageGraph& g = page.graph;
    const PageAnnotation& a = page.annotation;
    if (g.page_id != a.page_id) {
      throw std::invalid_argument("page id mismatch: graph '" + g.page_id + "' vs annotation '" + a.page_id + "'");
    }
    if (a.gt_char_identity.size() != a.gt_characters.size()) {
      throw std::invalid_argument("page '" + a.page_id + "': gt_char_identity does not match gt_characters");
    }

    std::vector<Box> text_boxes;
    for (const TextBlock& t : g.texts) text_boxes.push_back(t.box);
    if (a.gt_panels) panel_images.push_back({detections(g.panels, g.panel_scores, DetectionClass::kPanel), *a.gt_panels});
    text_images.push_back({detections(text_boxes, g.text_scores, DetectionClass::kText), a.gt_texts});
    char_images.push_back({detections(g.characters, g.character_scores, DetectionClass::kCharacter), a.gt_characters});

    BoxMatching match;
    match.texts = hungarian_match_boxes(text_boxes, a.gt_texts);
    match.characters = hungarian_match_boxes(g.characters, a.gt_characters);

    PageMetrics pm;
    pm.page_id = a.page_id;
    MatchedCharacters chars = matched_characters(page, match.characters);
    if (auto cs = cluster_scores(chars, config.tau)) {
      pm.ami = cs->ami;
      pm.nmi = cs->nmi;
    }
    if (!chars.gt.empty()) {
      const RetrievalScores rs = retrieval_metrics(chars.similarity, chars.gt_labels);
      pm.mrr = rs.mrr;
      pm.map_at_r = rs.map_at_r;
      pm.p_at_1 = rs.p_at_1;
      pm.r_precision = rs.r_precision;
    }
    const SpeakerAssignment speakers = config.speaker_method == SpeakerMethod::kModel
                                           ? assign_speakers(g).assignment
                                           : nearest_character_baseline(g);
    pm.recall_at_num_texts = recall_at_num_texts(speakers, a.gt_speaker_edges, match);
    report.pages.push_back(std::move(pm));
    matched_chars.push_back(std::move(chars));
  }

  if (!panel_images.empty()) report.ap_panel = pooled_average_precision(panel_images, config.iou_threshold, config.top_k);
  report.ap_text = pooled_average_precision(text_images, config.iou_threshold, config.top_k);
  report.ap_character = pooled_average_precision(char_images, config.iou_threshold, config.top_k);
  report.ami = mean_of(report.pages, &PageMetrics::ami);
  report.nmi = mean_of(report.pages, &PageMetrics::nmi);
  report.mrr = mean_of(report.pages, &PageMetrics::mrr);
  report.map_at_r = mean_of(report.pages, &PageMetrics::map_at_r);
  report.p_at_1 = mean_of(report.pages, &PageMetrics::p_at_1);
  report.r_precision = mean_of(report.pages, &PageMetrics::r_precision);
  report.recall_at_num_texts = mean_of(report.pages, &PageMetrics::recall_at_num_texts);

  if (config.sweep_tau) {
    for (double tau : tau_sweep_grid()) {
      std::vector<PageMetrics> per_page(matched_chars.size());
      for (std::size_t k = 0; k < matched_chars.size(); ++k) {
        if (auto cs = cluster_scores(matched_chars[k], tau)) {
          per_page[k].ami = cs->ami;
          per_page[k].nmi = cs->nmi;
        }
      }
      TauSweepPoint point{tau, mean_of(per_page, &PageMetrics::ami), mean_of(per_page, &PageMetrics::nmi)};
      if (point.ami) {
        const auto best = std::find_if(report.tau_sweep.begin(), report.tau_sweep.end(),
                                       [&](const TauSweepPoint& p) { return p.tau == report.best_tau; });
        if (!report.best_tau || best == report.tau_sweep.end() || !best->ami || *point.ami > *best->ami) {
          report.best_tau = tau;
        }
      }
      report.tau_sweep.push_back(point);
    }
  }
  return report;
}

namespace {

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::string cell(const std::optional<double>& v) {
  std::ostringstream os;
  if (v) {
    os << std::fixed << std::setprecision(4) << *v;
  } else {
    os << "-";
  }
  return os.str();
}

void table_block(std::ostringstream& os, const std::string& title,
                 const std::vector<std::pair<std::string, std::optional<double>>>& columns) {
  os << title << "\n";
  os << std::left << std::setw(12) << "method";
  for (const auto& [name, value] : columns) os << " | " << std::right << std::setw(10) << name;
  os << "\n" << std::string(12 + columns.size() * 13, '-') << "\n";
  os << std::left << std::setw(12) << "magi-pipe";
  for (const auto& [name, value] : columns) os << " | " << std::right << std::setw(10) << cell(value);
  os << "\n\n";
}

}  // namespace

std::string eval_report_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["page_count"] = report.page_count;
  nlohmann::ordered_json m;
  m["ap_panel"] = optional_json(report.ap_panel);
  m["ap_text"] = optional_json(report.ap_text);
  m["ap_character"] = optional_json(report.ap_character);
  m["ami"] = optional_json(report.ami);
  m["nmi"] = optional_json(report.nmi);
  m["mrr"] = optional_json(report.mrr);
  m["map_at_r"] = optional_json(report.map_at_r);
  m["p_at_1"] = optional_json(report.p_at_1);
  m["r_precision"] = optional_json(report.r_precision);
  m["recall_at_num_texts"] = optional_json(report.recall_at_num_texts);
  doc["metrics"] = std::move(m);
  if (!report.tau_sweep.empty()) {
    nlohmann::ordered_json sweep = nlohmann::ordered_json::array();
    for (const TauSweepPoint& p : report.tau_sweep) {
      nlohmann::ordered_json entry;
      entry["tau"] = p.tau;
      entry["ami"] = optional_json(p.ami);
      entry["nmi"] = optional_json(p.nmi);
      sweep.push_back(std::move(entry));
    }
    doc["tau_sweep"] = std::move(sweep);
    doc["best_tau"] = optional_json(report.best_tau);
  }
  nlohmann::ordered_json pages = nlohmann::ordered_json::array();
  for (const PageMetrics& p : report.pages) {
    nlohmann::ordered_json entry;
    entry["page_id"] = p.page_id;
    entry["ami"] = optional_json(p.ami);
    entry["nmi"] = optional_json(p.nmi);
    entry["mrr"] = optional_json(p.mrr);
    entry["map_at_r"] = optional_json(p.map_at_r);
    entry["p_at_1"] = optional_json(p.p_at_1);
    entry["r_precision"] = optional_json(p.r_precision);
    entry["recall_at_num_texts"] = optional_json(p.recall_at_num_texts);
    pages.push_back(std::move(entry));
  }
  doc["pages"] = std::move(pages);
  return doc.dump(2) + "\n";
}

std::string eval_report_table(const EvalReport& report) {
  std::ostringstream os;
  os << "pages: " << report.page_count << "\n\n";
  table_block(os, "Detection (AP@0.5)",
              {{"Panel", report.ap_panel}, {"Text", report.ap_text}, {"Char", report.ap_character}});
  table_block(os, "Character clustering",
              {{"AMI", report.ami},
               {"NMI", report.nmi},
               {"MRR", report.mrr},
               {"MAP@R", report.map_at_r},
               {"P@1", report.p_at_1},
               {"R-P", report.r_precision}});
  table_block(os, "Speaker association", {{"Recall@#t", report.recall_at_num_texts}});
  if (!report.tau_sweep.empty()) {
    os << "tau sweep (best by AMI): " << (report.best_tau ? cell(report.best_tau) : std::string("-")) << "\n";
    for (const TauSweepPoint& p : report.tau_sweep) {
      os << "  tau " << std::fixed << std::setprecision(2) << p.tau << "  AMI " << cell(p.ami) << "  NMI "
         << cell(p.nmi) << "\n";
    }
  }
  return os.str();
}

}  // namespace magipipe
