#include "magipipe/page_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace magipipe {

std::string_view to_string(WarningKind kind) {
  switch (kind) {
    case WarningKind::kClampedBox: return "clamped_box";
    case WarningKind::kAsymmetricScores: return "asymmetric_scores";
    case WarningKind::kCycle: return "cycle";
    case WarningKind::kContainment: return "containment";
    case WarningKind::kDegenerateSpeakerRow: return "degenerate_speaker_row";
    case WarningKind::kMiningConflict: return "mining_conflict";
    case WarningKind::kMissingEmbeddings: return "missing_embeddings";
  }
  return "unknown";
}

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr double kSymmetryTolerance = 1e-6;

std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

json parse_document(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw PageFormatError("", std::string("malformed file: ") + e.what());
  }
  if (!doc.is_object()) throw PageFormatError("", "top level must be an object");
  return doc;
}

double read_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw PageFormatError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw PageFormatError(path, "non-finite number");
  return d;
}

std::size_t read_index(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw PageFormatError(path, "expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::string read_string(const json& doc, const std::string& key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw PageFormatError(key, "missing field");
  if (!it->is_string()) throw PageFormatError(key, "expected a string");
  return it->get<std::string>();
}

const json* find_array(const json& doc, const std::string& key) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return nullptr;
  if (!it->is_array()) throw PageFormatError(key, "expected an array");
  return &*it;
}

Box read_box(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 4) throw PageFormatError(path, "expected [x1, y1, x2, y2]");
  Box b{read_number(v[0], index_path(path, 0)), read_number(v[1], index_path(path, 1)),
        read_number(v[2], index_path(path, 2)), read_number(v[3], index_path(path, 3))};
  if (b.x1 > b.x2 || b.y1 > b.y2) throw PageFormatError(path, "box has x1 > x2 or y1 > y2");
  return b;
}

// Clamps into [0,width] x [0,height]; records a warning when anything moved.
Box clamp_box(Box b, double width, double height, const std::string& path, Warnings& warnings) {
  Box c{std::clamp(b.x1, 0.0, width), std::clamp(b.y1, 0.0, height), std::clamp(b.x2, 0.0, width),
        std::clamp(b.y2, 0.0, height)};
  if (!(c == b)) {
    std::ostringstream msg;
    msg << path << ": box clamped to page bounds";
    warnings.push_back({WarningKind::kClampedBox, msg.str()});
  }
  return c;
}

std::vector<Box> read_boxes(const json& doc, const std::string& key) {
  std::vector<Box> out;
  if (const json* arr = find_array(doc, key)) {
    out.reserve(arr->size());
    for (std::size_t i = 0; i < arr->size(); ++i) out.push_back(read_box((*arr)[i], index_path(key, i)));
  }
  return out;
}

ScoreMatrix read_matrix(const json& doc, const std::string& key, std::size_t rows, std::size_t cols) {
  const json* arr = find_array(doc, key);
  if (arr == nullptr) {
    if (rows == 0 || cols == 0) return ScoreMatrix(rows, cols);
    throw PageFormatError(key, "missing score matrix of shape " + std::to_string(rows) + "x" +
                                   std::to_string(cols));
  }
  if (arr->size() != rows) {
    throw PageFormatError(key, "shape mismatch: expected " + std::to_string(rows) + " rows, got " +
                                   std::to_string(arr->size()));
  }
  ScoreMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string row_path = index_path(key, r);
    const json& row = (*arr)[r];
    if (!row.is_array()) throw PageFormatError(row_path, "expected an array");
    if (row.size() != cols) {
      throw PageFormatError(row_path, "shape mismatch: expected " + std::to_string(cols) +
                                          " columns, got " + std::to_string(row.size()));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string cell_path = index_path(row_path, c);
      const double v = read_number(row[c], cell_path);
      if (v < 0.0 || v > 1.0) throw PageFormatError(cell_path, "score outside [0, 1]");
      m(r, c) = v;
    }
  }
  return m;
}

std::optional<std::vector<double>> read_detection_scores(const json& doc, const std::string& key,
                                                         std::size_t expected) {
  const json* arr = find_array(doc, key);
  if (arr == nullptr) return std::nullopt;
  if (arr->size() != expected) {
    throw PageFormatError(key, "expected " + std::to_string(expected) + " scores, got " +
                                   std::to_string(arr->size()));
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const double v = read_number((*arr)[i], index_path(key, i));
    if (v < 0.0 || v > 1.0) throw PageFormatError(index_path(key, i), "score outside [0, 1]");
    out.push_back(v);
  }
  return out;
}

std::vector<double> box_array(const Box& b) { return {b.x1, b.y1, b.x2, b.y2}; }

ordered_json matrix_json(const ScoreMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json boxes_json(const std::vector<Box>& boxes) {
  ordered_json arr = ordered_json::array();
  for (const Box& b : boxes) arr.push_back(box_array(b));
  return arr;
}

}  // namespace

Loaded<PageGraph> load_page_graph(std::string_view bytes) {
  const json doc = parse_document(bytes);
  Loaded<PageGraph> out;
  PageGraph& page = out.value;
  Warnings& warnings = out.warnings;

  page.page_id = read_string(doc, "page_id");
  if (!doc.contains("width")) throw PageFormatError("width", "missing field");
  if (!doc.contains("height")) throw PageFormatError("height", "missing field");
  page.width = read_number(doc["width"], "width");
  page.height = read_number(doc["height"], "height");
  if (page.width <= 0.0) throw PageFormatError("width", "must be positive");
  if (page.height <= 0.0) throw PageFormatError("height", "must be positive");

  page.panels = read_boxes(doc, "panels");
  for (std::size_t i = 0; i < page.panels.size(); ++i) {
    page.panels[i] = clamp_box(page.panels[i], page.width, page.height, index_path("panels", i), warnings);
  }

  if (const json* texts = find_array(doc, "texts")) {
    for (std::size_t i = 0; i < texts->size(); ++i) {
      const std::string path = index_path("texts", i);
      const json& t = (*texts)[i];
      TextBlock block;
      if (t.is_array()) {
        block.box = read_box(t, path);
      } else if (t.is_object()) {
        if (!t.contains("box")) throw PageFormatError(path + ".box", "missing field");
        block.box = read_box(t["box"], path + ".box");
        if (auto c = t.find("content"); c != t.end() && !c->is_null()) {
          if (!c->is_string()) throw PageFormatError(path + ".content", "expected a string");
          block.content = c->get<std::string>();
        }
      } else {
        throw PageFormatError(path, "expected an object or a box");
      }
      block.box = clamp_box(block.box, page.width, page.height, path + ".box", warnings);
      page.texts.push_back(std::move(block));
    }
  }

  page.characters = read_boxes(doc, "characters");
  for (std::size_t i = 0; i < page.characters.size(); ++i) {
    page.characters[i] =
        clamp_box(page.characters[i], page.width, page.height, index_path("characters", i), warnings);
  }

  const std::size_t n_char = page.characters.size();
  const std::size_t n_text = page.texts.size();
  page.char_char_scores = read_matrix(doc, "char_char_scores", n_char, n_char);
  page.text_char_scores = read_matrix(doc, "text_char_scores", n_text, n_char);

  double worst_asymmetry = 0.0;
  ScoreMatrix& cc = page.char_char_scores;
  for (std::size_t i = 0; i < n_char; ++i) {
    cc(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n_char; ++j) {
      worst_asymmetry = std::max(worst_asymmetry, std::abs(cc(i, j) - cc(j, i)));
      const double mean = 0.5 * (cc(i, j) + cc(j, i));
      cc(i, j) = mean;
      cc(j, i) = mean;
    }
  }
  if (worst_asymmetry > kSymmetryTolerance) {
    std::ostringstream msg;
    msg << "char_char_scores: asymmetric by up to " << worst_asymmetry << ", symmetrized by averaging";
    warnings.push_back({WarningKind::kAsymmetricScores, msg.str()});
  }

  if (const json* emb = find_array(doc, "char_embeddings")) {
    if (emb->size() != n_char) {
      throw PageFormatError("char_embeddings", "expected " + std::to_string(n_char) +
                                                   " vectors, got " + std::to_string(emb->size()));
    }
    std::vector<std::vector<double>> vectors;
    std::optional<std::size_t> dim;
    for (std::size_t i = 0; i < emb->size(); ++i) {
      const std::string path = index_path("char_embeddings", i);
      const json& v = (*emb)[i];
      if (!v.is_array() || v.empty()) throw PageFormatError(path, "expected a non-empty array");
      if (dim && v.size() != *dim) throw PageFormatError(path, "embedding dimension mismatch");
      dim = v.size();
      std::vector<double> vec;
      for (std::size_t k = 0; k < v.size(); ++k) vec.push_back(read_number(v[k], index_path(path, k)));
      vectors.push_back(std::move(vec));
    }
    page.char_embeddings = std::move(vectors);
  }

  page.panel_scores = read_detection_scores(doc, "panel_scores", page.panels.size());
  page.text_scores = read_detection_scores(doc, "text_scores", n_text);
  page.character_scores = read_detection_scores(doc, "character_scores", n_char);
  return out;
}

std::string serialize_page_graph(const PageGraph& page) {
  ordered_json doc;
  doc["page_id"] = page.page_id;
  doc["width"] = page.width;
  doc["height"] = page.height;
  doc["panels"] = boxes_json(page.panels);
  ordered_json texts = ordered_json::array();
  for (const TextBlock& t : page.texts) {
    ordered_json entry;
    entry["box"] = box_array(t.box);
    if (t.content) entry["content"] = *t.content;
    texts.push_back(std::move(entry));
  }
  doc["texts"] = std::move(texts);
  doc["characters"] = boxes_json(page.characters);
  doc["char_char_scores"] = matrix_json(page.char_char_scores);
  doc["text_char_scores"] = matrix_json(page.text_char_scores);
  if (page.char_embeddings) doc["char_embeddings"] = *page.char_embeddings;
  if (page.panel_scores) doc["panel_scores"] = *page.panel_scores;
  if (page.text_scores) doc["text_scores"] = *page.text_scores;
  if (page.character_scores) doc["character_scores"] = *page.character_scores;
  return doc.dump(1) + "\n";
}

Loaded<PageAnnotation> load_page_annotation(std::string_view bytes) {
  const json doc = parse_document(bytes);
  Loaded<PageAnnotation> out;
  PageAnnotation& ann = out.value;
  ann.page_id = read_string(doc, "page_id");
  if (find_array(doc, "gt_panels") != nullptr) ann.gt_panels = read_boxes(doc, "gt_panels");
  ann.gt_texts = read_boxes(doc, "gt_texts");
  ann.gt_characters = read_boxes(doc, "gt_characters");

  if (const json* ids = find_array(doc, "gt_char_identity")) {
    for (std::size_t i = 0; i < ids->size(); ++i) {
      const json& v = (*ids)[i];
      if (!v.is_number_integer()) {
        throw PageFormatError(index_path("gt_char_identity", i), "expected an integer label");
      }
      ann.gt_char_identity.push_back(v.get<long long>());
    }
  }
  if (ann.gt_char_identity.size() != ann.gt_characters.size()) {
    throw PageFormatError("gt_char_identity", "expected one label per gt character (" +
                                                   std::to_string(ann.gt_characters.size()) + "), got " +
                                                   std::to_string(ann.gt_char_identity.size()));
  }

  std::vector<bool> has_speaker(ann.gt_texts.size(), false);
  if (const json* edges = find_array(doc, "gt_speaker_edges")) {
    for (std::size_t i = 0; i < edges->size(); ++i) {
      const std::string path = index_path("gt_speaker_edges", i);
      const json& e = (*edges)[i];
      if (!e.is_array() || e.size() != 2) throw PageFormatError(path, "expected [text, character]");
      SpeakerEdge edge{read_index(e[0], index_path(path, 0)), read_index(e[1], index_path(path, 1))};
      if (edge.text >= ann.gt_texts.size()) throw PageFormatError(path, "text index out of range");
      if (edge.character >= ann.gt_characters.size()) {
        throw PageFormatError(path, "character index out of range");
      }
      if (has_speaker[edge.text]) throw PageFormatError(path, "text already has a speaker");
      has_speaker[edge.text] = true;
      ann.gt_speaker_edges.push_back(edge);
    }
  }

  auto read_permutation = [&](const std::string& key, std::size_t n) -> std::optional<std::vector<std::size_t>> {
    const json* arr = find_array(doc, key);
    if (arr == nullptr) return std::nullopt;
    std::vector<std::size_t> order;
    std::vector<bool> seen(n, false);
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::size_t v = read_index((*arr)[i], index_path(key, i));
      if (v >= n || seen[v]) throw PageFormatError(index_path(key, i), "not a permutation");
      seen[v] = true;
      order.push_back(v);
    }
    if (order.size() != n) throw PageFormatError(key, "not a permutation");
    return order;
  };
  ann.gt_panel_order = read_permutation("gt_panel_order", ann.gt_panels ? ann.gt_panels->size() : 0);
  ann.gt_text_order = read_permutation("gt_text_order", ann.gt_texts.size());
  return out;
}

std::string serialize_page_annotation(const PageAnnotation& ann) {
  ordered_json doc;
  doc["page_id"] = ann.page_id;
  if (ann.gt_panels) doc["gt_panels"] = boxes_json(*ann.gt_panels);
  doc["gt_texts"] = boxes_json(ann.gt_texts);
  doc["gt_characters"] = boxes_json(ann.gt_characters);
  doc["gt_char_identity"] = ann.gt_char_identity;
  ordered_json edges = ordered_json::array();
  for (const SpeakerEdge& e : ann.gt_speaker_edges) edges.push_back({e.text, e.character});
  doc["gt_speaker_edges"] = std::move(edges);
  if (ann.gt_panel_order) doc["gt_panel_order"] = *ann.gt_panel_order;
  if (ann.gt_text_order) doc["gt_text_order"] = *ann.gt_text_order;
  return doc.dump(1) + "\n";
}

double detection_score(const std::optional<std::vector<double>>& scores, std::size_t index) {
  if (!scores || index >= scores->size()) return 1.0;
  return (*scores)[index];
}

std::optional<std::size_t> assign_box_to_panel(const Box& box, const std::vector<Box>& panels) {
  if (panels.empty()) return std::nullopt;
  const double cx = box.center_x();
  const double cy = box.center_y();

  // Prefers larger overlap, then the smaller panel, then the lower index.
  auto better = [&](std::size_t cand, std::size_t best) {
    const double oc = intersection_area(box, panels[cand]);
    const double ob = intersection_area(box, panels[best]);
    if (oc != ob) return oc > ob;
    const double ac = panels[cand].area();
    const double ab = panels[best].area();
    if (ac != ab) return ac < ab;
    return cand < best;
  };

  std::optional<std::size_t> best;
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Box& pb = panels[p];
    if (cx >= pb.x1 && cx <= pb.x2 && cy >= pb.y1 && cy <= pb.y2) {
      if (!best || better(p, *best)) best = p;
    }
  }
  if (best) return best;

  for (std::size_t p = 0; p < panels.size(); ++p) {
    if (intersection_area(box, panels[p]) <= 0.0) continue;
    if (!best || better(p, *best)) best = p;
  }
  if (best) return best;

  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const double d = std::hypot(panels[p].center_x() - cx, panels[p].center_y() - cy);
    if (d < best_dist) {
      best_dist = d;
      best = p;
    }
  }
  return best;
}

PanelAssignment assign_boxes_to_panels(const PageGraph& page, const Tolerance& /*tol*/) {
  PanelAssignment out;
  out.text_to_panel.reserve(page.texts.size());
  for (const TextBlock& t : page.texts) out.text_to_panel.push_back(assign_box_to_panel(t.box, page.panels));
  out.char_to_panel.reserve(page.characters.size());
  for (const Box& c : page.characters) out.char_to_panel.push_back(assign_box_to_panel(c, page.panels));
  return out;
}

PageGraph page_graph_from_annotation(const PageAnnotation& annotation, double width, double height) {
  PageGraph page;
  page.page_id = annotation.page_id;
  page.width = width;
  page.height = height;
  if (annotation.gt_panels) page.panels = *annotation.gt_panels;
  for (const Box& b : annotation.gt_texts) page.texts.push_back({b, std::nullopt});
  page.characters = annotation.gt_characters;
  const std::size_t n = page.characters.size();
  page.char_char_scores = ScoreMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) page.char_char_scores(i, i) = 1.0;
  page.text_char_scores = ScoreMatrix(page.texts.size(), n);
  return page;
}

}  // namespace magipipe
