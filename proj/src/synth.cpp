#include "magipipe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace magipipe {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // 53 random bits mapped onto [0, 1); identical on every platform, unlike
  // std::uniform_real_distribution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(engine_() % n); }
  std::uint64_t next() { return engine_(); }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t k = items.size(); k > 1; --k) std::swap(items[k - 1], items[below(k)]);
  }

 private:
  std::mt19937_64 engine_;
};

struct BuildNode {
  CutNode::Axis axis = CutNode::Axis::kLeaf;
  double position = 0.0;
  Box region;
  std::vector<BuildNode> children;  // top/left child first
};

struct GuillotineParams {
  double min_width = 0.0;
  double min_height = 0.0;
  double gap = 0.0;
  double slack = 0.0;
  int max_depth = 0;
};

void collect_leaves(const BuildNode& node, std::vector<Box>& out) {
  if (node.axis == CutNode::Axis::kLeaf) {
    out.push_back(node.region);
    return;
  }
  for (const BuildNode& child : node.children) collect_leaves(child, out);
}

// Whether a full line along the given axis separates the boxes.
bool admits_cut(std::vector<Box> boxes, bool horizontal_line, double slack) {
  auto lo = [&](const Box& b) { return horizontal_line ? b.y1 : b.x1; };
  auto hi = [&](const Box& b) { return horizontal_line ? b.y2 : b.x2; };
  std::sort(boxes.begin(), boxes.end(), [&](const Box& a, const Box& b) { return lo(a) < lo(b); });
  double reach = hi(boxes.front());
  for (std::size_t k = 1; k < boxes.size(); ++k) {
    if (lo(boxes[k]) + slack >= reach) return true;
    reach = std::max(reach, hi(boxes[k]));
  }
  return false;
}

// A vertical split must not admit a horizontal line, and a horizontal split
// directly inside a vertical one must not admit a vertical line; otherwise
// cut priority would group the panels differently from the tree.
bool canonical(const BuildNode& node, bool parent_vertical, double slack) {
  std::vector<Box> leaves;
  collect_leaves(node, leaves);
  if (node.axis == CutNode::Axis::kVertical) return !admits_cut(leaves, true, slack);
  if (node.axis == CutNode::Axis::kHorizontal && parent_vertical) return !admits_cut(leaves, false, slack);
  return true;
}

BuildNode build(const Box& region, int depth, bool parent_vertical, const GuillotineParams& p, Rng& rng) {
  BuildNode node;
  node.region = region;
  if (depth >= p.max_depth) return node;
  if (depth > 0 && rng.uniform() < 0.3) return node;

  const bool can_h = region.height() >= 2.0 * p.min_height + p.gap;
  const bool can_v = region.width() >= 2.0 * p.min_width + p.gap;
  if (!can_h && !can_v) return node;
  const bool horizontal = can_h && (!can_v || rng.uniform() < 0.5);

  Box first;
  Box second;
  if (horizontal) {
    node.axis = CutNode::Axis::kHorizontal;
    node.position = rng.uniform(region.y1 + p.min_height, region.y2 - p.min_height - p.gap);
    first = {region.x1, region.y1, region.x2, node.position};
    second = {region.x1, node.position + p.gap, region.x2, region.y2};
  } else {
    node.axis = CutNode::Axis::kVertical;
    node.position = rng.uniform(region.x1 + p.min_width, region.x2 - p.min_width - p.gap);
    first = {region.x1, region.y1, node.position, region.y2};
    second = {node.position + p.gap, region.y1, region.x2, region.y2};
  }
  for (int attempt = 0; attempt < 8; ++attempt) {
    node.children = {build(first, depth + 1, !horizontal, p, rng), build(second, depth + 1, !horizontal, p, rng)};
    if (canonical(node, parent_vertical, p.slack)) return node;
  }
  node.children = {BuildNode{CutNode::Axis::kLeaf, 0.0, first, {}}, BuildNode{CutNode::Axis::kLeaf, 0.0, second, {}}};
  return node;
}

// Converts the build tree, assigning traversal positions to leaves.
CutNode convert(const BuildNode& node, std::vector<Box>& traversal) {
  CutNode out;
  out.axis = node.axis;
  out.position = node.position;
  if (node.axis == CutNode::Axis::kLeaf) {
    out.panel = traversal.size();
    traversal.push_back(node.region);
    return out;
  }
  out.children.resize(2);
  if (node.axis == CutNode::Axis::kHorizontal) {
    out.children[0] = convert(node.children[0], traversal);
    out.children[1] = convert(node.children[1], traversal);
  } else {
    out.children[1] = convert(node.children[1], traversal);
    out.children[0] = convert(node.children[0], traversal);
  }
  return out;
}

void relabel(CutNode& node, const std::vector<std::size_t>& index_of_position) {
  if (node.panel) node.panel = index_of_position[*node.panel];
  for (CutNode& child : node.children) relabel(child, index_of_position);
}

double round_tenth(double v) { return std::round(v * 10.0) / 10.0; }

Box rounded(const Box& b) { return {round_tenth(b.x1), round_tenth(b.y1), round_tenth(b.x2), round_tenth(b.y2)}; }

// Boxes stacked top to bottom inside the horizontal strip [x1, x2] of `panel`.
std::vector<Box> stack_in(const Box& panel, double x1, double x2, std::size_t count) {
  std::vector<Box> out;
  if (count == 0) return out;
  const double top = panel.y1 + 0.05 * panel.height();
  const double slot = 0.9 * panel.height() / static_cast<double>(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double y = top + slot * static_cast<double>(k);
    out.push_back(rounded({x1, y + 0.1 * slot, x2, y + 0.9 * slot}));
  }
  return out;
}

const char* const kWords[] = {"wait", "there", "is", "no", "way", "we", "can", "win", "this", "fight",
                              "look", "out", "behind", "you", "run", "now", "hey", "what", "happened", "here"};

std::string random_line(Rng& rng) {
  const std::size_t n = 2 + rng.below(4);
  std::string line;
  for (std::size_t k = 0; k < n; ++k) {
    std::string word = kWords[rng.below(std::size(kWords))];
    if (k == 0) word[0] = static_cast<char>(word[0] - 'a' + 'A');
    if (k > 0) line += ' ';
    line += word;
  }
  const char* const endings[] = {"!", "?", "...", "."};
  line += endings[rng.below(4)];
  return line;
}

double noisy(double base, double noise, Rng& rng) {
  if (noise <= 0.0) return base;
  return std::clamp(base + rng.uniform(-noise, noise), 0.0, 1.0);
}

}  // namespace

GuillotineLayout generate_guillotine(std::uint64_t seed, int max_depth, double width, double height) {
  if (max_depth < 0) throw std::invalid_argument("generate_guillotine: max_depth must be >= 0");
  if (!(width > 0.0) || !(height > 0.0)) throw std::invalid_argument("generate_guillotine: page must be non-empty");
  Rng rng(seed);
  GuillotineParams p;
  p.min_width = 0.1 * width;
  p.min_height = 0.1 * height;
  p.gap = 0.02 * std::min(width, height);
  p.slack = 3.0 * Tolerance::for_page(width, height).epsilon;
  p.max_depth = max_depth;

  const Box page_area{p.gap, p.gap, width - p.gap, height - p.gap};
  const BuildNode root = build(page_area, 0, false, p, rng);

  GuillotineLayout layout;
  layout.width = width;
  layout.height = height;
  std::vector<Box> traversal;
  layout.cut_tree = convert(root, traversal);

  std::vector<std::size_t> index_of_position(traversal.size());
  std::iota(index_of_position.begin(), index_of_position.end(), 0);
  rng.shuffle(index_of_position);
  layout.panels.resize(traversal.size());
  for (std::size_t k = 0; k < traversal.size(); ++k) layout.panels[index_of_position[k]] = traversal[k];
  layout.truth_order = index_of_position;
  relabel(layout.cut_tree, index_of_position);
  return layout;
}

std::vector<Box> perturb_overlap(const GuillotineLayout& layout, std::uint64_t seed, double magnitude) {
  if (magnitude < 0.0 || magnitude > 0.2) throw std::invalid_argument("perturb_overlap: magnitude outside [0, 0.2]");
  Rng rng(seed);
  std::vector<Box> out;
  out.reserve(layout.panels.size());
  for (const Box& b : layout.panels) {
    const double dx = rng.uniform() * magnitude * b.width();
    const double dy = rng.uniform() * magnitude * b.height();
    out.push_back({std::max(0.0, b.x1 - dx), std::max(0.0, b.y1 - dy), std::min(layout.width, b.x2 + dx),
                   std::min(layout.height, b.y2 + dy)});
  }
  return out;
}

bool has_containment(const std::vector<Box>& panels, const Tolerance& tol) {
  for (std::size_t i = 0; i < panels.size(); ++i) {
    for (std::size_t j = i + 1; j < panels.size(); ++j) {
      if (boxes_overlap(panels[i], panels[j], tol.epsilon) && !erode_pair_until_disjoint(panels[i], panels[j], tol)) {
        return true;
      }
    }
  }
  return false;
}

bool oracle_check_order(const std::vector<std::size_t>& order, const PanelDag& dag) {
  if (order.size() != dag.n) return false;
  std::vector<std::size_t> position(dag.n, dag.n);
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (order[k] >= dag.n || position[order[k]] != dag.n) return false;
    position[order[k]] = k;
  }
  for (const auto& [from, to] : dag.edges) {
    if (from >= dag.n || to >= dag.n || position[from] >= position[to]) return false;
  }
  return true;
}

PanelDag random_dag(std::uint64_t seed, std::size_t n, double density) {
  Rng rng(seed);
  std::vector<std::size_t> hidden(n);
  std::iota(hidden.begin(), hidden.end(), 0);
  rng.shuffle(hidden);
  PanelDag dag;
  dag.n = n;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (rng.uniform() < density) dag.edges.emplace_back(hidden[a], hidden[b]);
    }
  }
  rng.shuffle(dag.edges);
  return dag;
}

SyntheticPage generate_random_page(std::uint64_t seed, const RandomPageOptions& options) {
  Rng rng(seed);
  const double width = 800.0 + 50.0 * static_cast<double>(rng.below(9));
  const double height = std::round(width * 1.5);
  const int depth = static_cast<int>(rng.below(static_cast<std::size_t>(std::max(options.max_depth, 0)) + 1));
  const GuillotineLayout layout = generate_guillotine(rng.next(), depth, width, height);

  SyntheticPage out;
  PageGraph& g = out.graph;
  PageAnnotation& a = out.annotation;
  g.page_id = a.page_id = "synth-" + std::to_string(seed);
  g.width = width;
  g.height = height;
  for (const Box& b : layout.panels) g.panels.push_back(rounded(b));

  // Texts and characters in reading order first; indices are shuffled below.
  std::vector<Box> texts;
  std::vector<Box> characters;
  for (std::size_t panel : layout.truth_order) {
    const Box& p = g.panels[panel];
    const std::size_t nt = rng.below(options.max_texts_per_panel + 1);
    const std::size_t nc = rng.below(options.max_characters_per_panel + 1);
    for (const Box& b : stack_in(p, p.center_x() + 0.04 * p.width(), p.x2 - 0.04 * p.width(), nt)) texts.push_back(b);
    for (const Box& b : stack_in(p, p.x1 + 0.04 * p.width(), p.center_x() - 0.04 * p.width(), nc)) {
      characters.push_back(b);
    }
  }

  std::vector<std::size_t> text_index(texts.size());
  std::iota(text_index.begin(), text_index.end(), 0);
  rng.shuffle(text_index);
  std::vector<std::size_t> char_index(characters.size());
  std::iota(char_index.begin(), char_index.end(), 0);
  rng.shuffle(char_index);

  g.texts.resize(texts.size());
  a.gt_texts.resize(texts.size());
  for (std::size_t k = 0; k < texts.size(); ++k) {
    g.texts[text_index[k]].box = texts[k];
    a.gt_texts[text_index[k]] = texts[k];
  }
  for (std::size_t t = 0; t < texts.size(); ++t) g.texts[t].content = random_line(rng);
  g.characters.resize(characters.size());
  for (std::size_t k = 0; k < characters.size(); ++k) g.characters[char_index[k]] = characters[k];
  a.gt_characters = g.characters;
  a.gt_panels = g.panels;
  a.gt_panel_order = layout.truth_order;
  a.gt_text_order = text_index;

  const std::size_t pool = 1 + rng.below(std::max<std::size_t>(options.identity_pool, 1));
  a.gt_char_identity.resize(characters.size());
  for (auto& id : a.gt_char_identity) id = static_cast<long long>(rng.below(pool));
  if (!characters.empty()) {
    for (std::size_t t = 0; t < texts.size(); ++t) a.gt_speaker_edges.push_back({t, rng.below(characters.size())});
  }

  const std::size_t nc = characters.size();
  g.char_char_scores = ScoreMatrix(nc, nc);
  for (std::size_t i = 0; i < nc; ++i) {
    g.char_char_scores(i, i) = 1.0;
    for (std::size_t j = i + 1; j < nc; ++j) {
      const double s = noisy(a.gt_char_identity[i] == a.gt_char_identity[j] ? 1.0 : 0.0, options.noise, rng);
      g.char_char_scores(i, j) = g.char_char_scores(j, i) = s;
    }
  }
  g.text_char_scores = ScoreMatrix(texts.size(), nc);
  for (std::size_t t = 0; t < texts.size(); ++t) {
    for (std::size_t c = 0; c < nc; ++c) g.text_char_scores(t, c) = noisy(0.0, options.noise, rng);
  }
  for (const SpeakerEdge& e : a.gt_speaker_edges) g.text_char_scores(e.text, e.character) = noisy(1.0, options.noise, rng);

  std::vector<std::vector<double>> embeddings;
  const std::size_t dim = std::max<std::size_t>(options.embedding_dim, 1);
  for (std::size_t c = 0; c < nc; ++c) {
    std::vector<double> e(dim, 0.0);
    e[static_cast<std::size_t>(a.gt_char_identity[c]) % dim] = 1.0;
    if (options.noise > 0.0) {
      for (double& v : e) v += rng.uniform(-options.noise, options.noise);
    }
    embeddings.push_back(std::move(e));
  }
  g.char_embeddings = std::move(embeddings);
  return out;
}

}  // namespace magipipe
