#include "magipipe/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "magipipe/synth.hpp"

namespace magipipe {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

void require(bool ok, const std::string& key, const std::string& rule) {
  if (!ok) throw std::invalid_argument(key + " " + rule);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << bytes;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create directory " + dir.string());
}

void report_warnings(std::ostream& err, const fs::path& source, const Warnings& warnings) {
  for (const Warning& w : warnings) err << source.string() << ": warning: " << to_string(w.kind) << ": " << w.message << "\n";
}

void report_error(std::ostream& err, const fs::path& source, const std::string& what) {
  err << source.string() << ": error: " << what << "\n";
}

ojson warnings_json(const Warnings& warnings) {
  ojson arr = ojson::array();
  for (const Warning& w : warnings) arr.push_back({{"kind", std::string(to_string(w.kind))}, {"message", w.message}});
  return arr;
}

ojson optional_index_json(const std::optional<std::size_t>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson speakers_json(const SpeakerAssignment& speakers) {
  ojson arr = ojson::array();
  for (std::size_t t = 0; t < speakers.per_text.size(); ++t) {
    const auto& p = speakers.per_text[t];
    arr.push_back({{"text", t},
                   {"character", p ? ojson(p->character) : ojson(nullptr)},
                   {"confidence", p ? ojson(p->confidence) : ojson(nullptr)}});
  }
  return arr;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k > 0) s += ' ';
    s += std::to_string(v[k]);
  }
  return s;
}

// Loads a page graph or reports why it could not be loaded.
std::optional<Loaded<PageGraph>> load_graph_file(const fs::path& path, std::ostream& err) {
  try {
    return load_page_graph(read_file(path));
  } catch (const std::exception& e) {
    report_error(err, path, e.what());
    return std::nullopt;
  }
}

}  // namespace

void RunConfig::validate() const {
  require(tau >= 0.0 && tau <= 1.0, "tau", "must lie in [0, 1]");
  require(confidence_cutoff >= 0.0 && confidence_cutoff <= 1.0, "confidence_cutoff", "must lie in [0, 1]");
  require(epsilon_fraction > 0.0 && epsilon_fraction < 1.0, "epsilon", "must lie in (0, 1)");
  require(erosion_step_fraction > 0.0 && erosion_step_fraction < 1.0, "erosion_step", "must lie in (0, 1)");
  require(max_erosion_iters >= 1, "max_erosion_iters", "must be at least 1");
  require(iou_threshold > 0.0 && iou_threshold < 1.0, "iou", "must lie in (0, 1)");
  require(top_k >= 1, "top_k", "must be at least 1");
}

Tolerance RunConfig::tolerance_for(const PageGraph& page) const {
  return Tolerance::for_page(page.width, page.height, epsilon_fraction, erosion_step_fraction, max_erosion_iters);
}

EvalConfig RunConfig::eval_config() const {
  EvalConfig c;
  c.tau = tau;
  c.iou_threshold = iou_threshold;
  c.top_k = top_k;
  c.speaker_method = speaker_method;
  c.sweep_tau = sweep_tau;
  return c;
}

RunConfig apply_config_json(RunConfig base, const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("config: top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "tau") {
        base.tau = value.get<double>();
      } else if (key == "confidence_cutoff") {
        base.confidence_cutoff = value.get<double>();
      } else if (key == "epsilon") {
        base.epsilon_fraction = value.get<double>();
      } else if (key == "erosion_step") {
        base.erosion_step_fraction = value.get<double>();
      } else if (key == "max_erosion_iters") {
        base.max_erosion_iters = value.get<int>();
      } else if (key == "iou") {
        base.iou_threshold = value.get<double>();
      } else if (key == "top_k") {
        base.top_k = value.get<std::size_t>();
      } else if (key == "sweep_tau") {
        base.sweep_tau = value.get<bool>();
      } else if (key == "panel_markers") {
        base.panel_markers = value.get<bool>();
      } else if (key == "seed") {
        base.seed = value.get<std::uint64_t>();
      } else if (key == "baseline") {
        const auto name = value.get<std::string>();
        if (name == "nearest") {
          base.speaker_method = SpeakerMethod::kNearestCharacter;
        } else if (name == "model") {
          base.speaker_method = SpeakerMethod::kModel;
        } else {
          throw std::invalid_argument("config: baseline must be \"model\" or \"nearest\"");
        }
      } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
      }
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument("config: wrong type for '" + key + "'");
    }
  }
  return base;
}

std::string config_json(const RunConfig& c) {
  ojson doc;
  doc["tau"] = c.tau;
  doc["confidence_cutoff"] = c.confidence_cutoff;
  doc["epsilon"] = c.epsilon_fraction;
  doc["erosion_step"] = c.erosion_step_fraction;
  doc["max_erosion_iters"] = c.max_erosion_iters;
  doc["iou"] = c.iou_threshold;
  doc["top_k"] = c.top_k;
  doc["sweep_tau"] = c.sweep_tau;
  doc["panel_markers"] = c.panel_markers;
  doc["seed"] = c.seed;
  doc["baseline"] = c.speaker_method == SpeakerMethod::kModel ? "model" : "nearest";
  return doc.dump();
}

PageRun run_page(const PageGraph& page, const RunConfig& config) {
  PageRun run;
  const Tolerance tol = config.tolerance_for(page);
  run.assignment = assign_boxes_to_panels(page, tol);
  ReadingOrderResult ordered = reading_order(page, run.assignment, tol);
  run.order = std::move(ordered.order);
  append(run.warnings, ordered.warnings);

  run.clusters = cluster_characters(page, config.tau);
  if (config.speaker_method == SpeakerMethod::kModel) {
    SpeakerResult speakers = assign_speakers(page);
    run.raw_speakers = std::move(speakers.assignment);
    append(run.warnings, speakers.warnings);
  } else {
    run.raw_speakers = nearest_character_baseline(page);
  }
  run.speakers = filter_low_confidence(run.raw_speakers, config.confidence_cutoff);
  run.transcript = generate_transcript(page, run.order, run.clusters, run.speakers, &run.assignment);
  return run;
}

std::string sidecar_json(const PageGraph& page, const PageRun& run, const RunConfig& config) {
  ojson doc;
  doc["page_id"] = page.page_id;
  doc["config"] = ojson::parse(config_json(config));
  doc["panel_order"] = run.order.panel_order;
  doc["text_order"] = run.order.text_order;
  ojson text_panels = ojson::array();
  for (const auto& p : run.assignment.text_to_panel) text_panels.push_back(optional_index_json(p));
  ojson char_panels = ojson::array();
  for (const auto& p : run.assignment.char_to_panel) char_panels.push_back(optional_index_json(p));
  doc["text_panels"] = std::move(text_panels);
  doc["character_panels"] = std::move(char_panels);
  doc["character_clusters"] = run.clusters.labels;
  ojson names = ojson::object();
  for (const auto& [cluster, name] : name_clusters(run.clusters, run.order, run.speakers)) {
    names[std::to_string(cluster)] = name;
  }
  doc["cluster_names"] = std::move(names);
  doc["speakers"] = speakers_json(run.raw_speakers);
  doc["filtered_speakers"] = speakers_json(run.speakers);
  doc["warnings"] = warnings_json(run.warnings);
  return doc.dump(1) + "\n";
}

std::vector<fs::path> expand_inputs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const fs::path& p : inputs) {
    std::error_code ec;
    if (!fs::is_directory(p, ec)) {
      out.push_back(p);
      continue;
    }
    std::vector<fs::path> found;
    for (const auto& entry : fs::directory_iterator(p, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") found.push_back(entry.path());
    }
    std::sort(found.begin(), found.end());
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

int cmd_transcribe(const std::vector<fs::path>& inputs, const RunConfig& config, const fs::path& out_dir,
                   CommandIo io) {
  try {
    ensure_dir(out_dir);
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitPartialFailure;
  }
  bool failed = false;
  for (const fs::path& path : expand_inputs(inputs)) {
    auto loaded = load_graph_file(path, io.err);
    if (!loaded) {
      failed = true;
      continue;
    }
    const PageGraph& page = loaded->value;
    PageRun run = run_page(page, config);
    Warnings all = loaded->warnings;
    append(all, run.warnings);
    run.warnings = all;
    report_warnings(io.err, path, run.warnings);
    try {
      write_file(out_dir / (page.page_id + ".transcript.txt"),
                 render(run.transcript, RenderOptions{config.panel_markers}));
      write_file(out_dir / (page.page_id + ".sidecar.json"), sidecar_json(page, run, config));
    } catch (const std::exception& e) {
      report_error(io.err, path, e.what());
      failed = true;
    }
  }
  return failed ? kExitPartialFailure : kExitOk;
}

int cmd_order(const std::vector<fs::path>& inputs, const RunConfig& config, CommandIo io) {
  bool failed = false;
  for (const fs::path& path : expand_inputs(inputs)) {
    auto loaded = load_graph_file(path, io.err);
    if (!loaded) {
      failed = true;
      continue;
    }
    const PageGraph& page = loaded->value;
    Warnings warnings = loaded->warnings;
    const Tolerance tol = config.tolerance_for(page);
    const PanelAssignment assignment = assign_boxes_to_panels(page, tol);
    ReadingOrder order;
    if (io.dag_override) {
      TopologicalResult topo = topological_order(io.dag_override(page), page.panels);
      append(warnings, topo.warnings);
      std::vector<std::size_t> texts;
      ReadingOrderResult full = reading_order(page, assignment, tol);
      // Keep the geometric text order inside panels, regrouped by the new panel order.
      for (std::size_t p : topo.order) {
        for (std::size_t t : full.order.text_order) {
          if (assignment.text_to_panel[t] == p) texts.push_back(t);
        }
      }
      for (std::size_t t : full.order.text_order) {
        if (!assignment.text_to_panel[t]) texts.push_back(t);
      }
      order = {topo.order, texts};
    } else {
      ReadingOrderResult result = reading_order(page, assignment, tol);
      append(warnings, result.warnings);
      order = result.order;
    }
    report_warnings(io.err, path, warnings);
    io.out << "page: " << page.page_id << "\n";
    io.out << "panels: " << join(order.panel_order) << "\n";
    io.out << "texts: " << join(order.text_order) << "\n";
  }
  return failed ? kExitPartialFailure : kExitOk;
}

int cmd_evaluate(const std::vector<fs::path>& predictions, const std::vector<fs::path>& annotations,
                 const RunConfig& config, const fs::path& out_dir, CommandIo io) {
  bool failed = false;
  std::map<std::string, std::pair<fs::path, PageGraph>> graphs;
  for (const fs::path& path : expand_inputs(predictions)) {
    auto loaded = load_graph_file(path, io.err);
    if (!loaded) {
      failed = true;
      continue;
    }
    report_warnings(io.err, path, loaded->warnings);
    const std::string id = loaded->value.page_id;
    if (!graphs.emplace(id, std::make_pair(path, std::move(loaded->value))).second) {
      report_error(io.err, path, "duplicate page id '" + id + "'");
      failed = true;
    }
  }
  std::map<std::string, std::pair<fs::path, PageAnnotation>> truths;
  for (const fs::path& path : expand_inputs(annotations)) {
    try {
      Loaded<PageAnnotation> loaded = load_page_annotation(read_file(path));
      report_warnings(io.err, path, loaded.warnings);
      const std::string id = loaded.value.page_id;
      if (!truths.emplace(id, std::make_pair(path, std::move(loaded.value))).second) {
        report_error(io.err, path, "duplicate page id '" + id + "'");
        failed = true;
      }
    } catch (const std::exception& e) {
      report_error(io.err, path, e.what());
      failed = true;
    }
  }

  std::vector<EvalPage> pages;
  for (auto& [id, entry] : graphs) {
    auto it = truths.find(id);
    if (it == truths.end()) {
      report_error(io.err, entry.first, "no annotation for page id '" + id + "'");
      failed = true;
      continue;
    }
    pages.push_back({entry.second, it->second.second});
  }
  for (const auto& [id, entry] : truths) {
    if (!graphs.count(id)) {
      report_error(io.err, entry.first, "no prediction for page id '" + id + "'");
      failed = true;
    }
  }
  if (pages.empty()) {
    io.err << "error: no pages\n";
    return kExitPartialFailure;
  }

  EvalReport report;
  try {
    report = evaluate_dataset(pages, config.eval_config());
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitPartialFailure;
  }
  io.out << eval_report_table(report);
  try {
    ensure_dir(out_dir);
    ojson doc = ojson::parse(eval_report_json(report));
    doc["config"] = ojson::parse(config_json(config));
    write_file(out_dir / "eval_report.json", doc.dump(2) + "\n");
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    failed = true;
  }
  return failed ? kExitPartialFailure : kExitOk;
}

int cmd_mine(const std::vector<fs::path>& inputs, const RunConfig& config, const fs::path& out_dir, CommandIo io) {
  try {
    ensure_dir(out_dir);
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitPartialFailure;
  }
  bool failed = false;
  for (const fs::path& path : expand_inputs(inputs)) {
    auto loaded = load_graph_file(path, io.err);
    if (!loaded) {
      failed = true;
      continue;
    }
    const PageGraph& page = loaded->value;
    Warnings warnings = loaded->warnings;
    ojson doc;
    doc["page_id"] = page.page_id;
    if (!page.char_embeddings) {
      warnings.push_back({WarningKind::kMissingEmbeddings, "page '" + page.page_id + "' has no char_embeddings; skipped"});
      report_warnings(io.err, path, warnings);
      continue;
    }
    const MiningResult mined = mine_character_pairs(page, assign_boxes_to_panels(page, config.tolerance_for(page)));
    append(warnings, mined.warnings);
    doc["character_positives"] = mined.pairs.positives;
    doc["character_negatives"] = mined.pairs.negatives;
    doc["text_character_pairs"] = mine_text_pairs(page);
    doc["warnings"] = warnings_json(warnings);
    report_warnings(io.err, path, warnings);
    try {
      write_file(out_dir / (page.page_id + ".mined.json"), doc.dump(1) + "\n");
    } catch (const std::exception& e) {
      report_error(io.err, path, e.what());
      failed = true;
    }
  }
  return failed ? kExitPartialFailure : kExitOk;
}

int cmd_synth(const SynthRequest& request, const RunConfig& config, const fs::path& out_dir, CommandIo io) {
  try {
    ensure_dir(out_dir / "pages");
    ensure_dir(out_dir / "annotations");
    RandomPageOptions options;
    options.noise = request.noise;
    ojson manifest;
    manifest["generator_version"] = std::string(kGeneratorVersion);
    manifest["seed"] = config.seed;
    manifest["count"] = request.count;
    manifest["noise"] = request.noise;
    manifest["config"] = ojson::parse(config_json(config));
    ojson entries = ojson::array();
    for (std::size_t k = 0; k < request.count; ++k) {
      const std::uint64_t seed = config.seed + k;
      const SyntheticPage page = generate_random_page(seed, options);
      const std::string id = page.graph.page_id;
      write_file(out_dir / "pages" / (id + ".json"), serialize_page_graph(page.graph));
      write_file(out_dir / "annotations" / (id + ".json"), serialize_page_annotation(page.annotation));
      entries.push_back({{"page_id", id},
                         {"seed", seed},
                         {"page", "pages/" + id + ".json"},
                         {"annotation", "annotations/" + id + ".json"}});
    }
    manifest["pages"] = std::move(entries);
    write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitPartialFailure;
  }
  return kExitOk;
}

}  // namespace magipipe
