// magi-pipe: batch reading order, diarisation, evaluation and synthesis.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "magipipe/commands.hpp"

namespace fs = std::filesystem;
using namespace magipipe;

namespace {

struct Flags {
  std::optional<double> tau;
  std::optional<double> confidence_cutoff;
  std::optional<double> epsilon;
  std::optional<double> erosion_step;
  std::optional<int> max_erosion_iters;
  std::optional<double> iou;
  std::optional<std::size_t> top_k;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> baseline;
  std::string config_path;
  bool sweep_tau = false;
  bool panel_markers = false;
  std::string out = ".";
};

void add_shared(CLI::App* cmd, Flags& f) {
  cmd->add_option("--tau", f.tau, "character match threshold (default 0.65)");
  cmd->add_option("--confidence-cutoff", f.confidence_cutoff, "drop speaker predictions below this (default 0.4)");
  cmd->add_option("--epsilon", f.epsilon, "predicate slack as a fraction of the page diagonal");
  cmd->add_option("--erosion-step", f.erosion_step, "erosion step as a fraction of the shorter page side");
  cmd->add_option("--max-erosion-iters", f.max_erosion_iters, "erosion iteration cap");
  cmd->add_option("--iou", f.iou, "IoU threshold for detection AP (default 0.5)");
  cmd->add_option("--top-k", f.top_k, "predictions kept per page for AP (default 100)");
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--baseline", f.baseline, "speaker method: model or nearest")->check(CLI::IsMember({"model", "nearest"}));
  cmd->add_option("--config", f.config_path, "JSON config file (overrides $MAGI_PIPE_CONFIG)");
  cmd->add_flag("--sweep-tau", f.sweep_tau, "sweep the clustering threshold and report the best");
  cmd->add_flag("--panel-markers", f.panel_markers, "emit '# panel k' lines in transcripts");
  cmd->add_option("--out", f.out, "output directory");
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig effective_config(const Flags& f) {
  RunConfig config;
  std::string path = f.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("MAGI_PIPE_CONFIG"); env != nullptr) path = env;
  }
  if (!path.empty()) config = apply_config_json(config, slurp(path));
  if (f.tau) config.tau = *f.tau;
  if (f.confidence_cutoff) config.confidence_cutoff = *f.confidence_cutoff;
  if (f.epsilon) config.epsilon_fraction = *f.epsilon;
  if (f.erosion_step) config.erosion_step_fraction = *f.erosion_step;
  if (f.max_erosion_iters) config.max_erosion_iters = *f.max_erosion_iters;
  if (f.iou) config.iou_threshold = *f.iou;
  if (f.top_k) config.top_k = *f.top_k;
  if (f.seed) config.seed = *f.seed;
  if (f.baseline) config.speaker_method = *f.baseline == "nearest" ? SpeakerMethod::kNearestCharacter : SpeakerMethod::kModel;
  if (f.sweep_tau) config.sweep_tau = true;
  if (f.panel_markers) config.panel_markers = true;
  config.validate();
  return config;
}

std::vector<fs::path> to_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Manga page reading order, speaker diarisation and evaluation"};
  app.require_subcommand(1);
  Flags flags;
  std::vector<std::string> inputs;
  std::vector<std::string> predictions;
  std::vector<std::string> annotations;
  SynthRequest synth;

  CLI::App* transcribe = app.add_subcommand("transcribe", "write a transcript and sidecar per page graph");
  transcribe->add_option("inputs", inputs, "page-graph files or directories")->required();
  add_shared(transcribe, flags);

  CLI::App* order = app.add_subcommand("order", "print panel and text reading orders");
  order->add_option("inputs", inputs, "page-graph files or directories")->required();
  add_shared(order, flags);

  CLI::App* evaluate = app.add_subcommand("evaluate", "score predictions against annotations");
  evaluate->add_option("--pred", predictions, "prediction page graphs (files or directories)")->required();
  evaluate->add_option("--gt", annotations, "annotation files (files or directories)")->required();
  add_shared(evaluate, flags);

  CLI::App* mine = app.add_subcommand("mine", "mine character and text-character pseudo-pairs");
  mine->add_option("inputs", inputs, "page-graph files or directories")->required();
  add_shared(mine, flags);

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("--count", synth.count, "number of pages")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--noise", synth.noise, "score noise amplitude")->check(CLI::Range(0.0, 1.0));
  add_shared(synth_cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  RunConfig config;
  try {
    config = effective_config(flags);
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  CommandIo io{std::cout, std::cerr, {}};
  const fs::path out_dir = flags.out;
  if (*transcribe) return cmd_transcribe(to_paths(inputs), config, out_dir, io);
  if (*order) return cmd_order(to_paths(inputs), config, io);
  if (*evaluate) return cmd_evaluate(to_paths(predictions), to_paths(annotations), config, out_dir, io);
  if (*mine) return cmd_mine(to_paths(inputs), config, out_dir, io);
  return cmd_synth(synth, config, out_dir, io);
}
