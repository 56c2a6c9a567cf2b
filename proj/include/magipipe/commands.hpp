#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "magipipe/association.hpp"
#include "magipipe/metrics.hpp"
#include "magipipe/page_model.hpp"
#include "magipipe/panel_order.hpp"
#include "magipipe/transcript.hpp"

namespace magipipe {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartialFailure = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
  double tau = kDefaultCharacterMatchThreshold;
  double confidence_cutoff = kDefaultConfidenceCutoff;
  double epsilon_fraction = Tolerance::kDefaultEpsilonFraction;
  double erosion_step_fraction = Tolerance::kDefaultErosionStepFraction;
  int max_erosion_iters = Tolerance::kDefaultMaxErosionIters;
  double iou_threshold = kDefaultIouThreshold;
  std::size_t top_k = kDefaultTopK;
  bool sweep_tau = false;
  bool panel_markers = false;
  std::uint64_t seed = 0;
  SpeakerMethod speaker_method = SpeakerMethod::kModel;

  /// Throws std::invalid_argument naming the offending key.
  void validate() const;
  Tolerance tolerance_for(const PageGraph& page) const;
  EvalConfig eval_config() const;
};

/// Overrides the fields present in a JSON config document (keys match the
/// long flag names with dashes replaced by underscores). Unknown keys are
/// rejected. Throws std::invalid_argument.
RunConfig apply_config_json(RunConfig base, const std::string& json_text);
std::string config_json(const RunConfig& config);

/// Everything the transcribe pipeline derives for one page.
struct PageRun {
  PanelAssignment assignment;
  ReadingOrder order;
  ClusterSet clusters;
  SpeakerAssignment raw_speakers;
  SpeakerAssignment speakers;
  Transcript transcript;
  Warnings warnings;
};

PageRun run_page(const PageGraph& page, const RunConfig& config);
std::string sidecar_json(const PageGraph& page, const PageRun& run, const RunConfig& config);

struct CommandIo {
  std::ostream& out;
  std::ostream& err;
  /// Test hook: replaces the geometric panel graph in `order`.
  std::function<PanelDag(const PageGraph&)> dag_override;
};

/// Expands directories into their *.json files (sorted); files pass through.
std::vector<std::filesystem::path> expand_inputs(const std::vector<std::filesystem::path>& inputs);

int cmd_transcribe(const std::vector<std::filesystem::path>& inputs, const RunConfig& config,
                   const std::filesystem::path& out_dir, CommandIo io);
int cmd_order(const std::vector<std::filesystem::path>& inputs, const RunConfig& config, CommandIo io);
/// Pairs predictions with annotations by page_id, prints the table and
/// writes eval_report.json into out_dir.
int cmd_evaluate(const std::vector<std::filesystem::path>& predictions,
                 const std::vector<std::filesystem::path>& annotations, const RunConfig& config,
                 const std::filesystem::path& out_dir, CommandIo io);
int cmd_mine(const std::vector<std::filesystem::path>& inputs, const RunConfig& config,
             const std::filesystem::path& out_dir, CommandIo io);

struct SynthRequest {
  std::size_t count = 1;
  double noise = 0.0;
};

/// Writes pages/, annotations/ and manifest.json under out_dir. Page k uses
/// seed config.seed + k.
int cmd_synth(const SynthRequest& request, const RunConfig& config, const std::filesystem::path& out_dir,
              CommandIo io);

}  // namespace magipipe
