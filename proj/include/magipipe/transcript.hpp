#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "magipipe/association.hpp"
#include "magipipe/page_model.hpp"
#include "magipipe/panel_order.hpp"

namespace magipipe {

/// Label used when no speaker survives confidence filtering (U+27E8 ? U+27E9).
inline constexpr std::string_view kUnknownSpeaker = "⟨?⟩";

struct TranscriptLine {
  std::string speaker_label;
  std::string content;
  std::size_t text_index = 0;
  std::optional<double> confidence;
  /// Panel the text was attributed to; only used for panel markers.
  std::optional<std::size_t> panel;

  friend bool operator==(const TranscriptLine&, const TranscriptLine&) = default;
};

struct Transcript {
  std::vector<TranscriptLine> lines;

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

/// Display names "1", "2", ... for cluster ids: first by first appearance
/// as a speaker in text order, then the silent clusters in character-index
/// order.
std::map<std::size_t, std::string> name_clusters(const ClusterSet& clusters, const ReadingOrder& order,
                                                 const SpeakerAssignment& speakers);

/// `speakers` is expected to be confidence-filtered already.
Transcript generate_transcript(const PageGraph& page, const ReadingOrder& order, const ClusterSet& clusters,
                               const SpeakerAssignment& speakers,
                               const PanelAssignment* assignment = nullptr);

struct RenderOptions {
  /// Emit "# panel <index>" before the first line of each panel.
  bool panel_markers = false;
};

/// One "<label>: <content>\n" line per entry. Backslash, LF and CR inside
/// content are written as \\, \n and \r.
std::string render(const Transcript& transcript, const RenderOptions& options = {});

struct ParsedLine {
  std::string speaker_label;
  std::string content;

  friend bool operator==(const ParsedLine&, const ParsedLine&) = default;
};

/// Inverse of render; skips panel-marker comment lines. Throws
/// std::invalid_argument on a line without the ": " separator.
std::vector<ParsedLine> parse_transcript(std::string_view text);

std::string escape_content(std::string_view content);
std::string unescape_content(std::string_view escaped);

}  // namespace magipipe
