#include "magipipe/transcript.hpp"

#include <set>
#include <stdexcept>

namespace magipipe {

std::map<std::size_t, std::string> name_clusters(const ClusterSet& clusters, const ReadingOrder& order,
                                                 const SpeakerAssignment& speakers) {
  std::map<std::size_t, std::string> names;
  std::size_t next = 1;
  auto name = [&](std::size_t cluster) {
    if (names.emplace(cluster, std::to_string(next)).second) ++next;
  };
  for (std::size_t t : order.text_order) {
    if (t >= speakers.per_text.size() || !speakers.per_text[t]) continue;
    const std::size_t c = speakers.per_text[t]->character;
    if (c < clusters.labels.size()) name(clusters.labels[c]);
  }
  for (std::size_t label : clusters.labels) name(label);
  return names;
}

Transcript generate_transcript(const PageGraph& page, const ReadingOrder& order, const ClusterSet& clusters,
                               const SpeakerAssignment& speakers, const PanelAssignment* assignment) {
  const auto names = name_clusters(clusters, order, speakers);
  Transcript transcript;
  for (std::size_t t : order.text_order) {
    TranscriptLine line;
    line.text_index = t;
    line.speaker_label = std::string(kUnknownSpeaker);
    if (t < speakers.per_text.size() && speakers.per_text[t]) {
      const SpeakerPrediction& p = *speakers.per_text[t];
      if (p.character < clusters.labels.size()) {
        line.speaker_label = names.at(clusters.labels[p.character]);
        line.confidence = p.confidence;
      }
    }
    const auto& content = page.texts.at(t).content;
    line.content = content ? *content : "<text " + std::to_string(t) + ">";
    if (assignment != nullptr && t < assignment->text_to_panel.size()) line.panel = assignment->text_to_panel[t];
    transcript.lines.push_back(std::move(line));
  }
  return transcript;
}

std::string escape_content(std::string_view content) {
  std::string out;
  out.reserve(content.size());
  for (char ch : content) {
    switch (ch) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string unescape_content(std::string_view escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    const char ch = escaped[i];
    if (ch != '\\' || i + 1 == escaped.size()) {
      out += ch;
      continue;
    }
    const char next = escaped[++i];
    switch (next) {
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case '\\': out += '\\'; break;
      default:
        out += '\\';
        out += next;
    }
  }
  return out;
}

std::string render(const Transcript& transcript, const RenderOptions& options) {
  std::string out;
  std::optional<std::size_t> current_panel;
  bool first = true;
  for (const TranscriptLine& line : transcript.lines) {
    if (options.panel_markers && (first || line.panel != current_panel)) {
      out += line.panel ? "# panel " + std::to_string(*line.panel) + "\n" : std::string("# panel none\n");
      current_panel = line.panel;
    }
    first = false;
    out += line.speaker_label;
    out += ": ";
    out += escape_content(line.content);
    out += '\n';
  }
  return out;
}

std::vector<ParsedLine> parse_transcript(std::string_view text) {
  std::vector<ParsedLine> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.rfind("# ", 0) == 0) continue;
    const std::size_t sep = line.find(": ");
    if (sep == std::string_view::npos) throw std::invalid_argument("transcript line without ': ' separator");
    lines.push_back({std::string(line.substr(0, sep)), unescape_content(line.substr(sep + 2))});
  }
  return lines;
}

}  // namespace magipipe
