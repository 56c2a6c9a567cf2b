#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace magipipe {

enum class WarningKind {
  kClampedBox,
  kAsymmetricScores,
  kCycle,
  kContainment,
  kDegenerateSpeakerRow,
  kMiningConflict,
  kMissingEmbeddings,
};

std::string_view to_string(WarningKind kind);

struct Warning {
  WarningKind kind;
  std::string message;

  friend bool operator==(const Warning&, const Warning&) = default;
};

using Warnings = std::vector<Warning>;

inline void append(Warnings& into, const Warnings& from) {
  into.insert(into.end(), from.begin(), from.end());
}

}  // namespace magipipe
