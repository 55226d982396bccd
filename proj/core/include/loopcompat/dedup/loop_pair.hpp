#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace loopcompat::dedup {

enum class PairLabel { Positive, Negative };

enum class Strategy { Original, Random, Selected, Reverse, Shift, Rearrange };

std::string_view to_string(PairLabel label);
std::string_view to_string(Strategy strategy);
PairLabel parse_label(std::string_view text);
Strategy parse_strategy(std::string_view text);

/// Strategies that manipulate the target loop of a positive pair.
constexpr bool is_within_song(Strategy s) {
  return s == Strategy::Reverse || s == Strategy::Shift || s == Strategy::Rearrange;
}

struct LoopPair {
  std::string pair_id;
  std::string loop_a;
  std::string loop_b;
  PairLabel label = PairLabel::Positive;
  Strategy strategy = Strategy::Original;
  std::string song_id;
  /// Number of bars in which both loops were active (positives only).
  std::optional<int> bar_count;

  friend bool operator==(const LoopPair&, const LoopPair&) = default;
};

void to_json(nlohmann::json& j, const LoopPair& p);
void from_json(const nlohmann::json& j, LoopPair& p);

}  // namespace loopcompat::dedup
