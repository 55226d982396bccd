#include "loopcompat/dedup/loop_pair.hpp"

#include <array>

#include "loopcompat/error.hpp"

namespace loopcompat::dedup {
namespace {

constexpr std::array<std::pair<Strategy, std::string_view>, 6> kStrategies{{
    {Strategy::Original, "original"},
    {Strategy::Random, "random"},
    {Strategy::Selected, "selected"},
    {Strategy::Reverse, "reverse"},
    {Strategy::Shift, "shift"},
    {Strategy::Rearrange, "rearrange"},
}};

}  // namespace

std::string_view to_string(PairLabel label) { return label == PairLabel::Positive ? "positive" : "negative"; }

std::string_view to_string(Strategy strategy) {
  for (auto [s, name] : kStrategies) {
    if (s == strategy) return name;
  }
  return "unknown";
}

PairLabel parse_label(std::string_view text) {
  if (text == "positive") return PairLabel::Positive;
  if (text == "negative") return PairLabel::Negative;
  fail(ErrorKind::InvalidInput, "unknown pair label '" + std::string(text) + "'");
}

Strategy parse_strategy(std::string_view text) {
  for (auto [s, name] : kStrategies) {
    if (name == text) return s;
  }
  fail(ErrorKind::InvalidInput, "unknown strategy '" + std::string(text) + "'");
}

void to_json(nlohmann::json& j, const LoopPair& p) {
  j = nlohmann::json{{"pair_id", p.pair_id},
                     {"loop_a", p.loop_a},
                     {"loop_b", p.loop_b},
                     {"label", to_string(p.label)},
                     {"strategy", to_string(p.strategy)},
                     {"song_id", p.song_id}};
  if (p.bar_count) j["bar_count"] = *p.bar_count;
}

void from_json(const nlohmann::json& j, LoopPair& p) {
  p.pair_id = j.at("pair_id").get<std::string>();
  p.loop_a = j.at("loop_a").get<std::string>();
  p.loop_b = j.at("loop_b").get<std::string>();
  p.label = parse_label(j.at("label").get<std::string>());
  p.strategy = parse_strategy(j.at("strategy").get<std::string>());
  p.song_id = j.value("song_id", std::string{});
  if (j.contains("bar_count")) p.bar_count = j.at("bar_count").get<int>();
  else p.bar_count.reset();
}

}  // namespace loopcompat::dedup
