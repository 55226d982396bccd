#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "loopcompat/audio/clip.hpp"
#include "loopcompat/random.hpp"

namespace loopcompat::negatives {

inline constexpr int kBeatsPerLoop = 4;
inline constexpr std::size_t kBeatSamples = audio::kLoopSamples / kBeatsPerLoop;  // 22050

using BeatOrder = std::array<int, kBeatsPerLoop>;

/// The 23 non-identity orderings of four beats, in lexicographic order.
const std::vector<BeatOrder>& non_identity_orders();

/// Plays the loop backward.
audio::AudioClip reverse_loop(const audio::AudioClip& target);

/// Circular shift by `beats` beats (sample i moves to i + beats * 22050).
/// The clip must be a canonical 2-s loop.
audio::AudioClip shift_loop(const audio::AudioClip& target, int beats);

struct ShiftResult {
  audio::AudioClip clip;
  int beats = 0;  // 1..3
};
ShiftResult shift_loop(const audio::AudioClip& target, Rng& rng);

struct RearrangeResult {
  audio::AudioClip clip;
  BeatOrder order{};  // output beat i is input beat order[i]
};

/// Reassembles the loop's four beats in `order`.
audio::AudioClip rearrange_loop(const audio::AudioClip& target, const BeatOrder& order);

/// Uniformly chosen non-identity reordering.
RearrangeResult rearrange_loop(const audio::AudioClip& target, Rng& rng);

std::string order_tag(const BeatOrder& order);

}  // namespace loopcompat::negatives
