#include "loopcompat/negatives/manipulate.hpp"

#include <algorithm>

#include "loopcompat/error.hpp"

namespace loopcompat::negatives {
namespace {

void require_canonical(const audio::AudioClip& clip) {
  require(audio::is_canonical_loop(clip), ErrorKind::InvalidInput,
          "beat manipulation needs a canonical 2-s loop at 44.1 kHz");
}

}  // namespace

const std::vector<BeatOrder>& non_identity_orders() {
  static const std::vector<BeatOrder> orders = [] {
    std::vector<BeatOrder> out;
    BeatOrder order{0, 1, 2, 3};
    do {
      if (order != BeatOrder{0, 1, 2, 3}) out.push_back(order);
    } while (std::next_permutation(order.begin(), order.end()));
    return out;
  }();
  return orders;
}

audio::AudioClip reverse_loop(const audio::AudioClip& target) {
  require(!target.empty(), ErrorKind::InvalidInput, "cannot reverse an empty clip");
  audio::AudioClip out = target;
  std::reverse(out.samples.begin(), out.samples.end());
  return out;
}

audio::AudioClip shift_loop(const audio::AudioClip& target, int beats) {
  require_canonical(target);
  require(beats >= 0, ErrorKind::InvalidInput, "shift must be non-negative");
  const std::size_t offset = (static_cast<std::size_t>(beats) * kBeatSamples) % target.size();
  audio::AudioClip out = target;
  std::rotate(out.samples.rbegin(), out.samples.rbegin() + static_cast<std::ptrdiff_t>(offset), out.samples.rend());
  return out;
}

ShiftResult shift_loop(const audio::AudioClip& target, Rng& rng) {
  const int beats = 1 + static_cast<int>(rng.index(3));
  return {shift_loop(target, beats), beats};
}

audio::AudioClip rearrange_loop(const audio::AudioClip& target, const BeatOrder& order) {
  require_canonical(target);
  audio::AudioClip out = target;
  for (std::size_t i = 0; i < kBeatsPerLoop; ++i) {
    const auto src = target.samples.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(order[i]) * kBeatSamples);
    std::copy_n(src, kBeatSamples, out.samples.begin() + static_cast<std::ptrdiff_t>(i * kBeatSamples));
  }
  return out;
}

RearrangeResult rearrange_loop(const audio::AudioClip& target, Rng& rng) {
  require_canonical(target);
  const auto& orders = non_identity_orders();
  const BeatOrder order = orders[rng.index(orders.size())];
  return {rearrange_loop(target, order), order};
}

std::string order_tag(const BeatOrder& order) {
  std::string tag;
  for (int i : order) tag.push_back(static_cast<char>('0' + i));
  return tag;
}

}  // namespace loopcompat::negatives
