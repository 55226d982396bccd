#pragma once

#include <map>
#include <memory>
#include <string>

#include "loopcompat/audio/clip.hpp"

namespace loopcompat::negatives {

inline constexpr double kPercussiveFraction = 0.8;
inline constexpr double kBassFraction = 0.9;
inline constexpr double kBassCutoffHz = 250.0;

struct SpectralBalance {
  double percussive_fraction = 0.0;  // share of energy assigned to the percussive layer
  double bass_fraction = 0.0;        // share of energy below 250 Hz
};

/// Median-filter harmonic/percussive split with soft (Wiener) masks.
/// Throws Undeterminable for silent clips.
SpectralBalance analyse_drum_bass(const audio::AudioClip& clip);

/// Decides whether a loop is a pure drum or pure bass loop.
class DrumBassDetector {
 public:
  virtual ~DrumBassDetector() = default;
  virtual bool is_pure_drum_or_bass(const std::string& loop_id, const audio::AudioClip& clip) const = 0;
};

/// Default heuristic: percussive share > 0.8 or bass share >= 0.9.
class HeuristicDetector final : public DrumBassDetector {
 public:
  bool is_pure_drum_or_bass(const std::string& loop_id, const audio::AudioClip& clip) const override;
};

/// Externally computed stem labels; loops without a label fall back to the
/// wrapped detector (or the heuristic when none is given).
class LabelledDetector final : public DrumBassDetector {
 public:
  explicit LabelledDetector(std::map<std::string, bool> labels,
                            std::shared_ptr<const DrumBassDetector> fallback = nullptr);
  bool is_pure_drum_or_bass(const std::string& loop_id, const audio::AudioClip& clip) const override;

 private:
  std::map<std::string, bool> labels_;
  std::shared_ptr<const DrumBassDetector> fallback_;
};

/// Convenience wrapper around the heuristic.
bool is_pure_drum_or_bass(const audio::AudioClip& clip);

}  // namespace loopcompat::negatives
