#pragma once

#include <filesystem>

#include "loopcompat/audio/clip.hpp"

namespace loopcompat::audio {

enum class WavEncoding { Pcm16, Float32 };

/// Reads 16/24/32-bit PCM or 32/64-bit float WAV (including
/// WAVE_FORMAT_EXTENSIBLE). Multi-channel input is downmixed by averaging.
/// Malformed files raise IngestError naming the path.
AudioClip read_wav(const std::filesystem::path& path);

/// Mono writer. Pcm16 clips values to [-1, 1].
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::Float32);

}  // namespace loopcompat::audio
