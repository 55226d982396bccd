#include "loopcompat/extract/ntf.hpp"

#include <algorithm>
#include <cmath>

#include "loopcompat/audio/spectral.hpp"
#include "loopcompat/error.hpp"
#include "loopcompat/random.hpp"

namespace loopcompat::extract {
namespace {

constexpr double kTiny = 1e-300;

// Effective per-bar component gains: gains[b, r] = sum_l layout[l, b] * recipes[l, r].
Matrix bar_gains(const NtfModel& m) {
  const std::size_t bars = m.bars(), rank = m.rank;
  Matrix g(bars, rank);
  for (std::size_t l = 0; l < rank; ++l) {
    for (std::size_t b = 0; b < bars; ++b) {
      const double a = m.layout(l, b);
      if (a == 0.0) continue;
      for (std::size_t r = 0; r < rank; ++r) g(b, r) += a * m.recipes(l, r);
    }
  }
  return g;
}

void reconstruct_into(const NtfModel& m, const Matrix& gains, SongTensor& out) {
  const std::size_t frames = m.frames(), bins = m.bins();
  std::fill(out.values.begin(), out.values.end(), 0.0);
  for (std::size_t b = 0; b < out.bars; ++b) {
    for (std::size_t r = 0; r < m.rank; ++r) {
      const double g = gains(b, r);
      if (g == 0.0) continue;
      const auto sound = m.sound.row(r);
      for (std::size_t t = 0; t < frames; ++t) {
        const double gh = g * m.rhythm(r, t);
        if (gh == 0.0) continue;
        double* dst = &out.at(b, t, 0);
        for (std::size_t f = 0; f < bins; ++f) dst[f] += gh * sound[f];
      }
    }
  }
}

// ratio = X / Xhat with 0/0 = 0.
void ratio_into(const SongTensor& x, const SongTensor& approx, SongTensor& ratio) {
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    const double v = x.values[i];
    ratio.values[i] = v > 0.0 ? v / std::max(approx.values[i], kTiny) : 0.0;
  }
}

double row_sum(const Matrix& m, std::size_t r) {
  double s = 0.0;
  for (double v : m.row(r)) s += v;
  return s;
}

// projections[b, r] = sum_{t,f} ratio[b,t,f] * rhythm[r,t] * sound[r,f]
Matrix component_projections(const NtfModel& m, const SongTensor& ratio) {
  const std::size_t frames = m.frames(), bins = m.bins();
  Matrix p(ratio.bars, m.rank);
  for (std::size_t b = 0; b < ratio.bars; ++b) {
    for (std::size_t r = 0; r < m.rank; ++r) {
      const auto sound = m.sound.row(r);
      double acc = 0.0;
      for (std::size_t t = 0; t < frames; ++t) {
        const double h = m.rhythm(r, t);
        if (h == 0.0) continue;
        const double* q = &ratio.at(b, t, 0);
        double inner = 0.0;
        for (std::size_t f = 0; f < bins; ++f) inner += q[f] * sound[f];
        acc += h * inner;
      }
      p(b, r) = acc;
    }
  }
  return p;
}

void validate_tensor(const SongTensor& x) {
  require(x.values.size() == x.bars * x.frames * x.bins, ErrorKind::InvalidInput, "tensor size mismatch");
  for (double v : x.values) {
    require(std::isfinite(v), ErrorKind::InvalidInput, "tensor contains NaN or infinity");
    require(v >= 0.0, ErrorKind::InvalidInput, "tensor contains negative values");
  }
}

}  // namespace

Matrix SongTensor::slice(std::size_t b) const {
  Matrix m(frames, bins);
  std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(b * frames * bins), frames * bins, m.data.begin());
  return m;
}

SongTensor tensorize(const audio::AudioClip& clip, const BarGrid& grid, std::size_t frames_per_bar) {
  require(grid.bar_count >= 4, ErrorKind::TooShort, "song needs at least 4 bars");
  require(frames_per_bar >= 2, ErrorKind::InvalidInput, "frames per bar must be at least 2");

  SongTensor tensor(grid.bar_count, frames_per_bar, audio::kMelBins);
  for (std::size_t b = 0; b < grid.bar_count; ++b) {
    const auto excerpt = bar_audio(clip, grid, b);
    const Matrix mel = audio::mel_energies(audio::stft(excerpt), clip.sample_rate);
    const std::size_t src = mel.rows;
    for (std::size_t t = 0; t < frames_per_bar; ++t) {
      const double pos = src > 1 ? static_cast<double>(t) * static_cast<double>(src - 1) / static_cast<double>(frames_per_bar - 1) : 0.0;
      const auto lo = std::min(static_cast<std::size_t>(pos), src - 1);
      const std::size_t hi = std::min(lo + 1, src - 1);
      const double w = pos - static_cast<double>(lo);
      for (std::size_t f = 0; f < audio::kMelBins; ++f) {
        tensor.at(b, t, f) = std::max(0.0, (1.0 - w) * mel(lo, f) + w * mel(hi, f));
      }
    }
  }
  return tensor;
}

double kl_divergence(const SongTensor& x, const SongTensor& approx) {
  double d = 0.0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    const double v = x.values[i];
    const double a = approx.values[i];
    if (v > 0.0) {
      d += v * std::log(v / std::max(a, kTiny)) - v + a;
    } else {
      d += a;
    }
  }
  return d;
}

SongTensor reconstruct(const NtfModel& model) {
  SongTensor out(model.bars(), model.frames(), model.bins());
  reconstruct_into(model, bar_gains(model), out);
  return out;
}

double relative_error(const SongTensor& x, const SongTensor& approx) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    const double d = x.values[i] - approx.values[i];
    num += d * d;
    den += x.values[i] * x.values[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::sqrt(num);
  return std::sqrt(num / den);
}

std::size_t default_rank(std::size_t bars) { return std::max<std::size_t>(1, std::min<std::size_t>(8, bars / 2)); }

NtfModel ntf_factorize(const SongTensor& tensor, std::size_t rank, std::size_t iterations, std::uint64_t seed) {
  require(rank >= 1, ErrorKind::InvalidInput, "rank must be at least 1");
  require(tensor.bars > 0 && tensor.frames > 0 && tensor.bins > 0, ErrorKind::InvalidInput, "empty tensor");
  validate_tensor(tensor);

  const std::size_t bars = tensor.bars, frames = tensor.frames, bins = tensor.bins;
  NtfModel m;
  m.rank = rank;
  m.sound = Matrix(rank, bins);
  m.rhythm = Matrix(rank, frames);
  m.recipes = Matrix(rank, rank);
  m.layout = Matrix(rank, bars);
  Rng rng(seed);
  for (Matrix* factor : {&m.sound, &m.rhythm, &m.recipes, &m.layout}) {
    for (double& v : factor->data) v = rng.uniform_positive();
  }

  SongTensor approx(bars, frames, bins);
  SongTensor ratio(bars, frames, bins);
  Matrix gains = bar_gains(m);
  reconstruct_into(m, gains, approx);
  m.objective.push_back(kl_divergence(tensor, approx));

  std::vector<double> sums_sound(rank), sums_rhythm(rank), sums_gain(rank);
  auto refresh = [&] {
    gains = bar_gains(m);
    reconstruct_into(m, gains, approx);
    ratio_into(tensor, approx, ratio);
    for (std::size_t r = 0; r < rank; ++r) {
      sums_sound[r] = row_sum(m.sound, r);
      sums_rhythm[r] = row_sum(m.rhythm, r);
      double g = 0.0;
      for (std::size_t b = 0; b < bars; ++b) g += gains(b, r);
      sums_gain[r] = g;
    }
  };

  std::vector<double> num;
  for (std::size_t it = 0; it < iterations; ++it) {
    // Sound templates.
    refresh();
    num.assign(rank * bins, 0.0);
    for (std::size_t b = 0; b < bars; ++b) {
      for (std::size_t r = 0; r < rank; ++r) {
        const double g = gains(b, r);
        if (g == 0.0) continue;
        double* acc = num.data() + r * bins;
        for (std::size_t t = 0; t < frames; ++t) {
          const double gh = g * m.rhythm(r, t);
          if (gh == 0.0) continue;
          const double* q = &ratio.at(b, t, 0);
          for (std::size_t f = 0; f < bins; ++f) acc[f] += gh * q[f];
        }
      }
    }
    for (std::size_t r = 0; r < rank; ++r) {
      const double den = sums_gain[r] * sums_rhythm[r];
      if (den <= 0.0) continue;
      for (std::size_t f = 0; f < bins; ++f) m.sound(r, f) *= num[r * bins + f] / den;
    }

    // Rhythm templates.
    refresh();
    num.assign(rank * frames, 0.0);
    for (std::size_t b = 0; b < bars; ++b) {
      for (std::size_t r = 0; r < rank; ++r) {
        const double g = gains(b, r);
        if (g == 0.0) continue;
        const auto sound = m.sound.row(r);
        for (std::size_t t = 0; t < frames; ++t) {
          const double* q = &ratio.at(b, t, 0);
          double inner = 0.0;
          for (std::size_t f = 0; f < bins; ++f) inner += q[f] * sound[f];
          num[r * frames + t] += g * inner;
        }
      }
    }
    for (std::size_t r = 0; r < rank; ++r) {
      const double den = sums_gain[r] * sums_sound[r];
      if (den <= 0.0) continue;
      for (std::size_t t = 0; t < frames; ++t) m.rhythm(r, t) *= num[r * frames + t] / den;
    }

    // Recipes.
    refresh();
    {
      const Matrix proj = component_projections(m, ratio);
      Matrix next = m.recipes;
      for (std::size_t l = 0; l < rank; ++l) {
        const double layout_sum = row_sum(m.layout, l);
        for (std::size_t r = 0; r < rank; ++r) {
          const double den = layout_sum * sums_rhythm[r] * sums_sound[r];
          if (den <= 0.0) continue;
          double acc = 0.0;
          for (std::size_t b = 0; b < bars; ++b) acc += m.layout(l, b) * proj(b, r);
          next(l, r) = m.recipes(l, r) * acc / den;
        }
      }
      m.recipes = std::move(next);
    }

    // Layout.
    refresh();
    {
      const Matrix proj = component_projections(m, ratio);
      Matrix next = m.layout;
      for (std::size_t l = 0; l < rank; ++l) {
        double den = 0.0;
        for (std::size_t r = 0; r < rank; ++r) den += m.recipes(l, r) * sums_rhythm[r] * sums_sound[r];
        if (den <= 0.0) continue;
        for (std::size_t b = 0; b < bars; ++b) {
          double acc = 0.0;
          for (std::size_t r = 0; r < rank; ++r) acc += m.recipes(l, r) * proj(b, r);
          next(l, b) = m.layout(l, b) * acc / den;
        }
      }
      m.layout = std::move(next);
    }

    gains = bar_gains(m);
    reconstruct_into(m, gains, approx);
    m.objective.push_back(kl_divergence(tensor, approx));
  }

  // Resolve the scale ambiguity: unit-sum sound and rhythm rows, unit-sum
  // recipe rows. The reconstruction is unchanged.
  for (std::size_t r = 0; r < rank; ++r) {
    const double s = row_sum(m.sound, r);
    const double h = row_sum(m.rhythm, r);
    if (s <= 0.0 || h <= 0.0) continue;
    for (double& v : m.sound.row(r)) v /= s;
    for (double& v : m.rhythm.row(r)) v /= h;
    for (std::size_t l = 0; l < rank; ++l) m.recipes(l, r) *= s * h;
  }
  for (std::size_t l = 0; l < rank; ++l) {
    const double c = row_sum(m.recipes, l);
    if (c <= 0.0) continue;
    for (double& v : m.recipes.row(l)) v /= c;
    for (double& v : m.layout.row(l)) v *= c;
  }
  return m;
}

Matrix reconstruct_loop_spectrogram(const NtfModel& model, std::size_t loop) {
  require(loop < model.rank, ErrorKind::InvalidInput, "loop index out of range");
  Matrix out(model.frames(), model.bins());
  for (std::size_t r = 0; r < model.rank; ++r) {
    const double c = model.recipes(loop, r);
    if (c == 0.0) continue;
    for (std::size_t t = 0; t < model.frames(); ++t) {
      const double ch = c * model.rhythm(r, t);
      for (std::size_t f = 0; f < model.bins(); ++f) out(t, f) += ch * model.sound(r, f);
    }
  }
  return out;
}

std::vector<Matrix> loop_masks(const NtfModel& model, std::size_t bar) {
  require(bar < model.bars(), ErrorKind::InvalidInput, "bar index out of range");
  std::vector<Matrix> masks;
  masks.reserve(model.rank);
  Matrix total(model.frames(), model.bins());
  for (std::size_t l = 0; l < model.rank; ++l) {
    Matrix part = reconstruct_loop_spectrogram(model, l);
    const double a = model.layout(l, bar);
    for (std::size_t i = 0; i < part.data.size(); ++i) {
      part.data[i] *= a;
      total.data[i] += part.data[i];
    }
    masks.push_back(std::move(part));
  }
  const double uniform = 1.0 / static_cast<double>(model.rank);
  for (auto& mask : masks) {
    for (std::size_t i = 0; i < mask.data.size(); ++i) {
      mask.data[i] = total.data[i] > 0.0 ? mask.data[i] / total.data[i] : uniform;
    }
  }
  return masks;
}

}  // namespace loopcompat::extract
