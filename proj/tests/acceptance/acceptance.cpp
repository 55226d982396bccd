// Prints one PASS/FAIL line per acceptance criterion. Pass criterion numbers
// as arguments to run a subset. Exit status is 1 if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "gradcheck.hpp"
#include "loopcompat/audio/spectral.hpp"
#include "loopcompat/audio/wav.hpp"
#include "loopcompat/dedup/average_hash.hpp"
#include "loopcompat/dedup/refine.hpp"
#include "loopcompat/error.hpp"
#include "loopcompat/eval/metrics.hpp"
#include "loopcompat/extract/ntf.hpp"
#include "loopcompat/mash/features.hpp"
#include "loopcompat/mash/mashability.hpp"
#include "loopcompat/negatives/manipulate.hpp"
#include "loopcompat/negatives/sampler.hpp"
#include "loopcompat/nn/checkpoint.hpp"
#include "loopcompat/nn/loss.hpp"
#include "loopcompat/nn/model.hpp"
#include "loopcompat/nn/train.hpp"
#include "loopcompat/random.hpp"
#include "loopcompat/store/experiment.hpp"
#include "loopcompat/store/ingest.hpp"
#include "loopcompat/store/manifest.hpp"
#include "loopcompat/store/pipeline.hpp"
#include "synth.hpp"

namespace fs = std::filesystem;
namespace lt = loopcompat::testing;
using namespace loopcompat;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_ = Clock::now();
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 1. Log-mel shape and runtime.
Outcome dsp_shape() {
  const auto clip = lt::white_noise(2.0, 1);
  Timer t;
  const auto mel = audio::loop_features(clip);
  const double s = t.seconds();
  const bool ok = mel.values.rows == 173 && mel.values.cols == 128 && s < 1.0;
  return {ok, std::to_string(mel.values.rows) + "x" + std::to_string(mel.values.cols) + " in " + fmt("%.3f", s) + " s"};
}

// 2. Finite-difference gradients of every layer, both losses and both
// networks on 50 random shapes.
Outcome gradient_suite() {
  Timer t;
  double worst = 0.0;
  std::string worst_what;
  std::size_t coords = 0, skipped = 0;
  auto note = [&](const std::vector<lt::GradCheck>& checks, const std::string& where) {
    for (const auto& c : checks) {
      if (c.rel_error > worst) {
        worst = c.rel_error;
        worst_what = where + "/" + c.what;
      }
      coords += c.coords;
      skipped += c.skipped;
    }
  };

  for (std::uint64_t shape = 0; shape < 50; ++shape) {
    Rng rng(mix_seed(shape, 2));
    const std::size_t n = 2 + rng.index(3), c = 1 + rng.index(3), h = 2 + rng.index(6), w = 2 + rng.index(6);
    const nn::Shape s{n, c, h, w};
    nn::Conv2d conv("conv", c, 1 + rng.index(4));
    conv.init_he_uniform(rng);
    note(lt::check_layer(conv, s, nn::Mode::Train, shape), "conv");
    nn::Linear lin("linear", c * h * w, 1 + rng.index(6));
    lin.init_he_uniform(rng);
    note(lt::check_layer(lin, s, nn::Mode::Train, shape), "linear");
    nn::BatchNorm bn("bn", c);
    for (double& g : bn.gamma().value) g = rng.uniform(0.5, 1.5);
    for (double& b : bn.beta().value) b = rng.normal();
    note(lt::check_layer(bn, s, nn::Mode::Train, shape), "bn.train");
    note(lt::check_layer(bn, s, nn::Mode::Eval, shape), "bn.eval");
    nn::PRelu pr("prelu", c);
    for (double& a : pr.slope().value) a = rng.uniform(0.05, 0.5);
    note(lt::check_layer(pr, s, nn::Mode::Train, shape), "prelu");
    nn::Dropout dr(0.3, shape);
    note(lt::check_layer(dr, s, nn::Mode::Train, shape), "dropout");
    nn::MaxPool2 mp;
    note(lt::check_layer(mp, s, nn::Mode::Train, shape), "maxpool");

    // Losses at random operating points.
    const double eps = lt::kGradEps;
    const double p = rng.uniform(0.05, 0.95), y = static_cast<double>(rng.index(2));
    const double bce_num = (nn::bce_loss(p + eps, y) - nn::bce_loss(p - eps, y)) / (2 * eps);
    note({{"bce", lt::relative_error({nn::bce_grad(p, y)}, {bce_num}), 1, 0}}, "loss");
    double d = rng.uniform(0.05, 2.0);
    if (std::abs(d - 1.0) < 2 * eps) d += 0.1;  // keep the hinge kink out of the stencil
    const double con_num = (nn::contrastive_loss(d + eps, y) - nn::contrastive_loss(d - eps, y)) / (2 * eps);
    note({{"contrastive", lt::relative_error({nn::contrastive_grad(d, y)}, {con_num}), 1, 0}}, "loss");

    // Both losses through a whole network.
    nn::ArchConfig arch;
    arch.height = 4 + rng.index(9);
    arch.width = 4 + rng.index(9);
    arch.seed = shape;
    nn::Network cnn(nn::ModelKind::Cnn, arch);
    note(lt::check_network(cnn, 3, shape, eps, 4), "cnn");
    nn::Network snn(nn::ModelKind::Snn, arch);
    note(lt::check_network(snn, 3, shape, eps, 4), "snn");
  }
  const double s = t.seconds();
  const double kink_share = static_cast<double>(skipped) / static_cast<double>(coords);
  const bool ok = worst < 1e-3 && s < 120.0 && kink_share < 0.1;
  return {ok, "max rel error " + fmt("%.2e", worst) + " (" + worst_what + ") over " + std::to_string(coords) +
                  " coordinates, kink share " + fmt("%.3f", kink_share) + ", " + fmt("%.1f", s) + " s"};
}

extract::SongTensor random_tensor(std::size_t bars, std::size_t frames, std::size_t bins, std::uint64_t seed) {
  Rng rng(seed);
  extract::SongTensor x(bars, frames, bins);
  for (double& v : x.values) v = rng.uniform(0.0, 1.0) * rng.uniform(0.0, 1.0);
  return x;
}

// 3. NTF monotonicity and rank-1 recovery.
Outcome ntf_convergence() {
  std::size_t violations = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = random_tensor(8, 16, 24, 1000 + seed);
    const auto m = extract::ntf_factorize(x, 3, 200, seed);
    for (std::size_t i = 1; i < m.objective.size(); ++i) {
      if (m.objective[i] > m.objective[i - 1] + 1e-9 * std::abs(m.objective[i - 1])) ++violations;
    }
  }
  Rng rng(77);
  const std::size_t bars = 8, frames = 16, bins = 24;
  std::vector<double> a(bars), h(frames), w(bins);
  for (double& v : a) v = rng.uniform(0.2, 1.0);
  for (double& v : h) v = rng.uniform(0.2, 1.0);
  for (double& v : w) v = rng.uniform(0.2, 1.0);
  extract::SongTensor x(bars, frames, bins);
  for (std::size_t b = 0; b < bars; ++b)
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t f = 0; f < bins; ++f) x.at(b, t, f) = a[b] * h[t] * w[f];
  const double err = extract::relative_error(x, extract::reconstruct(extract::ntf_factorize(x, 1, 200, 5)));
  return {violations == 0 && err < 1e-3,
          std::to_string(violations) + " increases over 20 seeds, rank-1 error " + fmt("%.2e", err)};
}

// 4. A 16-bar song of two band-disjoint loops through extract, dedup and pairs.
Outcome pipeline_oracle() {
  lt::TempDir dir("accept4");
  const fs::path root(dir.path());
  const auto low = lt::low_band_loop(1), high = lt::high_band_loop(2);
  std::vector<std::vector<bool>> active(2, std::vector<bool>(16, false));
  for (std::size_t b = 0; b < 16; ++b) {
    active[0][b] = b < 12;
    active[1][b] = b >= 4;
  }
  fs::create_directories(root / "in");
  audio::write_wav(root / "in" / "song.wav", lt::arrange({low, high}, active));
  std::ofstream(root / "in" / "songs.jsonl") << R"({"song_id": "song", "audio_path": "song.wav", "bpm_hint": 120})"
                                             << '\n';
  store::Corpus corpus = store::ingest(root / "in" / "songs.jsonl", root / "corpus");
  store::Settings settings;
  settings.rank = 2;
  for (const auto& r : {store::extract_stage(corpus, settings), store::dedup_stage(corpus, settings),
                        store::pairs_stage(corpus, settings)}) {
    if (!r.failures.empty()) return {false, r.failures.front()};
  }

  double worst_leak = 0.0;
  std::set<std::string> bands;
  for (const auto& l : corpus.loops) {
    const auto clip = audio::read_wav(root / "corpus" / l.audio_path);
    const double lo = lt::band_energy_fraction(clip, 0.0, 400.0);
    const double hi = lt::band_energy_fraction(clip, 4000.0, 22050.0);
    bands.insert(lo > hi ? "low" : "high");
    worst_leak = std::max(worst_leak, 1.0 - std::max(lo, hi));
  }
  const bool ok = corpus.loops.size() >= 2 && bands.size() == 2 && corpus.pairs.size() == 1 && worst_leak < 0.1;
  return {ok, std::to_string(corpus.loops.size()) + " loops, " + std::to_string(corpus.pairs.size()) +
                  " pairs, out-of-band energy " + fmt("%.4f", worst_leak)};
}

// 5. Injected exact duplicate removed, distance-5 neighbour kept.
Outcome dedup_check() {
  const auto mel = audio::loop_features(lt::mid_band_loop(3));
  const dedup::SpectrogramHash h = dedup::average_hash(mel.values);
  dedup::SpectrogramHash near = h;
  for (int bit : {0, 13, 27, 41, 60}) near.bits ^= 1ULL << bit;
  const auto r = dedup::dedup_loops({{h, 3.0}, {h, 1.0}, {near, 2.0}});
  const bool ok = dedup::hamming_distance(h, near) == 5 && r.kept == std::vector<std::size_t>{0, 2} &&
                  r.merged_into.size() == 1 && r.merged_into.count(1) == 1;
  return {ok, "kept " + std::to_string(r.kept.size()) + " of 3 (duplicate at distance 0, neighbour at 5)"};
}

// 6. Manipulation invariants and equal-mode balance.
Outcome negative_invariants() {
  std::size_t failures = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto x = lt::white_noise(2.0, seed);
    if (negatives::reverse_loop(negatives::reverse_loop(x)) != x) ++failures;
    if (negatives::shift_loop(negatives::shift_loop(x, 1), 3) != x) ++failures;
    if (negatives::shift_loop(negatives::shift_loop(x, 3), 1) != x) ++failures;
    Rng rng(seed);
    auto beats = [](const audio::AudioClip& c) {
      std::vector<std::vector<double>> out;
      for (std::size_t b = 0; b < 4; ++b)
        out.emplace_back(c.samples.begin() + static_cast<std::ptrdiff_t>(b * negatives::kBeatSamples),
                         c.samples.begin() + static_cast<std::ptrdiff_t>((b + 1) * negatives::kBeatSamples));
      std::sort(out.begin(), out.end());
      return out;
    };
    for (int i = 0; i < 20; ++i) {
      const auto r = negatives::rearrange_loop(x, rng);
      if (r.clip == x || beats(r.clip) != beats(x)) ++failures;
    }
  }

  negatives::NegativeSources sources;
  std::vector<dedup::LoopPair> positives;
  for (int s = 0; s < 8; ++s) {
    const std::string song = "s" + std::to_string(s);
    for (int l = 0; l < 4; ++l) sources.loops.push_back({song + "_loop0" + std::to_string(l), song});
    for (int l = 0; l < 3; ++l) {
      dedup::LoopPair p;
      p.loop_a = song + "_loop0" + std::to_string(l);
      p.loop_b = song + "_loop0" + std::to_string(l + 1);
      p.pair_id = p.loop_a + "+" + p.loop_b;
      p.song_id = song;
      positives.push_back(p);
    }
  }
  sources.load = [](const std::string& id) { return lt::mid_band_loop(fnv1a(id)); };
  negatives::SamplingConfig cfg;
  cfg.equal = true;
  cfg.seed = 5;
  const auto set = negatives::build_negative_set(positives, sources, cfg);
  std::map<dedup::Strategy, std::size_t> counts;
  for (const auto& p : set.pairs) ++counts[p.strategy];
  std::size_t lo = set.pairs.size(), hi = 0;
  for (auto [s, n] : counts) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  const bool balanced = set.pairs.size() == positives.size() && counts.size() == 5 && hi - lo <= 1;
  return {failures == 0 && balanced, std::to_string(failures) + " manipulation violations, equal-mode counts " +
                                         std::to_string(lo) + ".." + std::to_string(hi) + " over " +
                                         std::to_string(counts.size()) + " strategies"};
}

std::string checkpoint_bytes(const nn::ModelCheckpoint& ckpt, const fs::path& path) {
  nn::save_checkpoint(path, ckpt);
  return slurp(path);
}

// 7. Full-size synthetic training for both models.
Outcome synthetic_training() {
  lt::TempDir dir("accept7");
  std::string detail;
  bool ok = true;

  {
    const auto data = lt::two_cluster_pairs(nn::ModelKind::Cnn, 400, 400, 173, 128, 11);
    nn::TrainConfig cfg;
    cfg.kind = nn::ModelKind::Cnn;
    cfg.epochs = 20;
    cfg.batch_size = 128;
    cfg.seed = 11;
    Timer t;
    const auto ckpt = nn::train(data.train, data.val, cfg);
    const double s = t.seconds();
    nn::Predictor pred(ckpt);
    std::vector<const Matrix*> inputs;
    for (const auto& p : data.val.pairs) inputs.push_back(&data.val.features[p.a]);
    const auto probs = pred.probabilities(inputs);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) correct += (probs[i] >= 0.5) == (data.val.pairs[i].label > 0.5);
    const double acc = static_cast<double>(correct) / static_cast<double>(probs.size());
    ok = ok && acc >= 0.95 && s < 600.0;
    detail += "cnn val acc " + fmt("%.3f", acc) + " in " + fmt("%.0f", s) + " s";
  }
  {
    const auto data = lt::two_cluster_pairs(nn::ModelKind::Snn, 400, 400, 173, 128, 12);
    nn::TrainConfig cfg;
    cfg.kind = nn::ModelKind::Snn;
    cfg.epochs = 8;
    cfg.batch_size = 128;
    cfg.seed = 12;
    Timer t;
    const auto ckpt = nn::train(data.train, data.val, cfg);
    const double s = t.seconds();
    nn::Predictor pred(ckpt);
    std::vector<const Matrix*> inputs;
    for (const auto& m : data.val.features) inputs.push_back(&m);
    const auto emb = pred.embeddings(inputs);
    double pos = 0.0, neg = 0.0;
    std::size_t np = 0, nn_ = 0;
    for (const auto& p : data.val.pairs) {
      const double d = nn::euclidean_distance(emb[p.a], emb[p.b]);
      (p.label > 0.5 ? pos : neg) += d;
      (p.label > 0.5 ? np : nn_) += 1;
    }
    pos /= static_cast<double>(np);
    neg /= static_cast<double>(nn_);
    ok = ok && pos < neg && s < 600.0;
    detail += "; snn mean distance pos " + fmt("%.3f", pos) + " < neg " + fmt("%.3f", neg) + " in " + fmt("%.0f", s) +
              " s";
  }
  // Bit-reproducibility: identical short runs give identical checkpoint files.
  for (auto kind : {nn::ModelKind::Cnn, nn::ModelKind::Snn}) {
    const auto data = lt::two_cluster_pairs(kind, 400, 400, 173, 128, 13);
    nn::TrainConfig cfg;
    cfg.kind = kind;
    cfg.epochs = 1;
    cfg.batch_size = 128;
    cfg.seed = 13;
    const auto a = checkpoint_bytes(nn::train(data.train, data.val, cfg), fs::path(dir.path()) / "a.ckpt");
    const auto b = checkpoint_bytes(nn::train(data.train, data.val, cfg), fs::path(dir.path()) / "b.ckpt");
    const bool same = !a.empty() && a == b;
    ok = ok && same;
    detail += std::string("; ") + (kind == nn::ModelKind::Cnn ? "cnn" : "snn") + (same ? " reproducible" : " NOT reproducible");
  }
  return {ok, detail};
}

std::vector<eval::TaskScores> uniform_tasks(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<eval::TaskScores> tasks(n);
  for (auto& t : tasks) {
    t.scores.resize(100);
    for (double& s : t.scores) s = rng.uniform();
    t.target = rng.index(100);
  }
  return tasks;
}

// 8. Ranking metrics on oracle, uniform and transformed scores.
Outcome ranking_calibration() {
  auto tasks = uniform_tasks(1000, 8);
  const auto random = eval::ranking_metrics(tasks);
  auto oracle_tasks = tasks;
  for (auto& t : oracle_tasks) t.scores[t.target] = 2.0;
  const auto oracle = eval::ranking_metrics(oracle_tasks);
  auto moved = tasks;
  for (auto& t : moved)
    for (double& s : t.scores) s = std::exp(5.0 * s) - 3.0;
  const auto transformed = eval::ranking_metrics(moved);
  const bool ok = oracle.avg_rank == 1.0 && oracle.top10 == 1.0 && std::abs(random.avg_rank - 50.5) <= 2.0 &&
                  transformed.ranks == random.ranks;
  return {ok, "oracle avg rank " + fmt("%.1f", oracle.avg_rank) + " top-10 " + fmt("%.2f", oracle.top10) +
                  ", uniform avg rank " + fmt("%.2f", random.avg_rank) +
                  (transformed.ranks == random.ranks ? ", transform invariant" : ", transform CHANGED ranks")};
}

Matrix rotate_chroma(const Matrix& m, std::size_t k) {
  Matrix out(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < 12; ++c) out(r, (c + k) % 12) = m(r, c);
  return out;
}

// 9. Mashability sanity.
Outcome baseline_sanity() {
  const std::vector<audio::AudioClip> loops{lt::mid_band_loop(3), lt::low_band_loop(1), lt::high_band_loop(2),
                                            lt::mid_band_loop(9)};
  double self_err = 0.0, rot_err = 0.0, sym_err = 0.0;
  for (std::size_t i = 0; i < loops.size(); ++i) {
    const auto fi = mash::beat_sync_features(loops[i]);
    const auto self = mash::mashability(fi, fi);
    self_err = std::max({self_err, std::abs(self.harmonic - 1.0), std::abs(self.rhythmic - 1.0)});
    for (std::size_t j = 0; j < loops.size(); ++j) {
      const auto fj = mash::beat_sync_features(loops[j]);
      sym_err = std::max(sym_err, std::abs(mash::mashability(fi, fj).score - mash::mashability(fj, fi).score));
      const double base = mash::harmonic_similarity(fi.chroma, fj.chroma);
      for (std::size_t k = 1; k < 12; ++k)
        rot_err = std::max(rot_err, std::abs(mash::harmonic_similarity(rotate_chroma(fi.chroma, k), fj.chroma) - base));
    }
  }
  const bool ok = self_err < 1e-9 && rot_err < 1e-9 && sym_err == 0.0;
  return {ok, "self error " + fmt("%.1e", self_err) + ", rotation error " + fmt("%.1e", rot_err) +
                  ", asymmetry " + fmt("%.1e", sym_err)};
}

// Runs ingest, the pipeline, training of both models and every evaluation.
void full_run(const fs::path& root) {
  const auto list = lt::write_song_list(root / "in", 12, 8, 21);
  store::Corpus corpus = store::ingest(list, root / "corpus");
  store::Settings settings;
  settings.seed = 4;
  settings.rank = 2;
  settings.iterations = 100;
  settings.test_songs = 2;
  settings.candidates = 3;
  settings.train.epochs = 2;
  settings.train.batch_size = 8;
  for (const auto& [name, r] : store::run_pipeline(corpus, settings)) {
    require(r.failures.empty(), ErrorKind::InvalidInput, name + ": " + (r.failures.empty() ? "" : r.failures[0]));
  }
  for (auto kind : {nn::ModelKind::Cnn, nn::ModelKind::Snn}) {
    settings.train.kind = kind;
    store::train_model(corpus, settings);
    store::evaluate(corpus, settings, kind == nn::ModelKind::Cnn ? "cnn" : "snn", "both");
  }
  store::evaluate(corpus, settings, "amu", "both");
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  }
  return files;
}

// 10. Two consecutive runs produce identical files.
Outcome end_to_end_determinism() {
  lt::TempDir a("accept10a"), b("accept10b");
  full_run(a.path());
  full_run(b.path());
  const auto ta = tree(fs::path(a.path()) / "corpus"), tb = tree(fs::path(b.path()) / "corpus");
  std::size_t manifests = 0, checkpoints = 0, reports = 0;
  std::vector<std::string> differing;
  for (const auto& [name, bytes] : ta) {
    const auto it = tb.find(name);
    if (it == tb.end() || it->second != bytes) differing.push_back(name);
    if (name.ends_with(".jsonl")) ++manifests;
    if (name.starts_with("checkpoints/")) ++checkpoints;
    if (name.starts_with("reports/")) ++reports;
  }
  const bool ok = differing.empty() && ta.size() == tb.size() && manifests > 0 && checkpoints > 0 && reports > 0;
  return {ok, std::to_string(ta.size()) + " files (" + std::to_string(manifests) + " manifests, " +
                  std::to_string(checkpoints) + " checkpoint files, " + std::to_string(reports) + " reports), " +
                  std::to_string(differing.size()) + " differ" + (differing.empty() ? "" : ", first " + differing[0])};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"log-mel shape", dsp_shape},
      {"gradient suite", gradient_suite},
      {"NTF convergence", ntf_convergence},
      {"pipeline oracle", pipeline_oracle},
      {"dedup", dedup_check},
      {"negative sampling invariants", negative_invariants},
      {"synthetic training", synthetic_training},
      {"ranking calibration", ranking_calibration},
      {"baseline sanity", baseline_sanity},
      {"end-to-end determinism", end_to_end_determinism},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(static_cast<std::size_t>(std::atoi(argv[i])));

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.contains(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("%s criterion %zu: %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
