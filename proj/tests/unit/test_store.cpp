#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sys/wait.h>

#include "corpus.hpp"
#include "loopcompat/audio/wav.hpp"
#include "loopcompat/error.hpp"
#include "loopcompat/store/config.hpp"
#include "loopcompat/store/experiment.hpp"
#include "loopcompat/store/ingest.hpp"
#include "loopcompat/store/manifest.hpp"
#include "loopcompat/store/matrix_io.hpp"
#include "loopcompat/store/pipeline.hpp"
#include "loopcompat/store/split.hpp"
#include "synth.hpp"

using namespace loopcompat;
using namespace loopcompat::store;
using loopcompat::testing::TempDir;

namespace {

dedup::LoopPair positive(const std::string& song, int k) {
  dedup::LoopPair p;
  p.song_id = song;
  p.loop_a = song + "__a" + std::to_string(k);
  p.loop_b = song + "__b" + std::to_string(k);
  p.pair_id = p.loop_a + "+" + p.loop_b;
  p.bar_count = 2;
  return p;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no exception";
  return ErrorKind::EstimationFailed;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LOOPCOMPAT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST(Manifest, RecordsRoundTrip) {
  TempDir dir("manifest");
  Corpus c;
  c.paths.root = dir.path();
  c.paths.create_directories();
  c.songs = {SongRecord{"s1", "audio/songs/s1.wav", 121.5, "cc-by", "train", ""},
             SongRecord{"s2", "audio/songs/s2.wav", std::nullopt, std::nullopt, "test", "x+y"}};
  LoopRecord l;
  l.loop_id = "s1__0";
  l.song_id = "s1";
  l.audio_path = "audio/loops/s1__0.wav";
  l.source_bar = 3;
  l.activation_total = 1.25;
  l.hash = "00ff00ff00ff00ff";
  LoopRecord r = l;
  r.loop_id = "s1__0__reverse";
  r.hash.clear();
  r.derived_from = l.loop_id;
  r.strategy = dedup::Strategy::Reverse;
  c.loops = {l, r};
  c.pairs = {positive("s1", 0)};
  c.negatives["random"] = {positive("s1", 1)};
  c.negatives["random"][0].label = dedup::PairLabel::Negative;
  c.negatives["random"][0].strategy = dedup::Strategy::Random;
  save_songs(c);
  save_loops(c);
  save_pairs(c);
  save_negatives(c, "random");

  const Corpus back = load_corpus(dir.path());
  EXPECT_EQ(back.songs, c.songs);
  EXPECT_EQ(back.loops, c.loops);
  EXPECT_EQ(back.pairs, c.pairs);
  EXPECT_EQ(back.negatives.at("random"), c.negatives.at("random"));
  ASSERT_NE(back.loop("s1__0__reverse"), nullptr);
  EXPECT_EQ(back.song("nope"), nullptr);

  write_file(dir.path() + "/pairs.jsonl", "{\"pair_id\": 3}\n");
  try {
    load_corpus(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
    EXPECT_NE(std::string(e.what()).find("pairs.jsonl"), std::string::npos);
  }
}

TEST(Manifest, MissingListsReadEmpty) {
  TempDir dir("empty");
  const Corpus c = load_corpus(dir.path());
  EXPECT_TRUE(c.songs.empty());
  EXPECT_TRUE(c.pairs.empty());
}

TEST(Manifest, ValidateFindsProblems) {
  TempDir dir("validate");
  Corpus c;
  c.paths.root = dir.path();
  c.songs = {SongRecord{"s1", "a.wav", {}, {}, "train", ""}, SongRecord{"s2", "b.wav", {}, {}, "val", ""}};
  LoopRecord a;
  a.loop_id = "s1__0";
  a.song_id = "s1";
  LoopRecord b = a;
  b.loop_id = "s1__1";
  c.loops = {a, b};
  dedup::LoopPair p;
  p.pair_id = "p";
  p.loop_a = "s1__0";
  p.loop_b = "s1__1";
  p.song_id = "s1";
  c.pairs = {p};
  EXPECT_TRUE(validate(c, false).empty());

  c.loops.push_back(a);
  EXPECT_FALSE(validate(c, false).empty());
  c.loops.pop_back();
  c.pairs[0].loop_b = "ghost";
  EXPECT_FALSE(validate(c, false).empty());
  c.pairs[0].loop_b = "s1__1";
  c.loops[1].derived_from = "s1__1";
  EXPECT_FALSE(validate(c, false).empty());
  c.loops[1].derived_from.reset();
  // A between-song pair joining two splits leaks.
  c.loops[1].song_id = "s2";
  c.pairs[0].song_id.clear();
  EXPECT_FALSE(validate(c, false).empty());
}

TEST(MatrixIo, RoundTripAndRejectsGarbage) {
  TempDir dir("matrix");
  Matrix m(3, 4);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) m(i, j) = 0.1 * static_cast<double>(i) - 1.0 / (1.0 + static_cast<double>(j));
  const auto path = std::filesystem::path(dir.path()) / "m.bin";
  save_matrix(path, m);
  const Matrix back = load_matrix(path);
  ASSERT_EQ(back.rows, 3u);
  ASSERT_EQ(back.cols, 4u);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(back(i, j), m(i, j));
  write_file(path, "not a matrix");
  EXPECT_THROW(load_matrix(path), Error);
}

TEST(Config, ParsesKeysAndRejectsUnknown) {
  TempDir dir("config");
  const auto path = std::filesystem::path(dir.path()) / "c.cfg";
  write_file(path, "# comment\n\nseed = 9\nrank=3\nlr = 0.05\nmodel = snn\ncorpus_wide_candidates = yes\n");
  Settings s;
  s.load(path);
  EXPECT_EQ(s.seed, 9u);
  EXPECT_EQ(s.rank, 3u);
  EXPECT_EQ(s.train.learning_rate, 0.05);
  EXPECT_EQ(s.train.kind, nn::ModelKind::Snn);
  EXPECT_TRUE(s.corpus_wide_candidates);
  EXPECT_EQ(kind_of([&] { s.set("colour", "blue"); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([&] { s.set("epochs", "many"); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([&] { s.set("threshold", "0"); }), ErrorKind::InvalidInput);
  write_file(path, "seed 9\n");
  EXPECT_EQ(kind_of([&] { Settings().load(path); }), ErrorKind::InvalidInput);
}

TEST(Split, SongLevelAndDeterministic) {
  std::vector<dedup::LoopPair> pairs;
  for (int s = 0; s < 10; ++s)
    for (int k = 0; k < 4; ++k) pairs.push_back(positive("song" + std::to_string(s), k));
  const SplitResult r = split_songs(pairs, 5, 2);
  ASSERT_EQ(r.split_of.size(), 10u);
  std::map<std::string, int> songs_in;
  for (const auto& [song, split] : r.split_of) ++songs_in[split];
  // 8 songs of 4 pairs after the held-out two: val takes round(32 / 5) = 6 pairs, one song.
  EXPECT_EQ(songs_in["test"], 2);
  EXPECT_EQ(songs_in["val"], 1);
  EXPECT_EQ(songs_in["train"], 7);
  ASSERT_EQ(r.test_pair_of.size(), 2u);
  for (const auto& [song, pair_id] : r.test_pair_of) {
    EXPECT_EQ(r.split_of.at(song), "test");
    EXPECT_EQ(pair_id.rfind(song + "__", 0), 0u);
  }
  EXPECT_EQ(split_songs(pairs, 5, 2).split_of, r.split_of);

  const std::vector<dedup::LoopPair> few(pairs.begin(), pairs.begin() + 24);
  EXPECT_EQ(kind_of([&] { split_songs(few, 5, 2); }), ErrorKind::InsufficientData);
}

TEST(Split, ValidationShareNearOneFifth) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<dedup::LoopPair> pairs;
    for (int s = 0; s < 40; ++s)
      for (int k = 0; k <= s % 3; ++k) pairs.push_back(positive("s" + std::to_string(s), k));
    const SplitResult r = split_songs(pairs, seed, 0);
    std::size_t val = 0, train = 0;
    for (const auto& p : pairs) (r.split_of.at(p.song_id) == "val" ? val : train) += 1;
    const double share = static_cast<double>(val) / static_cast<double>(val + train);
    EXPECT_NEAR(share, 0.2, 0.05) << "seed " << seed;
  }
}

TEST(Ingest, ConvertsAndNamesBadFiles) {
  TempDir dir("ingest");
  const std::filesystem::path root(dir.path());
  audio::AudioClip clip = loopcompat::testing::sine(440.0, 1.0, 0.5, 22050);
  audio::write_wav(root / "a.wav", clip);
  write_file(root / "list.jsonl", "{\"song_id\": \"a\", \"audio_path\": \"a.wav\", \"bpm_hint\": 100}\n");
  const Corpus c = ingest(root / "list.jsonl", root / "corpus");
  ASSERT_EQ(c.songs.size(), 1u);
  EXPECT_EQ(c.songs[0].bpm_hint, 100.0);
  const auto converted = audio::read_wav(root / "corpus" / c.songs[0].audio_path);
  EXPECT_EQ(converted.sample_rate, audio::kCanonicalRate);
  EXPECT_NEAR(static_cast<double>(converted.size()), 44100.0, 2.0);
  EXPECT_EQ(audio::read_wav(root / "a.wav").sample_rate, 22050);

  write_file(root / "bad.wav", "RIFF????WAVEjunk");
  write_file(root / "list2.jsonl", "{\"song_id\": \"b\", \"audio_path\": \"bad.wav\"}\n");
  try {
    ingest(root / "list2.jsonl", root / "corpus2");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IngestError);
    EXPECT_NE(std::string(e.what()).find("bad.wav"), std::string::npos);
  }
  write_file(root / "list3.jsonl", "{\"song_id\": \"a/b\", \"audio_path\": \"a.wav\"}\n");
  EXPECT_EQ(kind_of([&] { ingest(root / "list3.jsonl", root / "corpus3"); }), ErrorKind::InvalidInput);
}

TEST(Pipeline, ParallelForRunsAllAndRethrows) {
  std::vector<int> hit(100, 0);
  parallel_for(100, 3, [&](std::size_t i) { hit[i] += 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 100);
  EXPECT_THROW(parallel_for(10, 2,
                            [](std::size_t i) {
                              if (i == 7) fail(ErrorKind::InvalidInput, "seven");
                            }),
               Error);
}

TEST(Pipeline, SmallCorpusEndToEnd) {
  TempDir dir("pipeline");
  const std::filesystem::path root(dir.path());
  const auto list = loopcompat::testing::write_song_list(root / "in", 12, 8, 21);
  Corpus corpus = ingest(list, root / "corpus");

  Settings settings;
  settings.seed = 4;
  settings.rank = 2;
  settings.iterations = 100;
  settings.test_songs = 2;
  settings.candidates = 3;
  settings.train.epochs = 1;
  settings.train.batch_size = 8;
  const auto stages = run_pipeline(corpus, settings);
  for (const auto& [name, r] : stages) {
    EXPECT_FALSE(r.skipped) << name;
    EXPECT_TRUE(r.failures.empty()) << name << ": " << (r.failures.empty() ? "" : r.failures[0]);
  }
  EXPECT_TRUE(validate(corpus).empty());
  EXPECT_GE(corpus.pairs.size(), 8u);
  EXPECT_TRUE(corpus.has_splits());
  for (const auto& name : negative_set_names()) EXPECT_FALSE(corpus.negatives[name].empty()) << name;
  const auto params = nlohmann::json::parse(read_text(root / "corpus" / "spectrograms" / "params.json"));
  EXPECT_EQ(params.at("mel_norm"), "slaney");
  EXPECT_EQ(params.at("mel_bins"), 128);

  Corpus reloaded = load_corpus(root / "corpus");
  EXPECT_EQ(reloaded.loops, corpus.loops);
  for (const auto& [name, r] : run_pipeline(reloaded, settings)) EXPECT_TRUE(r.skipped) << name;

  const auto amu = evaluate(reloaded, settings, "amu", "both");
  ASSERT_TRUE(amu.ranking.has_value());
  EXPECT_EQ(amu.ranking->ranks.size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(root / "corpus" / "reports" / "amu_both.json"));

  const auto ckpt = train_model(reloaded, settings);
  EXPECT_EQ(ckpt.history.size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(checkpoint_path(reloaded, nn::ModelKind::Cnn, "random")));
  const auto cnn = evaluate(reloaded, settings, "cnn", "rank");
  for (std::size_t r : cnn.ranking->ranks) {
    EXPECT_GE(r, 1u);
    EXPECT_LE(r, 3u);
  }
}

TEST(Cli, ExitCodes) {
  TempDir dir("cli");
  const std::string root = dir.path();
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("--corpus " + root + "/c ingest " + root + "/missing.jsonl"), 2);
  write_file(root + "/bad.wav", "garbage");
  write_file(root + "/list.jsonl", "{\"song_id\": \"x\", \"audio_path\": \"bad.wav\"}\n");
  EXPECT_EQ(run_cli("--corpus " + root + "/c ingest " + root + "/list.jsonl"), 2);
  audio::write_wav(root + "/ok.wav", loopcompat::testing::sine(220.0, 4.0));
  write_file(root + "/list.jsonl", "{\"song_id\": \"x\", \"audio_path\": \"ok.wav\"}\n");
  EXPECT_EQ(run_cli("--corpus " + root + "/c ingest " + root + "/list.jsonl"), 0);
  EXPECT_EQ(run_cli("--corpus " + root + "/c validate"), 0);
  // One song cannot be split.
  EXPECT_EQ(run_cli("--corpus " + root + "/c split"), 3);
  EXPECT_EQ(run_cli("--corpus " + root + "/c train --model rnn"), 2);
}
