#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <string>

#include "loopcompat/audio/wav.hpp"
#include "loopcompat/error.hpp"
#include "loopcompat/eval/report.hpp"
#include "loopcompat/nn/scoring.hpp"
#include "loopcompat/store/config.hpp"
#include "loopcompat/store/experiment.hpp"
#include "loopcompat/store/ingest.hpp"
#include "loopcompat/store/manifest.hpp"
#include "loopcompat/store/pipeline.hpp"

namespace lc = loopcompat;
namespace store = loopcompat::store;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitInsufficient = 3;

int exit_code(lc::ErrorKind kind) {
  switch (kind) {
    case lc::ErrorKind::InvalidInput:
    case lc::ErrorKind::ShapeError:
    case lc::ErrorKind::IngestError:
      return kExitInvalid;
    case lc::ErrorKind::InsufficientData:
      return kExitInsufficient;
    default:
      return kExitFailure;
  }
}

void report_stage(const std::string& name, const store::StageResult& r) {
  std::cout << name << ": " << (r.skipped ? "up to date" : std::to_string(r.processed) + " processed");
  if (!r.failures.empty()) std::cout << ", " << r.failures.size() << " failed";
  std::cout << '\n';
  for (const auto& f : r.failures) std::cerr << "  " << name << ": " << f << '\n';
}

std::vector<std::string> pool_loops(const store::Corpus& corpus, const std::string& pool) {
  std::vector<std::string> out;
  if (pool == "test") {
    std::set<std::string> held;
    for (const auto& s : corpus.songs) {
      if (!s.test_pair.empty()) held.insert(s.test_pair);
    }
    for (const auto& p : corpus.pairs) {
      if (held.contains(p.pair_id)) {
        out.push_back(p.loop_a);
        out.push_back(p.loop_b);
      }
    }
    return out;
  }
  for (const auto& l : corpus.loops) {
    if (l.derived_from) continue;
    const auto* song = corpus.song(l.song_id);
    if (pool == "all" || (song && song->split == pool)) out.push_back(l.loop_id);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loop compatibility toolkit: mine loop pairs, train and evaluate compatibility models"};
  app.require_subcommand(1);

  std::string corpus_dir = ".";
  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::size_t max_loops = 0;
  app.add_option("--corpus", corpus_dir, "Corpus directory")->capture_default_str();
  app.add_option("--config", config_path, "key=value settings file");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  auto* jobs_opt = app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  auto* max_loops_opt = app.add_option("--max-loops-per-song", max_loops, "Keep at most N loops per song (0: all)");

  std::string song_list;
  auto* ingest = app.add_subcommand("ingest", "Import songs listed in a JSONL file");
  ingest->add_option("songs", song_list, "JSONL list of {song_id, audio_path, bpm_hint?, license_tag?}")->required();

  auto* extract = app.add_subcommand("extract", "Extract loops from every song");
  auto* dedup = app.add_subcommand("dedup", "Remove duplicate loops and refine layouts");
  auto* pairs = app.add_subcommand("pairs", "Derive positive pairs from the refined layouts");
  auto* split = app.add_subcommand("split", "Assign songs to train/val/test");
  auto* featurize = app.add_subcommand("featurize", "Compute model and baseline features for every loop");

  std::string neg_strategy = "equal";
  double ratio = 1.0;
  auto* negatives = app.add_subcommand("negatives", "Sample negative pairs");
  negatives->add_option("--strategy", neg_strategy)
      ->check(CLI::IsMember({"random", "selected", "reverse", "shift", "rearrange", "equal"}))
      ->capture_default_str();
  auto* ratio_opt = negatives->add_option("--ratio", ratio, "Negatives per positive");

  std::string model = "cnn";
  std::string train_neg = "random";
  std::size_t epochs = 0;
  auto* train = app.add_subcommand("train", "Train a compatibility model");
  train->add_option("--model", model)->check(CLI::IsMember({"cnn", "snn"}))->capture_default_str();
  auto* train_neg_opt =
      train->add_option("--neg", train_neg, "Negative strategy to train with")->capture_default_str();
  auto* epochs_opt = train->add_option("--epochs", epochs);

  std::string task = "both";
  std::string scorer = "cnn";
  std::size_t candidates = 0;
  bool corpus_wide = false;
  auto* eval = app.add_subcommand("eval", "Evaluate a scorer");
  eval->add_option("--task", task)->check(CLI::IsMember({"classify", "rank", "both"}))->capture_default_str();
  eval->add_option("--scorer", scorer)->check(CLI::IsMember({"cnn", "snn", "amu"}))->capture_default_str();
  auto* eval_neg_opt = eval->add_option("--neg", train_neg, "Negative strategy of the checkpoint");
  auto* candidates_opt = eval->add_option("--candidates", candidates, "Candidates per ranking task");
  eval->add_flag("--corpus-wide", corpus_wide, "Draw distractors from every loop, not only test loops");

  std::string query;
  std::string pool = "test";
  std::size_t top = 10;
  auto* rank = app.add_subcommand("rank", "Rank a pool of loops against a query loop");
  rank->add_option("--query", query)->required();
  rank->add_option("--pool", pool)->check(CLI::IsMember({"test", "train", "val", "all"}))->capture_default_str();
  rank->add_option("--scorer", scorer)->check(CLI::IsMember({"cnn", "snn", "amu"}))->capture_default_str();
  auto* rank_neg_opt = rank->add_option("--neg", train_neg, "Negative strategy of the checkpoint");
  rank->add_option("--top", top)->capture_default_str();

  std::string pair_arg;
  std::string out_path;
  auto* mix = app.add_subcommand("mix", "Render a pair of loops to a WAV file");
  mix->add_option("--pair", pair_arg, "loop_a,loop_b")->required();
  mix->add_option("-o,--output", out_path)->required();

  auto* validate = app.add_subcommand("validate", "Check manifest integrity");
  auto* run = app.add_subcommand("run", "Run every pipeline stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInvalid;
  }

  try {
    store::Settings settings;
    if (!config_path.empty()) settings.load(config_path);
    if (*seed_opt) settings.set("seed", std::to_string(seed));
    if (*jobs_opt) settings.jobs = jobs;
    if (*max_loops_opt) settings.max_loops_per_song = max_loops;
    if (*ratio_opt) settings.set("neg_ratio", std::to_string(ratio));
    if (*epochs_opt) settings.train.epochs = epochs;
    if (*candidates_opt) settings.set("candidates", std::to_string(candidates));
    if (corpus_wide) settings.corpus_wide_candidates = true;
    if (*train_neg_opt || *eval_neg_opt || *rank_neg_opt) settings.train.negative_strategy = train_neg;
    if (train->parsed()) settings.train.kind = lc::nn::parse_model_kind(model);

    if (ingest->parsed()) {
      const auto corpus = store::ingest(song_list, corpus_dir);
      std::cout << "ingested " << corpus.songs.size() << " songs into " << corpus_dir << '\n';
      return kExitOk;
    }

    auto corpus = store::load_corpus(corpus_dir);
    if (extract->parsed()) report_stage("extract", store::extract_stage(corpus, settings));
    if (dedup->parsed()) report_stage("dedup", store::dedup_stage(corpus, settings));
    if (pairs->parsed()) report_stage("pairs", store::pairs_stage(corpus, settings));
    if (split->parsed()) report_stage("split", store::split_stage(corpus, settings));
    if (negatives->parsed()) report_stage("negatives_" + neg_strategy, store::negatives_stage(corpus, settings, neg_strategy));
    if (featurize->parsed()) report_stage("featurize", store::featurize_stage(corpus, settings));
    if (run->parsed()) {
      for (const auto& [name, result] : store::run_pipeline(corpus, settings)) report_stage(name, result);
    }

    if (train->parsed()) {
      const auto ckpt = store::train_model(corpus, settings);
      for (const auto& e : ckpt.history) {
        std::printf("epoch %3zu  train %.5f  val %.5f  metric %.4f\n", e.epoch, e.train_loss, e.val_loss, e.val_metric);
      }
      std::cout << "best epoch " << ckpt.best_epoch << ", saved "
                << store::checkpoint_path(corpus, settings.train.kind, settings.train.negative_strategy).string()
                << '\n';
    }

    if (eval->parsed()) {
      const auto report = store::evaluate(corpus, settings, scorer, task);
      std::cout << lc::eval::format_table({report});
    }

    if (rank->parsed()) {
      require(corpus.loop(query) != nullptr, lc::ErrorKind::InvalidInput, "unknown query loop '" + query + "'");
      auto candidates_list = pool_loops(corpus, pool);
      std::erase(candidates_list, query);
      require(!candidates_list.empty(), lc::ErrorKind::InsufficientData, "pool '" + pool + "' is empty");
      auto s = store::make_scorer(corpus, scorer, settings.train.negative_strategy);
      const auto scores = s->score_many(query, candidates_list);
      std::vector<std::size_t> order(scores.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
      for (std::size_t i = 0; i < std::min(top, order.size()); ++i) {
        std::printf("%3zu  %+.6f  %s\n", i + 1, scores[order[i]], candidates_list[order[i]].c_str());
      }
    }

    if (mix->parsed()) {
      const auto comma = pair_arg.find(',');
      require(comma != std::string::npos, lc::ErrorKind::InvalidInput, "--pair expects loop_a,loop_b");
      const auto a = lc::audio::read_wav(corpus.loop_audio(pair_arg.substr(0, comma)));
      const auto b = lc::audio::read_wav(corpus.loop_audio(pair_arg.substr(comma + 1)));
      lc::audio::write_wav(out_path, lc::nn::mix_pair(a, b));
      std::cout << "wrote " << out_path << '\n';
    }

    if (validate->parsed()) {
      const auto problems = store::validate(corpus);
      for (const auto& p : problems) std::cout << p << '\n';
      if (!problems.empty()) {
        std::cerr << problems.size() << " problem(s)\n";
        return kExitInvalid;
      }
      std::cout << "ok: " << corpus.songs.size() << " songs, " << corpus.loops.size() << " loops, "
                << corpus.pairs.size() << " pairs\n";
    }
    return kExitOk;
  } catch (const lc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
