#include "loopcompat/store/config.hpp"

#include <charconv>
#include <fstream>

#include "loopcompat/error.hpp"

namespace loopcompat::store {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) fail(ErrorKind::InvalidInput, "bad value '" + value + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  fail(ErrorKind::InvalidInput, "bad boolean '" + value + "' for " + key);
}

}  // namespace

void Settings::set(const std::string& key, const std::string& value) {
  if (key == "seed") {
    seed = parse_number<std::uint64_t>(key, value);
    train.seed = seed;
  } else if (key == "jobs") {
    jobs = parse_number<std::size_t>(key, value);
    require(jobs >= 1, ErrorKind::InvalidInput, "jobs must be at least 1");
  } else if (key == "rank") {
    rank = parse_number<std::size_t>(key, value);
  } else if (key == "iterations") {
    iterations = parse_number<std::size_t>(key, value);
  } else if (key == "max_loops_per_song") {
    max_loops_per_song = parse_number<std::size_t>(key, value);
  } else if (key == "threshold") {
    threshold = parse_number<double>(key, value);
    require(threshold > 0.0 && threshold <= 1.0, ErrorKind::InvalidInput, "threshold must be in (0, 1]");
  } else if (key == "neg_ratio") {
    neg_ratio = parse_number<double>(key, value);
    require(neg_ratio > 0.0, ErrorKind::InvalidInput, "neg_ratio must be positive");
  } else if (key == "test_songs") {
    test_songs = parse_number<std::size_t>(key, value);
  } else if (key == "candidates") {
    candidates = parse_number<std::size_t>(key, value);
    require(candidates >= 2, ErrorKind::InvalidInput, "candidates must be at least 2");
  } else if (key == "corpus_wide_candidates") {
    corpus_wide_candidates = parse_bool(key, value);
  } else if (key == "model") {
    train.kind = nn::parse_model_kind(value);
  } else if (key == "learning_rate" || key == "lr") {
    train.learning_rate = parse_number<double>(key, value);
    require(train.learning_rate > 0.0, ErrorKind::InvalidInput, "learning rate must be positive");
  } else if (key == "batch_size") {
    train.batch_size = parse_number<std::size_t>(key, value);
    require(train.batch_size >= 1, ErrorKind::InvalidInput, "batch size must be positive");
  } else if (key == "epochs") {
    train.epochs = parse_number<std::size_t>(key, value);
  } else if (key == "negative_strategy" || key == "neg") {
    train.negative_strategy = value;
  } else if (key == "margin") {
    train.margin = parse_number<double>(key, value);
    require(train.margin > 0.0, ErrorKind::InvalidInput, "margin must be positive");
  } else if (key == "mixing") {
    train.mixing = nn::parse_mixing(value);
  } else if (key == "dropout") {
    train.dropout = parse_number<double>(key, value);
    require(train.dropout >= 0.0 && train.dropout < 1.0, ErrorKind::InvalidInput, "dropout must be in [0, 1)");
  } else {
    fail(ErrorKind::InvalidInput, "unknown setting '" + key + "'");
  }
}

void Settings::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::InvalidInput, "cannot read config " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::InvalidInput, path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    set(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
  }
}

}  // namespace loopcompat::store
