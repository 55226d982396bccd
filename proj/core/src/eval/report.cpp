#include "loopcompat/eval/report.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <sstream>

namespace loopcompat::eval {

const std::vector<ReferenceRow>& reference_results() {
  static const std::vector<ReferenceRow> rows = {
      {"cnn", "random", 0.60, 0.59, 43.0, 0.13, 0.35, 0.59},
      {"cnn", "selected", 0.59, 0.59, 43.1, 0.13, 0.29, 0.62},
      {"cnn", "reverse", 0.63, 0.62, 41.2, 0.19, 0.42, 0.62},
      {"cnn", "shift", 0.57, 0.56, 49.0, 0.11, 0.34, 0.54},
      {"cnn", "rearrange", 0.57, 0.57, 47.7, 0.10, 0.31, 0.57},
      {"snn", "random", 0.51, 0.47, 34.2, 0.27, 0.52, 0.74},
      {"snn", "selected", 0.52, 0.47, 42.8, 0.18, 0.39, 0.59},
      {"snn", "reverse", 0.53, 0.48, 42.7, 0.16, 0.37, 0.62},
      {"snn", "shift", 0.53, 0.52, 43.0, 0.16, 0.41, 0.65},
      {"snn", "rearrange", 0.53, 0.53, 44.2, 0.16, 0.40, 0.60},
  };
  return rows;
}

std::optional<ReferenceRow> reference_for(const std::string& model, const std::string& strategy) {
  for (const auto& row : reference_results()) {
    if (row.model == model && row.strategy == strategy) return row;
  }
  return std::nullopt;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["scorer"] = r.scorer;
  if (r.scorer == "amu") j["label"] = "AutoMashUpper-style baseline";
  j["negative_strategy"] = r.negative_strategy;
  j["seed"] = r.seed;
  j["candidates"] = r.candidates;
  j["threshold"] = r.threshold;
  j["threshold_rule"] = r.threshold_rule;
  if (r.classification) {
    const auto& c = *r.classification;
    j["classification"] = {{"accuracy", c.accuracy}, {"f1", c.f1}, {"tp", c.tp},
                           {"fp", c.fp},             {"tn", c.tn}, {"fn", c.fn}};
  }
  if (r.ranking) {
    const auto& k = *r.ranking;
    j["ranking"] = {{"avg_rank", k.avg_rank}, {"top10", k.top10},           {"top30", k.top30},
                    {"top50", k.top50},       {"tasks", k.tasks},           {"tied_tasks", k.tied_tasks},
                    {"ranks", k.ranks}};
  }
  if (auto ref = reference_for(r.scorer, r.negative_strategy)) {
    j["reference_full_corpus"] = {{"accuracy", ref->accuracy}, {"f1", ref->f1},       {"avg_rank", ref->avg_rank},
                                  {"top10", ref->top10},       {"top30", ref->top30}, {"top50", ref->top50}};
  }
  return j;
}

namespace {

std::string cell(double v, const char* fmt) {
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string row(const std::string& model, const std::string& strategy, const std::string& acc, const std::string& f1,
                const std::string& rank, const std::string& t10, const std::string& t30, const std::string& t50) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %-10s | %8s %8s | %9s %6s %6s %6s\n", model.c_str(), strategy.c_str(),
                acc.c_str(), f1.c_str(), rank.c_str(), t10.c_str(), t30.c_str(), t50.c_str());
  return buf;
}

}  // namespace

std::string format_table(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << row("model", "negatives", "accuracy", "f1", "avg_rank", "top10", "top30", "top50");
  out << std::string(80, '-') << '\n';
  const std::string na = "-";
  for (const auto& r : reports) {
    const auto& c = r.classification;
    const auto& k = r.ranking;
    out << row(r.scorer, r.negative_strategy.empty() ? na : r.negative_strategy,
               c ? cell(c->accuracy, "%.2f") : na, c ? cell(c->f1, "%.2f") : na, k ? cell(k->avg_rank, "%.1f") : na,
               k ? cell(k->top10, "%.2f") : na, k ? cell(k->top30, "%.2f") : na, k ? cell(k->top50, "%.2f") : na);
    if (auto ref = reference_for(r.scorer, r.negative_strategy)) {
      out << row("  reference", "", cell(ref->accuracy, "%.2f"), cell(ref->f1, "%.2f"), cell(ref->avg_rank, "%.1f"),
                 cell(ref->top10, "%.2f"), cell(ref->top30, "%.2f"), cell(ref->top50, "%.2f"));
    }
  }
  return out.str();
}

}  // namespace loopcompat::eval
