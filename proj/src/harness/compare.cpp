#include "diloco/harness/compare.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "diloco/error.hpp"

namespace diloco::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Side {
  // (key, seed) -> final loss, NaN when diverged
  std::map<std::pair<std::string, std::uint64_t>, double> runs;
  std::size_t diverged = 0;
};

double parse_loss(const std::string& text) {
  if (text.empty()) return kNaN;
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("compare: malformed final_eval_loss '" + text + "'");
  }
  return v;
}

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("compare: malformed seed '" + text + "'");
  }
  return v;
}

Side select(const CsvTable& runs, std::string_view name) {
  const std::size_t c_variant = runs.has_column("variant") ? runs.column("variant") : SIZE_MAX;
  const std::size_t c_method = runs.column("method");
  const std::size_t c_objective = runs.column("objective");
  const std::size_t c_H = runs.column("H");
  const std::size_t c_M = runs.column("M");
  const std::size_t c_format = runs.column("format");
  const std::size_t c_frag = runs.column("fragments");
  const std::size_t c_seed = runs.column("seed");
  const std::size_t c_loss = runs.column("final_eval_loss");
  const std::size_t c_div = runs.column("diverged");

  bool by_variant = false;
  if (c_variant != SIZE_MAX) {
    for (const auto& row : runs.rows) by_variant |= row[c_variant] == name;
  }
  const std::size_t c_select = by_variant ? c_variant : c_method;

  Side side;
  for (const auto& row : runs.rows) {
    if (row[c_select] != name) continue;
    const std::string key = row[c_objective] + "/H=" + row[c_H] + "/M=" + row[c_M] + "/" +
                            row[c_format] + "/F=" + row[c_frag];
    const bool diverged = row[c_div] == "true";
    const double loss = diverged ? kNaN : parse_loss(row[c_loss]);
    if (!side.runs.emplace(std::make_pair(key, parse_seed(row[c_seed])), loss).second) {
      throw ConfigError("compare: '" + std::string(name) + "' has several runs for " + key +
                        " seed " + row[c_seed] + "; select a single variant");
    }
    side.diverged += diverged ? 1 : 0;
  }
  if (side.runs.empty()) {
    throw ConfigError("compare: no rows with variant or method '" + std::string(name) + "'");
  }
  return side;
}

std::string missing_list(const Side& have, const Side& want) {
  std::map<std::string, std::set<std::uint64_t>> missing;
  for (const auto& [k, v] : want.runs) {
    if (!have.runs.count(k)) missing[k.first].insert(k.second);
  }
  std::string out;
  for (const auto& [key, seeds] : missing) {
    if (!out.empty()) out += "; ";
    out += key + " seeds";
    for (auto s : seeds) out += " " + std::to_string(s);
  }
  return out;
}

}  // namespace

CompareSummary compare_runs(const CsvTable& runs, std::string_view baseline,
                            std::string_view candidate) {
  const Side a = select(runs, baseline);
  const Side b = select(runs, candidate);
  const std::string missing_b = missing_list(b, a);
  const std::string missing_a = missing_list(a, b);
  if (!missing_a.empty() || !missing_b.empty()) {
    std::string msg = "compare: unmatched pairs;";
    if (!missing_b.empty()) msg += " '" + std::string(candidate) + "' lacks " + missing_b + ".";
    if (!missing_a.empty()) msg += " '" + std::string(baseline) + "' lacks " + missing_a + ".";
    throw ConfigError(msg);
  }

  CompareSummary s;
  s.baseline = std::string(baseline);
  s.candidate = std::string(candidate);
  s.baseline_diverged = a.diverged;
  s.candidate_diverged = b.diverged;
  std::vector<double> relative;
  double delta_sum = 0.0;
  for (const auto& [k, base_loss] : a.runs) {
    const double cand_loss = b.runs.at(k);
    PairedDelta p{k.first, k.second, base_loss, cand_loss, cand_loss - base_loss,
                  (cand_loss - base_loss) / base_loss};
    s.pairs.push_back(p);
    if (std::isnan(base_loss) || std::isnan(cand_loss)) continue;
    delta_sum += p.delta;
    relative.push_back(p.relative);
    if (p.delta > 0) {
      ++s.candidate_worse;
    } else if (p.delta < 0) {
      ++s.candidate_better;
    } else {
      ++s.ties;
    }
  }
  if (relative.empty()) {
    s.mean_delta = s.mean_relative = s.median_relative = kNaN;
  } else {
    const double n = static_cast<double>(relative.size());
    s.mean_delta = delta_sum / n;
    double rel_sum = 0.0;
    for (double r : relative) rel_sum += r;
    s.mean_relative = rel_sum / n;
    std::sort(relative.begin(), relative.end());
    const std::size_t mid = relative.size() / 2;
    s.median_relative = relative.size() % 2 ? relative[mid] : 0.5 * (relative[mid - 1] + relative[mid]);
  }

  const auto worse = s.candidate_worse + s.candidate_diverged;
  const auto better = s.candidate_better + s.baseline_diverged;
  if (worse == 0 && better == 0) {
    s.verdict = "equivalent";
  } else if (worse > 0 && better == 0) {
    s.verdict = "candidate-worse";
  } else if (better > 0 && worse == 0) {
    s.verdict = "candidate-better";
  } else {
    s.verdict = "mixed";
  }
  return s;
}

CompareSummary compare_runs_file(const std::filesystem::path& runs_csv, std::string_view baseline,
                                 std::string_view candidate) {
  return compare_runs(read_csv_file(runs_csv), baseline, candidate);
}

CsvTable summary_table(const CompareSummary& s) {
  CsvTable t;
  t.header = {"baseline",         "candidate",         "pairs",
              "baseline_diverged", "candidate_diverged", "mean_delta",
              "mean_relative_degradation", "median_relative_degradation", "candidate_worse",
              "candidate_better", "ties",              "verdict"};
  t.rows.push_back({s.baseline, s.candidate, std::to_string(s.pairs.size()),
                    std::to_string(s.baseline_diverged), std::to_string(s.candidate_diverged),
                    format_number(s.mean_delta), format_number(s.mean_relative),
                    format_number(s.median_relative), std::to_string(s.candidate_worse),
                    std::to_string(s.candidate_better), std::to_string(s.ties), s.verdict});
  return t;
}

}  // namespace diloco::harness
