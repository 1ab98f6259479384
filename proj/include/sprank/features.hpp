#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sprank/tree.hpp"
#include "sprank/util.hpp"

namespace sprank {

// Fixed per-hypothesis feature schema, in order.
inline constexpr std::size_t kNumFeatures = 12;

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "length",          "parse_score_raw", "parse_score_norm", "asr_score_raw",
    "asr_score_norm",  "edited_count",    "depth",            "total_constituents",
    "intj_count",      "np_count",        "vp_count",         "pp_count",
};

enum FeatureIndex : std::size_t {
  kLength = 0,
  kParseScoreRaw = 1,
  kParseScoreNorm = 2,
  kAsrScoreRaw = 3,
  kAsrScoreNorm = 4,
  kEditedCount = 5,
  kDepth = 6,
  kTotalConstituents = 7,
  kIntjCount = 8,
  kNpCount = 9,
  kVpCount = 10,
  kPpCount = 11,
};

using SentenceFeatures = std::array<double, kNumFeatures>;

// Named subset of the schema; masking preserves schema order.
struct FeaturePreset {
  std::string name;
  std::array<bool, kNumFeatures> mask{};

  std::size_t arity() const {
    std::size_t k = 0;
    for (bool m : mask)
      if (m) ++k;
    return k;
  }

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < kNumFeatures; ++i)
      if (mask[i]) out.push_back(i);
    return out;
  }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> out;
    for (std::size_t i : indices()) out.emplace_back(kFeatureNames[i]);
    return out;
  }
};

namespace detail {

inline FeaturePreset make_preset(std::string name, std::initializer_list<std::size_t> indices) {
  FeaturePreset p;
  p.name = std::move(name);
  for (std::size_t i : indices) p.mask[i] = true;
  return p;
}

}  // namespace detail

// The core set is parser score, ASR score, hypothesis length, and EDITED
// count (raw scores; the normalized variants join in the full set).
inline FeaturePreset preset_core() {
  return detail::make_preset("core", {kLength, kParseScoreRaw, kAsrScoreRaw, kEditedCount});
}

inline FeaturePreset preset_core_depth() {
  return detail::make_preset("core+depth",
                             {kLength, kParseScoreRaw, kAsrScoreRaw, kEditedCount, kDepth});
}

inline FeaturePreset preset_core_nc() {
  return detail::make_preset(
      "core+Nc", {kLength, kParseScoreRaw, kAsrScoreRaw, kEditedCount, kTotalConstituents});
}

inline FeaturePreset preset_core_depth_nc() {
  return detail::make_preset("core+depth+Nc", {kLength, kParseScoreRaw, kAsrScoreRaw,
                                               kEditedCount, kDepth, kTotalConstituents});
}

inline FeaturePreset preset_full() {
  FeaturePreset p;
  p.name = "full";
  p.mask.fill(true);
  return p;
}

inline std::vector<FeaturePreset> all_presets() {
  return {preset_core(), preset_core_depth(), preset_core_nc(), preset_core_depth_nc(),
          preset_full()};
}

inline FeaturePreset preset_by_name(std::string_view name) {
  for (FeaturePreset& p : all_presets())
    if (p.name == name) return std::move(p);
  fail("unknown-preset", std::string(name));
}

// Fills the full schema from a hypothesis parse and its scores.
// total_constituents counts non-preterminal internal nodes, EDITED included.
inline SentenceFeatures parse_features(const Tree& tree, double parse_score, double asr_score,
                                       std::size_t n_words) {
  if (tree.yield_size() != n_words)
    fail("yield-mismatch", "tree yield " + std::to_string(tree.yield_size()) + " != n_words " +
                               std::to_string(n_words));
  SentenceFeatures f{};
  const double len = static_cast<double>(n_words);
  f[kLength] = len;
  f[kParseScoreRaw] = parse_score;
  f[kParseScoreNorm] = parse_score / len;
  f[kAsrScoreRaw] = asr_score;
  f[kAsrScoreNorm] = asr_score / len;
  f[kEditedCount] = static_cast<double>(count_label(tree, kEditedLabel));
  f[kDepth] = static_cast<double>(depth(tree));
  f[kTotalConstituents] = static_cast<double>(constituents(tree, false, true).size());
  f[kIntjCount] = static_cast<double>(count_label(tree, "INTJ"));
  f[kNpCount] = static_cast<double>(count_label(tree, "NP"));
  f[kVpCount] = static_cast<double>(count_label(tree, "VP"));
  f[kPpCount] = static_cast<double>(count_label(tree, "PP"));
  return f;
}

inline std::vector<double> apply_preset(const SentenceFeatures& features,
                                        const FeaturePreset& preset) {
  std::vector<double> out;
  out.reserve(preset.arity());
  for (std::size_t i = 0; i < kNumFeatures; ++i)
    if (preset.mask[i]) out.push_back(features[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Pause/duration prosodic scalars (exported for external parser integration;
// not ranker features)

struct WordTiming {
  double start = 0.0;  // seconds
  double end = 0.0;
};

// Mean word duration per case-folded type, with a global fallback.
struct DurationStats {
  std::map<std::string, double> type_mean;
  double global_mean = 0.0;

  double mean_for(std::string_view word) const {
    auto it = type_mean.find(lowercase(word));
    return it == type_mean.end() ? global_mean : it->second;
  }
};

struct PauseDuration {
  double pause_before = 0.0;       // seconds; 0 for the first word
  double pause_after = 0.0;        // seconds; 0 for the last word
  double normalized_duration = 0.0;  // duration / mean duration of the type
};

struct PauseDurationResult {
  std::vector<PauseDuration> values;
  std::size_t clamped = 0;  // negative pauses (overlapping timings) zeroed
};

inline PauseDurationResult pause_duration_features(std::span<const std::string> words,
                                                   std::span<const WordTiming> timings,
                                                   const DurationStats& stats) {
  if (words.size() != timings.size() || words.empty())
    fail("length-mismatch", "got " + std::to_string(words.size()) + " words and " +
                                std::to_string(timings.size()) + " timings");
  for (std::size_t i = 0; i < timings.size(); ++i) {
    if (timings[i].end <= timings[i].start || (i > 0 && timings[i].start < timings[i - 1].start))
      fail("non-monotone-timings", "word " + std::to_string(i));
  }

  PauseDurationResult out;
  out.values.resize(words.size());
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    double pause = timings[i + 1].start - timings[i].end;
    if (pause < 0.0) {
      pause = 0.0;
      ++out.clamped;
    }
    out.values[i].pause_after = pause;
    out.values[i + 1].pause_before = pause;
  }
  for (std::size_t i = 0; i < words.size(); ++i) {
    double mean = stats.mean_for(words[i]);
    out.values[i].normalized_duration = (timings[i].end - timings[i].start) / mean;
  }
  return out;
}

// DurationStats file: `word mean_seconds` lines plus one `__global__` line.
inline constexpr std::string_view kGlobalMeanKey = "__global__";

inline void write_duration_stats(const DurationStats& stats, std::ostream& out) {
  out << kGlobalMeanKey << ' ' << format_double(stats.global_mean) << "\n";
  for (const auto& [word, mean] : stats.type_mean)
    out << word << ' ' << format_double(mean) << "\n";
}

inline DurationStats read_duration_stats(std::istream& in) {
  DurationStats stats;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> tokens = split_ws(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (tokens.size() != 2)
      fail("malformed-record", "duration stats line " + std::to_string(line_no));
    double mean = std::stod(tokens[1]);
    if (mean <= 0.0)
      fail("malformed-record",
           "duration stats line " + std::to_string(line_no) + ": mean must be > 0");
    if (tokens[0] == kGlobalMeanKey)
      stats.global_mean = mean;
    else
      stats.type_mean[lowercase(tokens[0])] = mean;
  }
  if (stats.global_mean <= 0.0)
    fail("malformed-record", "duration stats missing a positive __global__ mean");
  return stats;
}

}  // namespace sprank
