#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "sprank/alignment.hpp"
#include "sprank/tree.hpp"
#include "sprank/util.hpp"

namespace sprank {

// Micro-averageable F1: counts are the ground truth, the ratios derived.
struct F1Score {
  std::size_t matched = 0;
  std::size_t gold_count = 0;
  std::size_t pred_count = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static F1Score from_counts(std::size_t matched, std::size_t gold_count,
                             std::size_t pred_count) {
    F1Score s;
    s.matched = matched;
    s.gold_count = gold_count;
    s.pred_count = pred_count;
    s.precision = pred_count == 0 ? 0.0 : static_cast<double>(matched) / pred_count;
    s.recall = gold_count == 0 ? 0.0 : static_cast<double>(matched) / gold_count;
    s.f1 = (s.precision + s.recall) == 0.0
               ? 0.0
               : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
  }
};

enum class ScoreMode { Bracket, Dependency };

struct ScoreConfig {
  bool labeled = true;
  ScoreMode mode = ScoreMode::Bracket;
  bool include_edited = false;       // SParseval default: EDITED nodes not scored
  bool include_preterminals = false; // EVALB convention
};

// The four reporting objectives: {unlabeled, labeled} x {dependency, bracket}.
enum class Objective {
  UnlabeledDep = 0,
  UnlabeledBrk = 1,
  LabeledDep = 2,
  LabeledBrk = 3,
};

inline constexpr std::size_t kNumObjectives = 4;

inline const char* objective_name(Objective o) {
  switch (o) {
    case Objective::UnlabeledDep: return "unlabeled-dep";
    case Objective::UnlabeledBrk: return "unlabeled-brk";
    case Objective::LabeledDep: return "labeled-dep";
    case Objective::LabeledBrk: return "labeled-brk";
  }
  return "?";
}

inline Objective objective_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumObjectives; ++i) {
    auto o = static_cast<Objective>(i);
    if (name == objective_name(o)) return o;
  }
  fail("unknown-objective", std::string(name));
}

inline ScoreConfig make_config(Objective o, bool include_edited = false,
                               bool include_preterminals = false) {
  ScoreConfig cfg;
  cfg.labeled = o == Objective::LabeledDep || o == Objective::LabeledBrk;
  cfg.mode = (o == Objective::UnlabeledDep || o == Objective::LabeledDep)
                 ? ScoreMode::Dependency
                 : ScoreMode::Bracket;
  cfg.include_edited = include_edited;
  cfg.include_preterminals = include_preterminals;
  return cfg;
}

namespace detail {

// Multiset intersection size: each gold element matches at most one pred.
template <typename T>
std::size_t multiset_matched(const std::vector<T>& gold, const std::vector<T>& pred) {
  std::map<T, std::size_t> counts;
  for (const T& g : gold) ++counts[g];
  std::size_t matched = 0;
  for (const T& p : pred) {
    auto it = counts.find(p);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++matched;
    }
  }
  return matched;
}

}  // namespace detail

// Bracket F1 under a word alignment. Predicted spans are projected into gold
// index space: (l, a, b) -> (l, map(a), map(b-1)+1) when both endpoint words
// are aligned; spans with an unaligned endpoint cannot match and only lower
// precision. Matching is multiset one-to-one.
inline F1Score bracket_score(const Tree& gold, const Tree& pred, const AlignmentMap& align,
                             const ScoreConfig& config) {
  const std::size_t gold_n = gold.yield_size();
  const std::size_t pred_n = pred.yield_size();
  for (std::size_t i = 0; i < align.domain_size(); ++i) {
    if (auto g = align.map(i)) {
      if (i >= pred_n || *g >= gold_n)
        fail("alignment-out-of-range",
             "pair " + std::to_string(i) + "->" + std::to_string(*g) + " outside yields " +
                 std::to_string(pred_n) + "/" + std::to_string(gold_n));
    }
  }

  std::vector<Constituent> gold_tuples =
      constituents(gold, config.include_preterminals, config.include_edited);
  std::vector<Constituent> pred_tuples =
      constituents(pred, config.include_preterminals, config.include_edited);

  using Key = std::tuple<std::string, std::size_t, std::size_t>;
  std::vector<Key> gold_keys, projected;
  gold_keys.reserve(gold_tuples.size());
  for (const Constituent& c : gold_tuples)
    gold_keys.emplace_back(config.labeled ? c.label : std::string{}, c.start, c.end);
  for (const Constituent& c : pred_tuples) {
    auto a = align.map(c.start);
    auto b = align.map(c.end - 1);
    if (!a || !b) continue;
    projected.emplace_back(config.labeled ? c.label : std::string{}, *a, *b + 1);
  }

  return F1Score::from_counts(detail::multiset_matched(gold_keys, projected), gold_tuples.size(),
                              pred_tuples.size());
}

// Dependency F1 over head-percolated tuples; needs no word alignment. With
// EDITED excluded, whole EDITED subtrees are pruned before percolation.
inline F1Score dependency_score(const Tree& gold, const Tree& pred, const HeadRules& rules,
                                const ScoreConfig& config) {
  auto tuples = [&](const Tree& t) -> std::vector<DependencyTuple> {
    if (config.include_edited) return dependencies(t, rules);
    auto pruned = prune_subtrees(t, kEditedLabel);
    if (!pruned) return {};
    return dependencies(*pruned, rules);
  };
  std::vector<DependencyTuple> gold_deps = tuples(gold);
  std::vector<DependencyTuple> pred_deps = tuples(pred);

  std::size_t matched;
  if (config.labeled) {
    matched = detail::multiset_matched(gold_deps, pred_deps);
  } else {
    using Pair = std::pair<std::string, std::string>;
    std::vector<Pair> g, p;
    g.reserve(gold_deps.size());
    p.reserve(pred_deps.size());
    for (const auto& d : gold_deps) g.emplace_back(d.head, d.dependent);
    for (const auto& d : pred_deps) p.emplace_back(d.head, d.dependent);
    matched = detail::multiset_matched(g, p);
  }
  return F1Score::from_counts(matched, gold_deps.size(), pred_deps.size());
}

// Micro average: sum counts, recompute the ratios.
inline F1Score corpus_score(std::span<const F1Score> per_sentence) {
  std::size_t matched = 0, gold = 0, pred = 0;
  for (const F1Score& s : per_sentence) {
    matched += s.matched;
    gold += s.gold_count;
    pred += s.pred_count;
  }
  return F1Score::from_counts(matched, gold, pred);
}

}  // namespace sprank
