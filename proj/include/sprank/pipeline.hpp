#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sprank/alignment.hpp"
#include "sprank/corpus.hpp"
#include "sprank/features.hpp"
#include "sprank/ranker.hpp"
#include "sprank/score.hpp"
#include "sprank/tree.hpp"
#include "sprank/util.hpp"

namespace sprank {

struct ScoreOptions {
  bool include_edited = false;
  bool include_preterminals = false;
  HeadRules head_rules = default_head_rules();
  int workers = 1;
};

namespace detail {

[[noreturn]] inline void rethrow_with_id(const Error& e, const std::string& id) {
  fail(e.category(), "sentence '" + id + "': " + e.message());
}

}  // namespace detail

// Parses trees, validates yields, and fills features, per-objective target F1,
// and edit counts for every hypothesis. Per-sentence work is an
// order-independent parallel map.
inline std::vector<HypothesisSet> prepare_sets(std::span<const CorpusRecord> records,
                                               const ScoreOptions& options) {
  std::vector<HypothesisSet> sets(records.size());
  parallel_for(records.size(), options.workers, [&](std::size_t r) {
    const CorpusRecord& record = records[r];
    try {
      HypothesisSet set;
      set.id = record.id;
      set.gold = parse_ptb(record.gold_text);
      set.has_transcription_error = record.has_transcription_error;
      const std::vector<std::string> gold_words = set.gold.yield();
      for (const HypothesisRecord& hr : record.hypotheses) {
        Hypothesis h;
        h.words = hr.words;
        h.asr_score = hr.asr_score;
        h.parse = parse_ptb(hr.parse_text);
        h.parse_score = hr.parse_score;
        h.timings = hr.timings;
        if (h.parse.yield_size() != h.words.size())
          fail("yield-mismatch", "hypothesis parse yield " +
                                     std::to_string(h.parse.yield_size()) + " != " +
                                     std::to_string(h.words.size()) + " words");
        h.features = parse_features(h.parse, h.parse_score, h.asr_score, h.words.size());
        AlignmentMap align = word_alignment(gold_words, h.words);
        for (std::size_t o = 0; o < kNumObjectives; ++o) {
          auto objective = static_cast<Objective>(o);
          ScoreConfig cfg =
              make_config(objective, options.include_edited, options.include_preterminals);
          h.target_f1[o] = cfg.mode == ScoreMode::Bracket
                               ? bracket_score(set.gold, h.parse, align, cfg)
                               : dependency_score(set.gold, h.parse, options.head_rules, cfg);
        }
        h.edits = wer(gold_words, h.words);
        h.scored = true;
        set.hypotheses.push_back(std::move(h));
      }
      sets[r] = std::move(set);
    } catch (const Error& e) {
      detail::rethrow_with_id(e, record.id);
    }
  });
  return sets;
}

// ---------------------------------------------------------------------------
// Selection strategies and corpus-level rows

struct SelectionRow {
  std::string name;
  std::vector<std::size_t> selection;  // chosen hypothesis index per set
  std::array<F1Score, kNumObjectives> corpus_f1{};
  std::optional<EditSummary> corpus_edits;
};

inline SelectionRow make_row(std::string name, std::span<const HypothesisSet> sets,
                             std::vector<std::size_t> selection) {
  SelectionRow row;
  row.name = std::move(name);
  row.selection = std::move(selection);
  EditSummary edits;
  for (std::size_t o = 0; o < kNumObjectives; ++o) {
    std::vector<F1Score> per_sentence;
    per_sentence.reserve(sets.size());
    for (std::size_t s = 0; s < sets.size(); ++s)
      per_sentence.push_back(sets[s].hypotheses[row.selection[s]].target_f1[o]);
    row.corpus_f1[o] = corpus_score(per_sentence);
  }
  for (std::size_t s = 0; s < sets.size(); ++s)
    edits += sets[s].hypotheses[row.selection[s]].edits;
  row.corpus_edits = edits;
  return row;
}

inline SelectionRow one_best_row(std::span<const HypothesisSet> sets) {
  return make_row("1-best", sets, std::vector<std::size_t>(sets.size(), 0));
}

// Highest parser output score; ties keep the lower ASR rank.
inline SelectionRow parse_score_row(std::span<const HypothesisSet> sets) {
  std::vector<std::size_t> selection(sets.size(), 0);
  for (std::size_t s = 0; s < sets.size(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sets[s].hypotheses.size(); ++i) {
      if (sets[s].hypotheses[i].parse_score > best) {
        best = sets[s].hypotheses[i].parse_score;
        selection[s] = i;
      }
    }
  }
  return make_row("parse-score", sets, selection);
}

inline SelectionRow oracle_row(std::span<const HypothesisSet> sets, Objective objective) {
  std::vector<std::size_t> selection(sets.size(), 0);
  for (std::size_t s = 0; s < sets.size(); ++s) selection[s] = select_oracle(sets[s], objective);
  return make_row(std::string("oracle-") + objective_name(objective), sets, selection);
}

inline SelectionRow ranker_row(const RankerModel& model, std::span<const HypothesisSet> sets,
                               bool pairwise, int workers, std::string name) {
  std::vector<std::size_t> selection(sets.size(), 0);
  parallel_for(sets.size(), workers, [&](std::size_t s) {
    selection[s] = pairwise ? select_pairwise(model, sets[s]) : select_pointwise(model, sets[s]);
  });
  return make_row(std::move(name), sets, std::move(selection));
}

// Diagonal composite: cell o comes from the per-objective row for o. The
// composite has no single WER (each selection has its own).
inline SelectionRow diagonal_row(std::string name,
                                 std::span<const SelectionRow> per_objective_rows) {
  SelectionRow row;
  row.name = std::move(name);
  for (std::size_t o = 0; o < kNumObjectives; ++o)
    row.corpus_f1[o] = per_objective_rows[o].corpus_f1[o];
  return row;
}

// The model-free strategies: 1-best, parse-score, per-objective oracles, and
// the oracle diagonal.
inline std::vector<SelectionRow> score_corpus(std::span<const HypothesisSet> sets) {
  std::vector<SelectionRow> rows;
  rows.push_back(one_best_row(sets));
  rows.push_back(parse_score_row(sets));
  std::vector<SelectionRow> oracles;
  for (std::size_t o = 0; o < kNumObjectives; ++o)
    oracles.push_back(oracle_row(sets, static_cast<Objective>(o)));
  rows.push_back(diagonal_row("oracle", oracles));
  for (SelectionRow& r : oracles) rows.push_back(std::move(r));
  return rows;
}

// ---------------------------------------------------------------------------
// Ranker training with grid search

inline std::vector<double> default_c_grid() {
  return {0.0005, 0.0001, 0.005, 0.001, 0.05, 0.01, 0.5, 0.1, 1.0, 5.0, 10.0, 50.0, 100.0};
}

struct GridOptions {
  std::vector<double> c_grid = default_c_grid();
  std::size_t trials = 5;  // seeds base_seed .. base_seed + trials - 1
  std::uint64_t base_seed = 1;
  std::vector<FeaturePreset> presets = all_presets();
  std::vector<Objective> objectives = {Objective::UnlabeledDep, Objective::UnlabeledBrk,
                                       Objective::LabeledDep, Objective::LabeledBrk};
  RankerKind kind = RankerKind::Logistic;
  std::size_t epochs = 500;
  double learning_rate = 0.5;
  std::size_t random_pairs = 10;
  int workers = 1;
};

struct GridCell {
  Objective objective = Objective::LabeledBrk;
  std::string preset;
  double C = 1.0;
  std::uint64_t seed = 0;
  double dev_f1_pointwise = 0.0;
  double dev_f1_pairwise = 0.0;

  double best() const { return std::max(dev_f1_pointwise, dev_f1_pairwise); }
};

struct TrainedRanker {
  RankerModel model;
  GridCell cell;
  bool pairwise_preferred = false;
};

struct TrainOutcome {
  std::vector<TrainedRanker> best;  // one per requested objective, in order
  std::vector<GridCell> log;        // every cell, in canonical grid order
};

namespace detail {

inline std::vector<PairSample> corpus_pairs(std::span<const HypothesisSet> sets,
                                            Objective objective, const FeaturePreset& preset,
                                            std::uint64_t seed, std::size_t random_pairs) {
  std::vector<PairSample> samples;
  for (const HypothesisSet& set : sets) {
    std::vector<PairSample> s = build_pairs(set, objective, preset, seed, random_pairs);
    samples.insert(samples.end(), std::make_move_iterator(s.begin()),
                   std::make_move_iterator(s.end()));
  }
  return samples;
}

}  // namespace detail

// Grid search per objective over (preset, seed, C); each cell is trained on
// the training sets and evaluated on the dev sets with both ranking methods.
// The winner is the cell (first in grid order on ties) with the higher of the
// two dev F1 values for its objective.
inline TrainOutcome train_command(std::span<const HypothesisSet> train_sets,
                                  std::span<const HypothesisSet> dev_sets,
                                  const GridOptions& options) {
  if (train_sets.empty() || dev_sets.empty()) fail("empty-corpus", "train and dev must be non-empty");

  struct CellSpec {
    Objective objective;
    const FeaturePreset* preset;
    std::uint64_t seed;
    double C;
  };
  std::vector<CellSpec> specs;
  for (Objective objective : options.objectives)
    for (const FeaturePreset& preset : options.presets)
      for (std::size_t t = 0; t < options.trials; ++t)
        for (double C : options.c_grid)
          specs.push_back({objective, &preset, options.base_seed + t, C});

  std::vector<GridCell> cells(specs.size());
  parallel_for(specs.size(), options.workers, [&](std::size_t i) {
    const CellSpec& spec = specs[i];
    std::vector<PairSample> samples = detail::corpus_pairs(
        train_sets, spec.objective, *spec.preset, spec.seed, options.random_pairs);
    if (samples.empty())
      fail("empty-training-set", "no hypothesis pairs for objective " +
                                     std::string(objective_name(spec.objective)) +
                                     " (every set has < 2 hypotheses)");
    TrainOptions topt;
    topt.kind = options.kind;
    topt.C = spec.C;
    topt.epochs = options.epochs;
    topt.learning_rate = options.learning_rate;
    RankerModel model = train(samples, spec.objective, *spec.preset, topt);

    GridCell cell;
    cell.objective = spec.objective;
    cell.preset = spec.preset->name;
    cell.C = spec.C;
    cell.seed = spec.seed;
    const std::size_t o = static_cast<std::size_t>(spec.objective);
    cell.dev_f1_pointwise = ranker_row(model, dev_sets, false, 1, "point").corpus_f1[o].f1;
    cell.dev_f1_pairwise = ranker_row(model, dev_sets, true, 1, "pair").corpus_f1[o].f1;
    cells[i] = cell;
  });

  TrainOutcome outcome;
  outcome.log = cells;
  for (Objective objective : options.objectives) {
    std::ptrdiff_t best_at = -1;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (specs[i].objective != objective) continue;
      if (best_at < 0 || cells[i].best() > cells[static_cast<std::size_t>(best_at)].best())
        best_at = static_cast<std::ptrdiff_t>(i);
    }
    const CellSpec& spec = specs[static_cast<std::size_t>(best_at)];
    std::vector<PairSample> samples = detail::corpus_pairs(
        train_sets, spec.objective, *spec.preset, spec.seed, options.random_pairs);
    TrainOptions topt;
    topt.kind = options.kind;
    topt.C = spec.C;
    topt.epochs = options.epochs;
    topt.learning_rate = options.learning_rate;
    TrainedRanker trained;
    trained.model = train(samples, spec.objective, *spec.preset, topt);
    trained.cell = cells[static_cast<std::size_t>(best_at)];
    trained.pairwise_preferred = trained.cell.dev_f1_pairwise > trained.cell.dev_f1_pointwise;
    outcome.best.push_back(std::move(trained));
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Report: %delta (relative improvement over the baseline) and %gap (share of
// the oracle-baseline gap recovered)

inline std::optional<double> relative_improvement_pct(double baseline, double system) {
  if (baseline == 0.0) return std::nullopt;
  return (system - baseline) / baseline * 100.0;
}

inline std::optional<double> gap_recovered_pct(double baseline, double system, double oracle) {
  if (oracle == baseline) return std::nullopt;
  return (system - baseline) / (oracle - baseline) * 100.0;
}

struct ReportRow {
  std::string system;
  std::array<double, kNumObjectives> f1{};
  std::optional<double> wer;
  // Filled relative to the baseline/oracle rows; absent where undefined.
  std::array<std::optional<double>, kNumObjectives> delta_pct;
  std::array<std::optional<double>, kNumObjectives> gap_pct;
};

// ---------------------------------------------------------------------------
// Summary JSON (machine-readable output of score/rerank, input of report)

inline constexpr std::string_view kSummaryFormat = "sprank-summary";

namespace detail {

inline nlohmann::json f1_to_json(const F1Score& s) {
  return {{"matched", s.matched}, {"gold", s.gold_count},   {"pred", s.pred_count},
          {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

inline nlohmann::json edits_to_json(const EditSummary& e) {
  return {{"substitutions", e.substitutions},
          {"insertions", e.insertions},
          {"deletions", e.deletions},
          {"reference_length", e.reference_length},
          {"wer", e.wer}};
}

}  // namespace detail

inline nlohmann::json summary_to_json(std::span<const SelectionRow> rows,
                                      const ScoreOptions& options) {
  nlohmann::json jrows = nlohmann::json::array();
  for (const SelectionRow& row : rows) {
    nlohmann::json jf1;
    for (std::size_t o = 0; o < kNumObjectives; ++o)
      jf1[objective_name(static_cast<Objective>(o))] = detail::f1_to_json(row.corpus_f1[o]);
    nlohmann::json jrow{{"system", row.name}, {"f1", std::move(jf1)}};
    if (row.corpus_edits) jrow["wer"] = detail::edits_to_json(*row.corpus_edits);
    jrows.push_back(std::move(jrow));
  }
  return nlohmann::json{{"format", std::string(kSummaryFormat)},
                        {"version", 1},
                        {"config",
                         {{"include_edited", options.include_edited},
                          {"include_preterminals", options.include_preterminals}}},
                        {"rows", std::move(jrows)}};
}

inline std::vector<ReportRow> rows_from_summary(const nlohmann::json& summary) {
  if (!summary.contains("format") || summary.at("format") != kSummaryFormat)
    fail("malformed-record", "not a sprank summary");
  std::vector<ReportRow> rows;
  for (const nlohmann::json& jrow : summary.at("rows")) {
    ReportRow row;
    row.system = jrow.at("system").get<std::string>();
    for (std::size_t o = 0; o < kNumObjectives; ++o) {
      const char* name = objective_name(static_cast<Objective>(o));
      row.f1[o] = jrow.at("f1").contains(name) ? jrow.at("f1").at(name).at("f1").get<double>()
                                               : std::numeric_limits<double>::quiet_NaN();
    }
    if (jrow.contains("wer")) row.wer = jrow.at("wer").at("wer").get<double>();
    rows.push_back(std::move(row));
  }
  return rows;
}

// Computes the percentage columns for every row against the named baseline
// and oracle rows.
inline std::vector<ReportRow> compute_report(std::vector<ReportRow> rows,
                                             const std::string& baseline_name,
                                             const std::string& oracle_name) {
  const ReportRow* baseline = nullptr;
  const ReportRow* oracle = nullptr;
  for (const ReportRow& row : rows) {
    if (row.system == baseline_name) baseline = &row;
    if (row.system == oracle_name) oracle = &row;
  }
  if (baseline == nullptr) fail("missing-row", "baseline row '" + baseline_name + "' not found");
  for (ReportRow& row : rows) {
    if (row.system == baseline_name) continue;
    for (std::size_t o = 0; o < kNumObjectives; ++o) {
      if (std::isnan(row.f1[o]) || std::isnan(baseline->f1[o])) continue;
      row.delta_pct[o] = relative_improvement_pct(baseline->f1[o], row.f1[o]);
      if (oracle != nullptr && !std::isnan(oracle->f1[o]))
        row.gap_pct[o] = gap_recovered_pct(baseline->f1[o], row.f1[o], oracle->f1[o]);
    }
  }
  return rows;
}

inline nlohmann::json report_to_json(std::span<const ReportRow> rows) {
  nlohmann::json jrows = nlohmann::json::array();
  auto opt_array = [](const std::array<std::optional<double>, kNumObjectives>& vals) {
    nlohmann::json out;
    for (std::size_t o = 0; o < kNumObjectives; ++o) {
      const char* name = objective_name(static_cast<Objective>(o));
      if (vals[o])
        out[name] = *vals[o];
      else
        out[name] = nullptr;
    }
    return out;
  };
  for (const ReportRow& row : rows) {
    nlohmann::json jf1;
    for (std::size_t o = 0; o < kNumObjectives; ++o)
      jf1[objective_name(static_cast<Objective>(o))] = row.f1[o];
    nlohmann::json jrow{{"system", row.system},
                        {"f1", std::move(jf1)},
                        {"delta_pct", opt_array(row.delta_pct)},
                        {"gap_pct", opt_array(row.gap_pct)}};
    if (row.wer) jrow["wer"] = *row.wer;
    jrows.push_back(std::move(jrow));
  }
  return nlohmann::json{{"format", "sprank-report"}, {"version", 1}, {"rows", std::move(jrows)}};
}

inline void render_report(std::span<const ReportRow> rows, std::ostream& out) {
  char buf[256];
  auto cell = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%8.3f", v);
    return std::string(buf);
  };
  auto pct_cell = [&](const std::optional<double>& v) {
    if (!v) return std::string("       —");
    std::snprintf(buf, sizeof(buf), "%7.2f%%", *v);
    return std::string(buf);
  };
  std::snprintf(buf, sizeof(buf), "%-30s%8s%8s%8s%8s%8s", "system", "u-dep", "u-brk", "l-dep",
                "l-brk", "WER");
  out << buf << "\n";
  for (const ReportRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-30s", row.system.c_str());
    out << buf;
    for (std::size_t o = 0; o < kNumObjectives; ++o)
      out << (std::isnan(row.f1[o]) ? std::string("       —") : cell(row.f1[o]));
    out << (row.wer ? cell(*row.wer) : std::string("       —")) << "\n";
  }
  bool any_pct = false;
  for (const ReportRow& row : rows) {
    bool has = false;
    for (std::size_t o = 0; o < kNumObjectives; ++o)
      if (row.delta_pct[o] || row.gap_pct[o]) has = true;
    if (!has) continue;
    any_pct = true;
    std::snprintf(buf, sizeof(buf), "%-30s", ("%delta " + row.system).c_str());
    out << buf;
    for (std::size_t o = 0; o < kNumObjectives; ++o) out << pct_cell(row.delta_pct[o]);
    out << "\n";
    std::snprintf(buf, sizeof(buf), "%-30s", ("%gap " + row.system).c_str());
    out << buf;
    for (std::size_t o = 0; o < kNumObjectives; ++o) out << pct_cell(row.gap_pct[o]);
    out << "\n";
  }
  if (any_pct)
    out << "note: percentage columns are computed from the F1 values shown; when those\n"
           "values were rounded for reporting, the percentages can shift by a few tenths\n"
           "of a point relative to percentages computed on unrounded scores.\n";
}

// ---------------------------------------------------------------------------
// Selections file: `id<TAB>index` lines under a versioned header.

inline constexpr std::string_view kSelectionsHeader = "sprank-selections v1";

inline void write_selections(std::span<const HypothesisSet> sets,
                             std::span<const std::size_t> selection, std::ostream& out) {
  out << kSelectionsHeader << "\n";
  for (std::size_t s = 0; s < sets.size(); ++s)
    out << sets[s].id << "\t" << selection[s] << "\n";
}

inline std::vector<std::pair<std::string, std::size_t>> read_selections(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSelectionsHeader)
    fail("malformed-record", "missing selections header");
  std::vector<std::pair<std::string, std::size_t>> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) fail("malformed-record", "selections line without tab");
    out.emplace_back(line.substr(0, tab), std::stoul(line.substr(tab + 1)));
  }
  return out;
}

// Validates a selections list against prepared sets (same ids, same order).
inline std::vector<std::size_t> selection_for_sets(
    std::span<const HypothesisSet> sets,
    std::span<const std::pair<std::string, std::size_t>> selections) {
  if (selections.size() != sets.size())
    fail("selection-length-mismatch", "expected " + std::to_string(sets.size()) + " entries, got " +
                                          std::to_string(selections.size()));
  std::vector<std::size_t> out(sets.size());
  for (std::size_t s = 0; s < sets.size(); ++s) {
    if (selections[s].first != sets[s].id)
      fail("selection-length-mismatch",
           "id mismatch at line " + std::to_string(s + 2) + ": '" + selections[s].first +
               "' vs '" + sets[s].id + "'");
    if (selections[s].second >= sets[s].hypotheses.size())
      fail("selection-length-mismatch", "index out of range for '" + sets[s].id + "'");
    out[s] = selections[s].second;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Analysis: transcription-error subsets and changed-word classification

struct SubsetStats {
  std::size_t sentences = 0;
  std::array<F1Score, kNumObjectives> f1_a{};
  std::array<F1Score, kNumObjectives> f1_b{};
  EditSummary edits_a;
  EditSummary edits_b;
};

struct ChangeStats {
  std::size_t sentences = 0;
  std::size_t changed_tokens = 0;
  std::size_t function_tokens = 0;

  std::optional<double> function_proportion() const {
    if (changed_tokens == 0) return std::nullopt;
    return static_cast<double>(function_tokens) / static_cast<double>(changed_tokens);
  }
};

struct AnalysisResult {
  SubsetStats with_error;
  SubsetStats without_error;
  std::size_t changed_sentences = 0;
  ChangeStats wer_improved;   // system b beat system a on WER
  ChangeStats wer_degraded;
  ChangeStats wer_unchanged;
};

inline AnalysisResult analyze(std::span<const HypothesisSet> sets,
                              std::span<const std::size_t> selection_a,
                              std::span<const std::size_t> selection_b,
                              const std::set<std::string>& function_words) {
  if (selection_a.size() != sets.size() || selection_b.size() != sets.size())
    fail("selection-length-mismatch", "selection vectors must cover the corpus");

  AnalysisResult result;
  std::array<std::vector<F1Score>, kNumObjectives> with_a, with_b, without_a, without_b;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const Hypothesis& a = sets[s].hypotheses[selection_a[s]];
    const Hypothesis& b = sets[s].hypotheses[selection_b[s]];
    SubsetStats& subset = sets[s].has_transcription_error ? result.with_error : result.without_error;
    auto& fa = sets[s].has_transcription_error ? with_a : without_a;
    auto& fb = sets[s].has_transcription_error ? with_b : without_b;
    ++subset.sentences;
    for (std::size_t o = 0; o < kNumObjectives; ++o) {
      fa[o].push_back(a.target_f1[o]);
      fb[o].push_back(b.target_f1[o]);
    }
    subset.edits_a += a.edits;
    subset.edits_b += b.edits;

    if (selection_a[s] == selection_b[s]) continue;
    ++result.changed_sentences;
    ChangeStats& bucket = b.edits.wer < a.edits.wer
                              ? result.wer_improved
                              : (b.edits.wer > a.edits.wer ? result.wer_degraded
                                                           : result.wer_unchanged);
    ++bucket.sentences;
    std::vector<bool> matched_a(a.words.size(), false), matched_b(b.words.size(), false);
    for (const MatchingBlock& block : matching_blocks(a.words, b.words))
      for (std::size_t k = 0; k < block.length; ++k) {
        matched_a[block.a_start + k] = true;
        matched_b[block.b_start + k] = true;
      }
    auto classify = [&](const std::vector<std::string>& words, const std::vector<bool>& matched) {
      for (std::size_t i = 0; i < words.size(); ++i) {
        if (matched[i]) continue;
        ++bucket.changed_tokens;
        if (function_words.count(lowercase(words[i]))) ++bucket.function_tokens;
      }
    };
    classify(a.words, matched_a);
    classify(b.words, matched_b);
  }
  for (std::size_t o = 0; o < kNumObjectives; ++o) {
    result.with_error.f1_a[o] = corpus_score(with_a[o]);
    result.with_error.f1_b[o] = corpus_score(with_b[o]);
    result.without_error.f1_a[o] = corpus_score(without_a[o]);
    result.without_error.f1_b[o] = corpus_score(without_b[o]);
  }
  return result;
}

inline nlohmann::json analysis_to_json(const AnalysisResult& r) {
  auto subset = [](const SubsetStats& s) {
    nlohmann::json fa, fb;
    for (std::size_t o = 0; o < kNumObjectives; ++o) {
      const char* name = objective_name(static_cast<Objective>(o));
      fa[name] = detail::f1_to_json(s.f1_a[o]);
      fb[name] = detail::f1_to_json(s.f1_b[o]);
    }
    return nlohmann::json{{"sentences", s.sentences},
                          {"a", {{"f1", std::move(fa)}, {"wer", detail::edits_to_json(s.edits_a)}}},
                          {"b", {{"f1", std::move(fb)}, {"wer", detail::edits_to_json(s.edits_b)}}}};
  };
  auto change = [](const ChangeStats& c) {
    nlohmann::json out{{"sentences", c.sentences},
                       {"changed_tokens", c.changed_tokens},
                       {"function_tokens", c.function_tokens}};
    if (auto p = c.function_proportion())
      out["function_proportion"] = *p;
    else
      out["function_proportion"] = nullptr;
    return out;
  };
  return nlohmann::json{{"format", "sprank-analysis"},
                        {"version", 1},
                        {"with_error", subset(r.with_error)},
                        {"without_error", subset(r.without_error)},
                        {"changed_sentences", r.changed_sentences},
                        {"wer_improved", change(r.wer_improved)},
                        {"wer_degraded", change(r.wer_degraded)},
                        {"wer_unchanged", change(r.wer_unchanged)}};
}

// Per-sentence F1/WER table, one line per (strategy, sentence).
inline void write_per_sentence_tsv(std::span<const HypothesisSet> sets,
                                   std::span<const SelectionRow> rows, std::ostream& out) {
  out << "id\tsystem\thyp_index\tf1_unlabeled_dep\tf1_unlabeled_brk\tf1_labeled_dep\t"
         "f1_labeled_brk\twer\n";
  for (const SelectionRow& row : rows) {
    if (row.selection.size() != sets.size()) continue;  // composites have no selection
    for (std::size_t s = 0; s < sets.size(); ++s) {
      const Hypothesis& h = sets[s].hypotheses[row.selection[s]];
      out << sets[s].id << "\t" << row.name << "\t" << row.selection[s];
      for (std::size_t o = 0; o < kNumObjectives; ++o)
        out << "\t" << format_double(h.target_f1[o].f1);
      out << "\t" << format_double(h.edits.wer) << "\n";
    }
  }
}

}  // namespace sprank
