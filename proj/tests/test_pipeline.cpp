#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "sprank/corpus.hpp"
#include "sprank/pipeline.hpp"
#include "test_support.hpp"

using namespace sprank;

namespace {

CorpusRecord simple_record(std::string id, bool gold_first = true) {
  CorpusRecord r;
  r.id = std::move(id);
  r.gold_text = "(S (NP (PRP i)) (VP (VBP like) (NP (NN music))))";
  HypothesisRecord good;
  good.words = {"i", "like", "music"};
  good.asr_score = -10.0;
  good.parse_text = r.gold_text;
  good.parse_score = -5.0;
  HypothesisRecord bad;
  bad.words = {"i", "like", "the", "music"};
  bad.asr_score = -12.0;
  bad.parse_text = "(S (NP (PRP i)) (VP (VBP like) (NP (DT the) (NN music))))";
  bad.parse_score = -4.0;  // parse score prefers the wrong hypothesis
  if (gold_first) {
    r.hypotheses = {good, bad};
  } else {
    r.hypotheses = {bad, good};
  }
  return r;
}

}  // namespace

TEST_CASE("corpus ingest round trips byte-stably", "[pipeline]") {
  std::vector<CorpusRecord> records = {simple_record("a"), simple_record("b", false)};
  records[1].hypotheses[0].timings = std::vector<WordTiming>{
      {0.0, 0.4}, {0.4, 0.8}, {0.9, 1.1}, {1.1, 1.6}};
  std::ostringstream first;
  write_corpus(records, first);
  std::istringstream in(first.str());
  IngestResult loaded = ingest_stream(in, true);
  REQUIRE(loaded.records.size() == 2);
  std::ostringstream second;
  write_corpus(loaded.records, second);
  CHECK(first.str() == second.str());
  CHECK(loaded.records[1].hypotheses[0].timings.has_value());
}

TEST_CASE("ingest validates records", "[pipeline]") {
  std::string header = R"({"format":"sprank-corpus","version":1})";
  auto run = [&](const std::string& line, bool strict) {
    std::istringstream in(header + "\n" + line + "\n");
    return ingest_stream(in, strict);
  };
  const std::string no_hyps =
      R"j({"id":"x","gold":"(S (X a))","trans_err":false,"hyps":[]})j";
  CHECK_THROWS_MATCHES(run(no_hyps, true), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.category() == "malformed-record"; }));
  IngestResult lenient = run(no_hyps, false);
  CHECK(lenient.records.empty());
  CHECK(lenient.skipped.size() == 1);

  // duplicate ids rejected
  std::vector<CorpusRecord> dup = {simple_record("same"), simple_record("same")};
  std::ostringstream out;
  write_corpus(dup, out);
  std::istringstream in(out.str());
  CHECK_THROWS_AS(ingest_stream(in, true), Error);

  // more than 10 hypotheses rejected
  CorpusRecord big = simple_record("big");
  while (big.hypotheses.size() <= kMaxHypotheses) big.hypotheses.push_back(big.hypotheses[0]);
  std::ostringstream out2;
  write_corpus(std::vector<CorpusRecord>{big}, out2);
  std::istringstream in2(out2.str());
  CHECK_THROWS_AS(ingest_stream(in2, true), Error);

  CHECK_THROWS_MATCHES(ingest("/nonexistent/corpus.jsonl", true), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.category() == "file-not-found"; }));
  std::istringstream empty("");
  CHECK_THROWS_AS(ingest_stream(empty, true), Error);
}

TEST_CASE("a ten-hypothesis record round trips", "[pipeline]") {
  CorpusRecord r = simple_record("ten");
  while (r.hypotheses.size() < kMaxHypotheses) r.hypotheses.push_back(r.hypotheses[1]);
  std::ostringstream out;
  write_corpus(std::vector<CorpusRecord>{r}, out);
  std::istringstream in(out.str());
  IngestResult loaded = ingest_stream(in, true);
  REQUIRE(loaded.records.size() == 1);
  CHECK(loaded.records[0].hypotheses.size() == kMaxHypotheses);
}

TEST_CASE("prepare_sets scores hypotheses and surfaces ids in errors", "[pipeline]") {
  std::vector<CorpusRecord> records = {simple_record("r0")};
  std::vector<HypothesisSet> sets = prepare_sets(records, {});
  REQUIRE(sets.size() == 1);
  REQUIRE(sets[0].hypotheses.size() == 2);
  const std::size_t lb = static_cast<std::size_t>(Objective::LabeledBrk);
  CHECK(sets[0].hypotheses[0].target_f1[lb].f1 == 1.0);
  CHECK(sets[0].hypotheses[0].edits.wer == 0.0);
  CHECK(sets[0].hypotheses[1].target_f1[lb].f1 == 0.75);
  CHECK(sets[0].hypotheses[1].edits.insertions == 1);

  CorpusRecord broken = simple_record("r1");
  broken.hypotheses[0].words = {"too", "few"};
  std::vector<CorpusRecord> bad = {broken};
  try {
    prepare_sets(bad, {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == "yield-mismatch");
    CHECK(e.message().find("r1") != std::string::npos);
  }
}

TEST_CASE("score_corpus: perfect first hypothesis gives a perfect 1-best row", "[pipeline]") {
  std::vector<CorpusRecord> records = {simple_record("a"), simple_record("b")};
  std::vector<HypothesisSet> sets = prepare_sets(records, {});
  std::vector<SelectionRow> rows = score_corpus(sets);
  const SelectionRow& one_best = rows[0];
  REQUIRE(one_best.name == "1-best");
  for (std::size_t o = 0; o < kNumObjectives; ++o) CHECK(one_best.corpus_f1[o].f1 == 1.0);
  CHECK(one_best.corpus_edits->wer == 0.0);
}

TEST_CASE("parse-score selection can fall below 1-best", "[pipeline]") {
  std::vector<CorpusRecord> records = {simple_record("a"), simple_record("b")};
  std::vector<HypothesisSet> sets = prepare_sets(records, {});
  SelectionRow parse = parse_score_row(sets);
  SelectionRow one_best = one_best_row(sets);
  const std::size_t lb = static_cast<std::size_t>(Objective::LabeledBrk);
  CHECK(parse.corpus_f1[lb].f1 < one_best.corpus_f1[lb].f1);
}

TEST_CASE("oracle rows dominate every other row", "[pipeline]") {
  // substitution-only corpora: equal tuple counts per sentence make the
  // per-sentence oracle provably corpus-optimal
  std::vector<CorpusRecord> records =
      testsup::synthetic_corpus({.sentences = 40, .seed = 71, .substitutions_only = true});
  std::vector<HypothesisSet> sets = prepare_sets(records, {});
  std::vector<SelectionRow> rows = score_corpus(sets);
  const SelectionRow* oracle = nullptr;
  for (const SelectionRow& r : rows)
    if (r.name == "oracle") oracle = &r;
  REQUIRE(oracle != nullptr);
  for (const SelectionRow& r : rows) {
    if (r.name.rfind("oracle", 0) == 0) continue;  // per-objective oracle variants
    for (std::size_t o = 0; o < kNumObjectives; ++o)
      CHECK(oracle->corpus_f1[o].f1 >= r.corpus_f1[o].f1 - 1e-12);
  }
}

TEST_CASE("subset scores recombine to the corpus score", "[pipeline]") {
  std::vector<CorpusRecord> records =
      testsup::synthetic_corpus({.sentences = 30, .seed = 72});
  std::vector<HypothesisSet> sets = prepare_sets(records, {});
  std::vector<std::size_t> ones(sets.size(), 0);
  AnalysisResult analysis = analyze(sets, ones, ones, {});
  SelectionRow whole = one_best_row(sets);
  for (std::size_t o = 0; o < kNumObjectives; ++o) {
    const F1Score& w = analysis.with_error.f1_a[o];
    const F1Score& wo = analysis.without_error.f1_a[o];
    F1Score joined = F1Score::from_counts(w.matched + wo.matched, w.gold_count + wo.gold_count,
                                          w.pred_count + wo.pred_count);
    CHECK(joined.f1 == whole.corpus_f1[o].f1);
  }
}

TEST_CASE("train_command errors on a corpus without pairs", "[pipeline]") {
  CorpusRecord lonely = simple_record("only");
  lonely.hypotheses.resize(1);
  std::vector<CorpusRecord> records = {lonely};
  std::vector<HypothesisSet> sets = prepare_sets(records, {});
  GridOptions grid;
  grid.c_grid = {1.0};
  grid.trials = 1;
  grid.presets = {preset_core()};
  grid.objectives = {Objective::LabeledBrk};
  try {
    train_command(sets, sets, grid);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == "empty-training-set");
    CHECK(e.message().find("labeled-brk") != std::string::npos);
  }
}

TEST_CASE("train_command fills the full grid log deterministically", "[pipeline]") {
  std::vector<CorpusRecord> records =
      testsup::synthetic_corpus({.sentences = 20, .seed = 73});
  std::vector<HypothesisSet> sets = prepare_sets(records, {});
  GridOptions grid;
  grid.c_grid = {0.1, 10.0};
  grid.trials = 2;
  grid.presets = {preset_core(), preset_full()};
  grid.objectives = {Objective::LabeledBrk, Objective::UnlabeledDep};
  grid.epochs = 120;

  TrainOutcome a = train_command(sets, sets, grid);
  CHECK(a.log.size() == 2 * 2 * 2 * 2);  // objectives x presets x trials x C
  REQUIRE(a.best.size() == 2);
  CHECK(a.best[0].model.objective == Objective::LabeledBrk);
  CHECK(a.best[1].model.objective == Objective::UnlabeledDep);

  grid.workers = 4;
  TrainOutcome b = train_command(sets, sets, grid);
  REQUIRE(b.log.size() == a.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].dev_f1_pointwise == b.log[i].dev_f1_pointwise);
    CHECK(a.log[i].dev_f1_pairwise == b.log[i].dev_f1_pairwise);
  }
  CHECK(save_model(a.best[0].model) == save_model(b.best[0].model));
  CHECK(save_model(a.best[1].model) == save_model(b.best[1].model));
}

TEST_CASE("full C grid with five seeds selects one best cell deterministically", "[pipeline]") {
  CHECK(default_c_grid() == std::vector<double>{0.0005, 0.0001, 0.005, 0.001, 0.05, 0.01, 0.5,
                                                0.1, 1.0, 5.0, 10.0, 50.0, 100.0});
  std::vector<CorpusRecord> records =
      testsup::synthetic_corpus({.sentences = 15, .seed = 74});
  std::vector<HypothesisSet> sets = prepare_sets(records, {});
  GridOptions grid;  // default 13-value C grid
  grid.trials = 5;
  grid.presets = {preset_core()};
  grid.objectives = {Objective::LabeledBrk};
  grid.epochs = 80;
  grid.workers = 4;
  TrainOutcome a = train_command(sets, sets, grid);
  TrainOutcome b = train_command(sets, sets, grid);
  CHECK(a.log.size() == 13 * 5);
  CHECK(a.best[0].cell.C == b.best[0].cell.C);
  CHECK(a.best[0].cell.seed == b.best[0].cell.seed);
  CHECK(a.best[0].cell.preset == b.best[0].cell.preset);
  CHECK(save_model(a.best[0].model) == save_model(b.best[0].model));
}

TEST_CASE("report percentages and guards", "[pipeline]") {
  CHECK(relative_improvement_pct(0.676, 0.690).value() == Catch::Approx(2.0710059).margin(1e-4));
  CHECK(gap_recovered_pct(0.676, 0.690, 0.783).value() == Catch::Approx(13.0841121).margin(1e-4));
  CHECK(relative_improvement_pct(0.5, 0.5).value() == 0.0);
  CHECK(gap_recovered_pct(0.5, 0.5, 0.5) == std::nullopt);
  CHECK(gap_recovered_pct(0.5, 0.6, 0.5) == std::nullopt);

  std::vector<ReportRow> rows(3);
  rows[0].system = "1-best";
  rows[0].f1 = {0.612, 0.700, 0.491, 0.676};
  rows[1].system = "ranker";
  rows[1].f1 = {0.622, 0.715, 0.504, 0.690};
  rows[2].system = "oracle";
  rows[2].f1 = {0.704, 0.807, 0.576, 0.783};
  rows = compute_report(rows, "1-best", "oracle");
  const std::size_t lb = static_cast<std::size_t>(Objective::LabeledBrk);
  CHECK(rows[1].delta_pct[lb].value() == Catch::Approx(2.07).margin(0.05));
  CHECK(rows[1].gap_pct[lb].value() == Catch::Approx(13.1).margin(0.05));
  CHECK_FALSE(rows[0].delta_pct[lb].has_value());

  nlohmann::json j = report_to_json(rows);
  CHECK(j.at("rows").size() == 3);
  CHECK(j.at("rows").at(1).at("gap_pct").at("labeled-brk").get<double>() ==
        Catch::Approx(13.0841121).margin(1e-4));

  std::ostringstream text;
  render_report(rows, text);
  CHECK(text.str().find("%gap ranker") != std::string::npos);
  CHECK(text.str().find("note:") != std::string::npos);

  CHECK_THROWS_MATCHES(compute_report(rows, "missing", "oracle"), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.category() == "missing-row"; }));
}

TEST_CASE("summary json round trips rows", "[pipeline]") {
  std::vector<CorpusRecord> records = {simple_record("a")};
  std::vector<HypothesisSet> sets = prepare_sets(records, {});
  std::vector<SelectionRow> rows = score_corpus(sets);
  nlohmann::json summary = summary_to_json(rows, {});
  std::vector<ReportRow> back = rows_from_summary(summary);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].system == rows[i].name);
    for (std::size_t o = 0; o < kNumObjectives; ++o)
      CHECK(back[i].f1[o] == rows[i].corpus_f1[o].f1);
  }
}

TEST_CASE("selections io and validation", "[pipeline]") {
  std::vector<CorpusRecord> records = {simple_record("a"), simple_record("b")};
  std::vector<HypothesisSet> sets = prepare_sets(records, {});
  std::vector<std::size_t> selection = {1, 0};
  std::ostringstream out;
  write_selections(sets, selection, out);
  std::istringstream in(out.str());
  auto pairs = read_selections(in);
  CHECK(selection_for_sets(sets, pairs) == selection);

  std::vector<std::pair<std::string, std::size_t>> short_list = {{"a", 0}};
  CHECK_THROWS_MATCHES(selection_for_sets(sets, short_list), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.category() == "selection-length-mismatch";
                       }));
  std::vector<std::pair<std::string, std::size_t>> wrong_id = {{"a", 0}, {"zz", 0}};
  CHECK_THROWS_AS(selection_for_sets(sets, wrong_id), Error);
  std::vector<std::pair<std::string, std::size_t>> out_of_range = {{"a", 0}, {"b", 9}};
  CHECK_THROWS_AS(selection_for_sets(sets, out_of_range), Error);
}

TEST_CASE("analyze: identical selections, then a constructed change", "[pipeline]") {
  std::vector<CorpusRecord> records = {simple_record("a"), simple_record("b")};
  records[0].has_transcription_error = true;
  std::vector<HypothesisSet> sets = prepare_sets(records, {});

  std::vector<std::size_t> ones(sets.size(), 0);
  AnalysisResult same = analyze(sets, ones, ones, {});
  CHECK(same.changed_sentences == 0);
  CHECK(same.wer_improved.sentences == 0);
  CHECK(same.with_error.sentences == 1);
  CHECK(same.without_error.sentences == 1);

  // selection b picks the 4-word hypothesis in both sentences; the only
  // changed word is "the", which is in the function-word list.
  std::vector<std::size_t> alt(sets.size(), 1);
  AnalysisResult changed = analyze(sets, ones, alt, {"the"});
  CHECK(changed.changed_sentences == 2);
  CHECK(changed.wer_degraded.sentences == 2);
  CHECK(changed.wer_degraded.changed_tokens == 2);
  CHECK(changed.wer_degraded.function_tokens == 2);
  CHECK(changed.wer_degraded.function_proportion().value() == 1.0);

  std::vector<std::size_t> bad(sets.size() + 1, 0);
  CHECK_THROWS_AS(analyze(sets, bad, ones, {}), Error);

  nlohmann::json j = analysis_to_json(changed);
  CHECK(j.at("wer_degraded").at("function_proportion").get<double>() == 1.0);
}

TEST_CASE("per-sentence tsv lists every strategy row", "[pipeline]") {
  std::vector<CorpusRecord> records = {simple_record("a")};
  std::vector<HypothesisSet> sets = prepare_sets(records, {});
  std::vector<SelectionRow> rows = score_corpus(sets);
  std::ostringstream out;
  write_per_sentence_tsv(sets, rows, out);
  std::string text = out.str();
  CHECK(text.find("1-best") != std::string::npos);
  CHECK(text.find("oracle-labeled-brk") != std::string::npos);
  CHECK(text.rfind("id\tsystem", 0) == 0);
}
