// sprank: score, rerank, and analyze N-best speech parse hypotheses.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sprank/chart.hpp"
#include "sprank/corpus.hpp"
#include "sprank/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonScoreFlags {
  std::string corpus_path;
  std::string head_rules_path;
  bool include_edited = false;
  bool include_preterminals = false;
  bool strict = false;
  int workers = 1;

  void attach(CLI::App* cmd, bool with_corpus = true) {
    if (with_corpus)
      cmd->add_option("--corpus", corpus_path, "corpus file (JSON lines)")->required();
    cmd->add_option("--head-rules", head_rules_path,
                    "head-rule table file; built-in defaults when omitted");
    cmd->add_flag("--include-edited", include_edited, "score EDITED nodes too");
    cmd->add_flag("--include-preterminals", include_preterminals,
                  "include preterminals in bracket scoring");
    cmd->add_flag("--strict", strict, "fail on the first malformed corpus line");
    cmd->add_option("--workers", workers, "parallel workers for per-sentence work")
        ->check(CLI::Range(1, 256));
  }

  sprank::ScoreOptions score_options() const {
    sprank::ScoreOptions opts;
    opts.include_edited = include_edited;
    opts.include_preterminals = include_preterminals;
    opts.workers = workers;
    if (!head_rules_path.empty()) {
      std::ifstream in(head_rules_path);
      if (!in) sprank::fail("file-not-found", head_rules_path);
      std::stringstream buf;
      buf << in.rdbuf();
      opts.head_rules = sprank::parse_head_rules(buf.str());
    }
    return opts;
  }

  std::vector<sprank::HypothesisSet> load_sets(const std::string& path,
                                               const sprank::ScoreOptions& opts) const {
    sprank::IngestResult ingested = sprank::ingest(path, strict);
    if (!ingested.skipped.empty())
      std::cerr << "warning: skipped " << ingested.skipped.size() << " malformed record(s) in "
                << path << "\n";
    return sprank::prepare_sets(ingested.records, opts);
  }
};

void write_text(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) sprank::fail("file-not-found", "cannot open '" + path + "' for writing");
  out << content;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) sprank::fail("file-not-found", path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_selection_files(const std::string& dir, std::span<const sprank::HypothesisSet> sets,
                           std::span<const sprank::SelectionRow> rows) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  for (const sprank::SelectionRow& row : rows) {
    if (row.selection.size() != sets.size()) continue;  // composite rows
    std::ofstream out(fs::path(dir) / (row.name + ".tsv"));
    sprank::write_selections(sets, row.selection, out);
  }
}

void emit_score_outputs(std::span<const sprank::HypothesisSet> sets,
                        std::span<const sprank::SelectionRow> rows,
                        const sprank::ScoreOptions& opts, const std::string& out_path,
                        const std::string& per_sentence_path, const std::string& selections_dir) {
  write_text(out_path, sprank::summary_to_json(rows, opts).dump(2) + "\n");
  if (!per_sentence_path.empty()) {
    std::ostringstream tsv;
    sprank::write_per_sentence_tsv(sets, rows, tsv);
    write_text(per_sentence_path, tsv.str());
  }
  write_selection_files(selections_dir, sets, rows);
}

std::vector<sprank::Objective> parse_objectives(const std::string& csv) {
  std::vector<sprank::Objective> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(sprank::objective_from_name(item));
  if (out.empty()) sprank::fail("unknown-objective", "empty objective list");
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"N-best speech parse scoring, reranking, and analysis"};
  app.require_subcommand(1);

  // --- score ---------------------------------------------------------------
  auto* score_cmd = app.add_subcommand(
      "score", "score a corpus with the model-free strategies (1-best, parse-score, oracle)");
  CommonScoreFlags score_flags;
  score_flags.attach(score_cmd);
  std::string score_out = "-", score_per_sentence, score_selections_dir;
  score_cmd->add_option("--out", score_out, "summary JSON path ('-' = stdout)");
  score_cmd->add_option("--per-sentence", score_per_sentence, "per-sentence TSV path");
  score_cmd->add_option("--selections-dir", score_selections_dir,
                        "directory for per-strategy selection files");

  // --- train-ranker ----------------------------------------------------------
  auto* train_cmd =
      app.add_subcommand("train-ranker", "grid-search pairwise rankers, one per objective");
  CommonScoreFlags train_flags;
  train_flags.attach(train_cmd, false);
  std::string train_path, dev_path, out_dir, kind_name = "logistic";
  std::string c_grid_csv, presets_csv, objectives_csv;
  std::uint64_t base_seed = 1;
  std::size_t trials = 5, epochs = 500, random_pairs = 10;
  double learning_rate = 0.5;
  train_cmd->add_option("--train", train_path, "training corpus")->required();
  train_cmd->add_option("--dev", dev_path, "development corpus for model selection")->required();
  train_cmd->add_option("--out-dir", out_dir, "output directory for models and the grid log")
      ->required();
  train_cmd->add_option("--kind", kind_name, "classifier kind: logistic | hinge");
  train_cmd->add_option("--c-grid", c_grid_csv, "comma-separated C grid override");
  train_cmd->add_option("--trials", trials, "random-seed trials per (preset, C) cell");
  train_cmd->add_option("--seed", base_seed, "base seed; trial seeds are seed..seed+trials-1");
  train_cmd->add_option("--presets", presets_csv,
                        "comma-separated preset subset (core, core+depth, core+Nc, "
                        "core+depth+Nc, full)");
  train_cmd->add_option("--objectives", objectives_csv, "comma-separated objective subset");
  train_cmd->add_option("--epochs", epochs, "max gradient-descent epochs");
  train_cmd->add_option("--lr", learning_rate, "gradient-descent learning rate");
  train_cmd->add_option("--random-pairs", random_pairs, "random pairs sampled per sentence");

  // --- rerank ----------------------------------------------------------------
  auto* rerank_cmd = app.add_subcommand("rerank", "select hypotheses with trained rankers");
  CommonScoreFlags rerank_flags;
  rerank_flags.attach(rerank_cmd);
  std::string models_dir, method = "both";
  std::string rerank_out = "-", rerank_per_sentence, rerank_selections_dir, rerank_objectives_csv;
  rerank_cmd->add_option("--models", models_dir, "directory holding ranker-<objective>.model")
      ->required();
  rerank_cmd->add_option("--method", method, "ranking method: point | pair | both");
  rerank_cmd->add_option("--objectives", rerank_objectives_csv,
                         "comma-separated objective subset");
  rerank_cmd->add_option("--out", rerank_out, "summary JSON path ('-' = stdout)");
  rerank_cmd->add_option("--per-sentence", rerank_per_sentence, "per-sentence TSV path");
  rerank_cmd->add_option("--selections-dir", rerank_selections_dir,
                         "directory for per-strategy selection files");

  // --- report ----------------------------------------------------------------
  auto* report_cmd =
      app.add_subcommand("report", "render summaries with %delta and %gap columns");
  std::vector<std::string> summary_paths;
  std::string baseline_name = "1-best", oracle_name = "oracle";
  std::string report_out = "-", report_json_out;
  report_cmd->add_option("--summary", summary_paths, "summary JSON file(s); later rows override")
      ->required();
  report_cmd->add_option("--baseline", baseline_name, "baseline system row");
  report_cmd->add_option("--oracle", oracle_name, "oracle system row");
  report_cmd->add_option("--out", report_out, "text report path ('-' = stdout)");
  report_cmd->add_option("--json-out", report_json_out, "machine-readable report path");

  // --- analyze ---------------------------------------------------------------
  auto* analyze_cmd = app.add_subcommand(
      "analyze", "compare two selection files: error subsets and changed words");
  CommonScoreFlags analyze_flags;
  analyze_flags.attach(analyze_cmd);
  std::string sel_a_path, sel_b_path, function_words_path;
  std::string analyze_out = "-", analyze_json_out;
  analyze_cmd->add_option("--selections-a", sel_a_path, "baseline selections file")->required();
  analyze_cmd->add_option("--selections-b", sel_b_path, "system selections file")->required();
  analyze_cmd->add_option("--function-words", function_words_path,
                          "function-word list, one word per line");
  analyze_cmd->add_option("--out", analyze_out, "text output path ('-' = stdout)");
  analyze_cmd->add_option("--json-out", analyze_json_out, "machine-readable output path");

  // --- decode-spans ------------------------------------------------------------
  auto* decode_cmd =
      app.add_subcommand("decode-spans", "decode max-scoring trees from a span-score file");
  std::string spans_path, decode_out = "-";
  int decode_workers = 1;
  decode_cmd->add_option("--spans", spans_path, "span-score file")->required();
  decode_cmd->add_option("--out", decode_out, "output trees, one per line ('-' = stdout)");
  decode_cmd->add_option("--workers", decode_workers, "parallel workers")
      ->check(CLI::Range(1, 256));

  CLI11_PARSE(app, argc, argv);

  if (score_cmd->parsed()) {
    sprank::ScoreOptions opts = score_flags.score_options();
    std::vector<sprank::HypothesisSet> sets = score_flags.load_sets(score_flags.corpus_path, opts);
    std::vector<sprank::SelectionRow> rows = sprank::score_corpus(sets);
    emit_score_outputs(sets, rows, opts, score_out, score_per_sentence, score_selections_dir);
    return 0;
  }

  if (train_cmd->parsed()) {
    sprank::ScoreOptions opts = train_flags.score_options();
    std::vector<sprank::HypothesisSet> train_sets = train_flags.load_sets(train_path, opts);
    std::vector<sprank::HypothesisSet> dev_sets = train_flags.load_sets(dev_path, opts);

    sprank::GridOptions grid;
    grid.kind = sprank::ranker_kind_from_name(kind_name);
    grid.trials = trials;
    grid.base_seed = base_seed;
    grid.epochs = epochs;
    grid.learning_rate = learning_rate;
    grid.random_pairs = random_pairs;
    grid.workers = train_flags.workers;
    if (!c_grid_csv.empty()) {
      grid.c_grid.clear();
      std::stringstream ss(c_grid_csv);
      std::string item;
      while (std::getline(ss, item, ',')) grid.c_grid.push_back(std::stod(item));
    }
    if (!presets_csv.empty()) {
      grid.presets.clear();
      std::stringstream ss(presets_csv);
      std::string item;
      while (std::getline(ss, item, ',')) grid.presets.push_back(sprank::preset_by_name(item));
    }
    if (!objectives_csv.empty()) grid.objectives = parse_objectives(objectives_csv);

    sprank::TrainOutcome outcome = sprank::train_command(train_sets, dev_sets, grid);

    fs::create_directories(out_dir);
    std::ostringstream log;
    log << "objective\tpreset\tseed\tC\tdev_f1_point\tdev_f1_pair\n";
    for (const sprank::GridCell& cell : outcome.log)
      log << sprank::objective_name(cell.objective) << "\t" << cell.preset << "\t" << cell.seed
          << "\t" << sprank::format_double(cell.C) << "\t"
          << sprank::format_double(cell.dev_f1_pointwise) << "\t"
          << sprank::format_double(cell.dev_f1_pairwise) << "\n";
    write_text((fs::path(out_dir) / "grid-log.tsv").string(), log.str());

    nlohmann::json jbest = nlohmann::json::array();
    for (const sprank::TrainedRanker& trained : outcome.best) {
      const std::string name = sprank::objective_name(trained.model.objective);
      write_text((fs::path(out_dir) / ("ranker-" + name + ".model")).string(),
                 sprank::save_model(trained.model));
      jbest.push_back({{"objective", name},
                       {"preset", trained.cell.preset},
                       {"C", trained.cell.C},
                       {"seed", trained.cell.seed},
                       {"dev_f1_point", trained.cell.dev_f1_pointwise},
                       {"dev_f1_pair", trained.cell.dev_f1_pairwise},
                       {"preferred_method", trained.pairwise_preferred ? "pair" : "point"}});
    }
    write_text((fs::path(out_dir) / "train-summary.json").string(),
               nlohmann::json{{"format", "sprank-train"}, {"version", 1}, {"best", jbest}}.dump(2) +
                   "\n");
    return 0;
  }

  if (rerank_cmd->parsed()) {
    if (method != "point" && method != "pair" && method != "both")
      sprank::fail("unknown-method", method);
    sprank::ScoreOptions opts = rerank_flags.score_options();
    std::vector<sprank::HypothesisSet> sets =
        rerank_flags.load_sets(rerank_flags.corpus_path, opts);

    std::vector<sprank::Objective> objectives = {
        sprank::Objective::UnlabeledDep, sprank::Objective::UnlabeledBrk,
        sprank::Objective::LabeledDep, sprank::Objective::LabeledBrk};
    if (!rerank_objectives_csv.empty()) objectives = parse_objectives(rerank_objectives_csv);

    std::vector<sprank::SelectionRow> rows = sprank::score_corpus(sets);
    for (bool pairwise : {false, true}) {
      if ((pairwise && method == "point") || (!pairwise && method == "pair")) continue;
      const std::string prefix = pairwise ? "pair" : "point";
      std::vector<sprank::SelectionRow> per_objective;
      for (sprank::Objective objective : objectives) {
        const std::string name = sprank::objective_name(objective);
        sprank::RankerModel model = sprank::load_model(
            slurp((fs::path(models_dir) / ("ranker-" + name + ".model")).string()));
        if (model.objective != objective)
          sprank::fail("malformed-record", "model file objective mismatch for " + name);
        per_objective.push_back(sprank::ranker_row(model, sets, pairwise, rerank_flags.workers,
                                                   prefix + "-" + name));
      }
      if (objectives.size() == sprank::kNumObjectives)
        rows.push_back(sprank::diagonal_row(prefix, per_objective));
      for (sprank::SelectionRow& r : per_objective) rows.push_back(std::move(r));
    }
    emit_score_outputs(sets, rows, opts, rerank_out, rerank_per_sentence, rerank_selections_dir);
    return 0;
  }

  if (report_cmd->parsed()) {
    std::vector<sprank::ReportRow> rows;
    for (const std::string& path : summary_paths) {
      for (sprank::ReportRow& row : sprank::rows_from_summary(nlohmann::json::parse(slurp(path)))) {
        auto it = std::find_if(rows.begin(), rows.end(),
                               [&](const sprank::ReportRow& r) { return r.system == row.system; });
        if (it != rows.end())
          *it = std::move(row);
        else
          rows.push_back(std::move(row));
      }
    }
    rows = sprank::compute_report(std::move(rows), baseline_name, oracle_name);
    std::ostringstream text;
    sprank::render_report(rows, text);
    write_text(report_out, text.str());
    if (!report_json_out.empty())
      write_text(report_json_out, sprank::report_to_json(rows).dump(2) + "\n");
    return 0;
  }

  if (analyze_cmd->parsed()) {
    sprank::ScoreOptions opts = analyze_flags.score_options();
    std::vector<sprank::HypothesisSet> sets =
        analyze_flags.load_sets(analyze_flags.corpus_path, opts);

    auto read_selection_file = [&](const std::string& path) {
      std::ifstream in(path);
      if (!in) sprank::fail("file-not-found", path);
      auto pairs = sprank::read_selections(in);
      return sprank::selection_for_sets(sets, pairs);
    };
    std::vector<std::size_t> sel_a = read_selection_file(sel_a_path);
    std::vector<std::size_t> sel_b = read_selection_file(sel_b_path);

    std::set<std::string> function_words;
    if (!function_words_path.empty()) {
      std::ifstream in(function_words_path);
      if (!in) sprank::fail("file-not-found", function_words_path);
      std::string word;
      while (in >> word) function_words.insert(sprank::lowercase(word));
    }

    sprank::AnalysisResult result = sprank::analyze(sets, sel_a, sel_b, function_words);
    std::ostringstream text;
    auto subset_line = [&](const char* tag, const sprank::SubsetStats& s) {
      text << tag << ": " << s.sentences << " sentences\n";
      const std::size_t lb = static_cast<std::size_t>(sprank::Objective::LabeledBrk);
      char buf[160];
      std::snprintf(buf, sizeof(buf), "  a: labeled-brk F1 %.3f  WER %.3f\n", s.f1_a[lb].f1,
                    s.edits_a.wer);
      text << buf;
      std::snprintf(buf, sizeof(buf), "  b: labeled-brk F1 %.3f  WER %.3f\n", s.f1_b[lb].f1,
                    s.edits_b.wer);
      text << buf;
    };
    subset_line("with transcription error", result.with_error);
    subset_line("without transcription error", result.without_error);
    text << "changed sentences: " << result.changed_sentences << "\n";
    auto change_line = [&](const char* tag, const sprank::ChangeStats& c) {
      text << tag << ": " << c.sentences << " sentences, " << c.changed_tokens
           << " changed tokens";
      if (auto p = c.function_proportion()) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), ", %.1f%% function words", *p * 100.0);
        text << buf;
      }
      text << "\n";
    };
    change_line("WER improved", result.wer_improved);
    change_line("WER degraded", result.wer_degraded);
    change_line("WER unchanged", result.wer_unchanged);
    write_text(analyze_out, text.str());
    if (!analyze_json_out.empty())
      write_text(analyze_json_out, sprank::analysis_to_json(result).dump(2) + "\n");
    return 0;
  }

  if (decode_cmd->parsed()) {
    std::ifstream in(spans_path);
    if (!in) sprank::fail("file-not-found", spans_path);
    std::vector<std::pair<std::string, sprank::SpanScores>> records =
        sprank::read_span_records(in);
    std::vector<std::string> trees(records.size());
    sprank::parallel_for(records.size(), decode_workers, [&](std::size_t i) {
      trees[i] = sprank::write_ptb(sprank::decode(records[i].second));
    });
    std::string out;
    for (const std::string& t : trees) out += t + "\n";
    write_text(decode_out, out);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const sprank::Error& e) {
    std::cerr << "error[" << e.category() << "]: " << e.message() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
