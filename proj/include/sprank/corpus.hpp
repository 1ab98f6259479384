#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sprank/features.hpp"
#include "sprank/util.hpp"

namespace sprank {

inline constexpr std::size_t kMaxHypotheses = 10;

struct HypothesisRecord {
  std::vector<std::string> words;
  double asr_score = 0.0;
  std::string parse_text;
  double parse_score = 0.0;
  std::optional<std::vector<WordTiming>> timings;
};

// One utterance as stored on disk; trees stay as text until scoring.
struct CorpusRecord {
  std::string id;
  std::string gold_text;
  bool has_transcription_error = false;
  std::vector<HypothesisRecord> hypotheses;
};

// Corpus file: UTF-8 JSON lines. The first line is a header object
// {"format":"sprank-corpus","version":1}; every following line is one record:
//
//   {"id":"sw2005-0001","gold":"(S ...)","trans_err":false,
//    "hyps":[{"words":["i","like"],"asr_score":-12.3,
//             "parse":"(S ...)","parse_score":-5.4,
//             "timings":[[0.00,0.31],[0.31,0.58]]}]}
//
// "timings" is optional per hypothesis; keys are emitted in alphabetical
// order so write -> ingest -> write is byte-stable.
inline constexpr std::string_view kCorpusFormat = "sprank-corpus";
inline constexpr int kCorpusVersion = 1;

namespace detail {

inline nlohmann::json record_to_json(const CorpusRecord& record) {
  nlohmann::json hyps = nlohmann::json::array();
  for (const HypothesisRecord& h : record.hypotheses) {
    nlohmann::json jh{{"words", h.words},
                      {"asr_score", h.asr_score},
                      {"parse", h.parse_text},
                      {"parse_score", h.parse_score}};
    if (h.timings) {
      nlohmann::json jt = nlohmann::json::array();
      for (const WordTiming& t : *h.timings) jt.push_back({t.start, t.end});
      jh["timings"] = std::move(jt);
    }
    hyps.push_back(std::move(jh));
  }
  return nlohmann::json{{"id", record.id},
                        {"gold", record.gold_text},
                        {"trans_err", record.has_transcription_error},
                        {"hyps", std::move(hyps)}};
}

inline CorpusRecord record_from_json(const nlohmann::json& j) {
  CorpusRecord record;
  record.id = j.at("id").get<std::string>();
  record.gold_text = j.at("gold").get<std::string>();
  record.has_transcription_error = j.at("trans_err").get<bool>();
  for (const nlohmann::json& jh : j.at("hyps")) {
    HypothesisRecord h;
    h.words = jh.at("words").get<std::vector<std::string>>();
    if (h.words.empty()) throw std::runtime_error("hypothesis with no words");
    h.asr_score = jh.at("asr_score").get<double>();
    h.parse_text = jh.at("parse").get<std::string>();
    h.parse_score = jh.at("parse_score").get<double>();
    if (jh.contains("timings")) {
      std::vector<WordTiming> timings;
      for (const nlohmann::json& jt : jh.at("timings"))
        timings.push_back({jt.at(0).get<double>(), jt.at(1).get<double>()});
      h.timings = std::move(timings);
    }
    record.hypotheses.push_back(std::move(h));
  }
  if (record.hypotheses.empty()) throw std::runtime_error("record with no hypotheses");
  if (record.hypotheses.size() > kMaxHypotheses)
    throw std::runtime_error("record with more than " + std::to_string(kMaxHypotheses) +
                             " hypotheses");
  return record;
}

}  // namespace detail

struct IngestDiagnostic {
  std::size_t line = 0;
  std::string message;
};

struct IngestResult {
  std::vector<CorpusRecord> records;
  std::vector<IngestDiagnostic> skipped;
};

inline void write_corpus(std::span<const CorpusRecord> records, std::ostream& out) {
  out << nlohmann::json{{"format", kCorpusFormat}, {"version", kCorpusVersion}}.dump() << "\n";
  for (const CorpusRecord& r : records) out << detail::record_to_json(r).dump() << "\n";
}

inline void write_corpus(std::span<const CorpusRecord> records, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("file-not-found", "cannot open '" + path + "' for writing");
  write_corpus(records, out);
}

// Strict mode throws on the first malformed line; otherwise bad lines are
// skipped and reported in the result.
inline IngestResult ingest_stream(std::istream& in, bool strict) {
  IngestResult result;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) fail("malformed-record", "empty corpus file");
  ++line_no;
  try {
    nlohmann::json header = nlohmann::json::parse(line);
    if (header.at("format").get<std::string>() != kCorpusFormat ||
        header.at("version").get<int>() != kCorpusVersion)
      throw std::runtime_error("unsupported corpus format/version");
  } catch (const std::exception& e) {
    fail("malformed-record", "line 1: bad corpus header (" + std::string(e.what()) + ")");
  }

  std::set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      CorpusRecord record = detail::record_from_json(nlohmann::json::parse(line));
      if (!seen_ids.insert(record.id).second)
        throw std::runtime_error("duplicate id '" + record.id + "'");
      result.records.push_back(std::move(record));
    } catch (const std::exception& e) {
      if (strict)
        fail("malformed-record", "line " + std::to_string(line_no) + ": " + e.what());
      result.skipped.push_back({line_no, e.what()});
    }
  }
  return result;
}

inline IngestResult ingest(const std::string& path, bool strict = true) {
  std::ifstream in(path);
  if (!in) fail("file-not-found", path);
  return ingest_stream(in, strict);
}

}  // namespace sprank
