#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sprank/tree.hpp"
#include "sprank/util.hpp"

namespace sprank {

// Labeled span scores p(l, a, b) for one sentence. The implicit null label
// scores exactly 0 for every span and never appears in `labels`.
struct SpanScores {
  std::size_t n = 0;
  std::vector<std::string> labels;
  std::vector<std::string> preterminals;  // one per word
  std::vector<double> values;             // label-major, then (start, end), b > a only

  static std::size_t span_count(std::size_t n) { return n * (n + 1) / 2; }

  // Offset of span (a, b) within one label's block, ordered by a then b.
  std::size_t span_index(std::size_t a, std::size_t b) const {
    // spans starting before a: sum_{i<a} (n - i)
    std::size_t before = a * n - a * (a - 1) / 2;
    return before + (b - a - 1);
  }

  double score(std::size_t label, std::size_t a, std::size_t b) const {
    return values[label * span_count(n) + span_index(a, b)];
  }

  double& score(std::size_t label, std::size_t a, std::size_t b) {
    return values[label * span_count(n) + span_index(a, b)];
  }

  static SpanScores zeros(std::size_t n, std::vector<std::string> labels,
                          std::vector<std::string> preterminals) {
    SpanScores s;
    s.n = n;
    s.labels = std::move(labels);
    s.preterminals = std::move(preterminals);
    s.values.assign(s.labels.size() * span_count(n), 0.0);
    return s;
  }
};

inline std::string placeholder_word(std::size_t i) { return "w" + std::to_string(i); }

namespace detail {

inline Tree preterminal_node(const SpanScores& scores, std::span<const std::string> words,
                             std::size_t i) {
  std::string word = i < words.size() ? words[i] : placeholder_word(i);
  return node(scores.preterminals[i], {leaf(std::move(word))});
}

}  // namespace detail

// Exact Viterbi decode: returns the tree maximizing the sum of span scores.
// Non-root spans may take the implicit null label (score 0; the node collapses
// and its children attach to the parent); the root span must take a real
// label; width-1 spans sit above the fixed preterminals. Ties break to the
// lowest label index (null last), then the smallest split point.
inline Tree decode(const SpanScores& scores, std::span<const std::string> words = {}) {
  const std::size_t n = scores.n;
  if (n == 0) fail("empty-sentence", "cannot decode an empty sentence");
  const std::size_t num_labels = scores.labels.size();
  if (num_labels == 0) fail("empty-label-set", "no labels to decode with");

  struct Cell {
    double best = 0.0;
    std::ptrdiff_t label = -1;  // -1 = null
    std::size_t split = 0;      // unused for width 1
  };
  std::vector<Cell> chart(n * (n + 1));
  auto cell = [&](std::size_t a, std::size_t b) -> Cell& { return chart[a * (n + 1) + b]; };

  for (std::size_t width = 1; width <= n; ++width) {
    for (std::size_t a = 0; a + width <= n; ++a) {
      const std::size_t b = a + width;
      const bool is_root = (a == 0 && b == n);

      double label_best = -std::numeric_limits<double>::infinity();
      std::ptrdiff_t label = -1;
      for (std::size_t l = 0; l < num_labels; ++l) {
        double v = scores.score(l, a, b);
        if (v > label_best) {
          label_best = v;
          label = static_cast<std::ptrdiff_t>(l);
        }
      }
      if (!is_root && 0.0 > label_best) {
        label_best = 0.0;
        label = -1;
      }

      double split_best = 0.0;
      std::size_t split = 0;
      if (width > 1) {
        split_best = -std::numeric_limits<double>::infinity();
        for (std::size_t m = a + 1; m < b; ++m) {
          double v = cell(a, m).best + cell(m, b).best;
          if (v > split_best) {
            split_best = v;
            split = m;
          }
        }
      }
      cell(a, b) = {label_best + split_best, label, split};
    }
  }

  std::function<void(std::size_t, std::size_t, std::vector<Tree>&)> build =
      [&](std::size_t a, std::size_t b, std::vector<Tree>& out) {
        const Cell& c = cell(a, b);
        std::vector<Tree> kids;
        if (b - a == 1) {
          kids.push_back(detail::preterminal_node(scores, words, a));
        } else {
          build(a, c.split, kids);
          build(c.split, b, kids);
        }
        if (c.label >= 0) {
          out.push_back(node(scores.labels[static_cast<std::size_t>(c.label)], std::move(kids)));
        } else {
          for (Tree& k : kids) out.push_back(std::move(k));
        }
      };

  std::vector<Tree> roots;
  build(0, n, roots);
  return std::move(roots.front());
}

// Sum of span scores over the tree's labeled (non-preterminal) spans.
inline double tree_score(const Tree& tree, const SpanScores& scores) {
  if (tree.yield_size() != scores.n)
    fail("yield-mismatch", "tree yield " + std::to_string(tree.yield_size()) +
                               " != n " + std::to_string(scores.n));
  double total = 0.0;
  std::function<std::size_t(const Tree&, std::size_t)> walk = [&](const Tree& t,
                                                                  std::size_t start) {
    if (t.is_leaf()) return start + 1;
    std::size_t end = start;
    for (const Tree& c : t.children) end = walk(c, end);
    if (!t.is_preterminal()) {
      std::ptrdiff_t label = -1;
      for (std::size_t l = 0; l < scores.labels.size(); ++l)
        if (scores.labels[l] == t.label) {
          label = static_cast<std::ptrdiff_t>(l);
          break;
        }
      if (label < 0) fail("unknown-label", "label '" + t.label + "' not in score table");
      total += scores.score(static_cast<std::size_t>(label), start, end);
    }
    return end;
  };
  walk(tree, 0);
  return total;
}

inline constexpr std::size_t kBruteForceLimit = 8;

namespace detail {

// A binary bracketing as nested split points; width-1 spans have no split.
// Immutable once built, so enumerated alternatives can share subtrees.
struct Shape {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t split = 0;
  std::shared_ptr<const Shape> left;
  std::shared_ptr<const Shape> right;
};

}  // namespace detail

// Exhaustive reference decoder, independent of the chart recurrence: walks
// every binary bracketing of the sentence and scores each candidate by a
// direct per-span sum, with no best-value reuse across candidates. Given a
// shape, span label choices are independent, so each span takes its own best
// label (lowest index on ties; null only when strictly better, never at the
// root). The first shape attaining the maximum wins, which is the split
// order decode prefers. Guarded to small n.
inline Tree brute_force_decode(const SpanScores& scores, std::span<const std::string> words = {}) {
  const std::size_t n = scores.n;
  if (n == 0) fail("empty-sentence", "cannot decode an empty sentence");
  if (n > kBruteForceLimit)
    fail("too-large", "brute force limited to n <= " + std::to_string(kBruteForceLimit));
  if (scores.labels.empty()) fail("empty-label-set", "no labels to decode with");

  using detail::Shape;

  // Best label for one span under the fixed tie rules; returns (index, score)
  // with index -1 for null.
  auto best_label = [&](std::size_t a, std::size_t b, bool is_root) {
    double best = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t label = -1;
    for (std::size_t l = 0; l < scores.labels.size(); ++l) {
      if (scores.score(l, a, b) > best) {
        best = scores.score(l, a, b);
        label = static_cast<std::ptrdiff_t>(l);
      }
    }
    if (!is_root && 0.0 > best) {
      best = 0.0;
      label = -1;
    }
    return std::pair<std::ptrdiff_t, double>(label, best);
  };

  std::function<double(const Shape&, bool)> shape_total = [&](const Shape& s,
                                                              bool is_root) -> double {
    double total = best_label(s.a, s.b, is_root).second;
    if (s.left) total += shape_total(*s.left, false) + shape_total(*s.right, false);
    return total;
  };

  std::function<std::vector<Tree>(const Shape&, bool)> realize =
      [&](const Shape& s, bool is_root) -> std::vector<Tree> {
    std::vector<Tree> kids;
    if (s.left) {
      kids = realize(*s.left, false);
      std::vector<Tree> right = realize(*s.right, false);
      kids.insert(kids.end(), std::make_move_iterator(right.begin()),
                  std::make_move_iterator(right.end()));
    } else {
      kids.push_back(detail::preterminal_node(scores, words, s.a));
    }
    std::ptrdiff_t label = best_label(s.a, s.b, is_root).first;
    if (label < 0) return kids;
    std::vector<Tree> out;
    out.push_back(node(scores.labels[static_cast<std::size_t>(label)], std::move(kids)));
    return out;
  };

  Tree best_tree;
  double best_score = -std::numeric_limits<double>::infinity();
  bool found = false;
  using ShapePtr = std::shared_ptr<const Shape>;
  // enumerate(a, b) invokes the callback with every shape over [a, b), split
  // points ascending, left alternatives varying before right ones
  std::function<void(std::size_t, std::size_t, const std::function<void(const ShapePtr&)>&)>
      enumerate = [&](std::size_t a, std::size_t b,
                      const std::function<void(const ShapePtr&)>& emit) {
        if (b - a == 1) {
          emit(std::make_shared<Shape>(Shape{a, b, 0, nullptr, nullptr}));
          return;
        }
        for (std::size_t m = a + 1; m < b; ++m) {
          enumerate(a, m, [&](const ShapePtr& left) {
            enumerate(m, b, [&](const ShapePtr& right) {
              emit(std::make_shared<Shape>(Shape{a, b, m, left, right}));
            });
          });
        }
      };

  enumerate(0, n, [&](const ShapePtr& s) {
    double total = shape_total(*s, true);
    if (!found || total > best_score) {
      best_score = total;
      best_tree = std::move(realize(*s, true).front());
      found = true;
    }
  });
  return best_tree;
}

// ---------------------------------------------------------------------------
// Span-score file: versioned plain text, four lines per record.
//
//   sprank-spans v1                  (file header, once)
//   <id> <n> <num_labels>
//   <label_1> ... <label_num_labels>
//   <preterminal_1> ... <preterminal_n>
//   <scores: num_labels * n*(n+1)/2 values, label-major, then (start, end)>

inline constexpr std::string_view kSpanFileHeader = "sprank-spans v1";

inline void write_span_records(const std::vector<std::pair<std::string, SpanScores>>& records,
                               std::ostream& out) {
  out << kSpanFileHeader << "\n";
  for (const auto& [id, s] : records) {
    out << id << ' ' << s.n << ' ' << s.labels.size() << "\n";
    for (std::size_t i = 0; i < s.labels.size(); ++i)
      out << (i ? " " : "") << s.labels[i];
    out << "\n";
    for (std::size_t i = 0; i < s.preterminals.size(); ++i)
      out << (i ? " " : "") << s.preterminals[i];
    out << "\n";
    for (std::size_t i = 0; i < s.values.size(); ++i)
      out << (i ? " " : "") << format_double(s.values[i]);
    out << "\n";
  }
}

inline std::vector<std::pair<std::string, SpanScores>> read_span_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSpanFileHeader)
    fail("malformed-record", "missing span file header '" + std::string(kSpanFileHeader) + "'");
  std::vector<std::pair<std::string, SpanScores>> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> head = split_ws(line);
    if (head.empty()) continue;
    if (head.size() != 3)
      fail("malformed-record", "line " + std::to_string(line_no) + ": expected 'id n labels'");
    SpanScores s;
    s.n = std::stoul(head[1]);
    const std::size_t num_labels = std::stoul(head[2]);
    if (!std::getline(in, line)) fail("malformed-record", "truncated record: missing labels");
    s.labels = split_ws(line);
    if (!std::getline(in, line)) fail("malformed-record", "truncated record: missing preterminals");
    s.preterminals = split_ws(line);
    if (!std::getline(in, line)) fail("malformed-record", "truncated record: missing scores");
    line_no += 3;
    std::vector<std::string> score_tokens = split_ws(line);
    if (s.labels.size() != num_labels || s.preterminals.size() != s.n ||
        score_tokens.size() != num_labels * SpanScores::span_count(s.n))
      fail("malformed-record",
           "record '" + head[0] + "': field counts disagree with n=" + head[1]);
    s.values.reserve(score_tokens.size());
    for (const std::string& t : score_tokens) s.values.push_back(std::stod(t));
    records.emplace_back(head[0], std::move(s));
  }
  return records;
}

}  // namespace sprank
