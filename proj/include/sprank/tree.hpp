#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sprank/util.hpp"

namespace sprank {

// Constituency tree as an immutable value. A node with no children is a
// leaf and `label` holds the word; otherwise `label` is the nonterminal.
// A preterminal is an internal node whose single child is a leaf.
struct Tree {
  std::string label;
  std::vector<Tree> children;

  bool is_leaf() const { return children.empty(); }
  bool is_preterminal() const { return children.size() == 1 && children[0].is_leaf(); }

  std::size_t yield_size() const {
    if (is_leaf()) return 1;
    std::size_t n = 0;
    for (const Tree& c : children) n += c.yield_size();
    return n;
  }

  std::vector<std::string> yield() const {
    std::vector<std::string> words;
    collect_yield(words);
    return words;
  }

  bool operator==(const Tree& other) const = default;

 private:
  void collect_yield(std::vector<std::string>& words) const {
    if (is_leaf()) {
      words.push_back(label);
      return;
    }
    for (const Tree& c : children) c.collect_yield(words);
  }
};

inline Tree leaf(std::string word) { return Tree{std::move(word), {}}; }

inline Tree node(std::string label, std::vector<Tree> children) {
  return Tree{std::move(label), std::move(children)};
}

// Labeled span read off a tree; fencepost indices over the yield.
struct Constituent {
  std::string label;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Constituent&) const = default;
  auto operator<=>(const Constituent&) const = default;
};

// (head, dependent, relation) from head percolation; words case-folded.
struct DependencyTuple {
  std::string head;
  std::string dependent;
  std::string relation;

  bool operator==(const DependencyTuple&) const = default;
  auto operator<=>(const DependencyTuple&) const = default;
};

inline constexpr std::string_view kEditedLabel = "EDITED";

// ---------------------------------------------------------------------------
// Penn-Treebank S-expression I/O

namespace detail {

struct PtbParser {
  std::string_view text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() &&
           (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\r' || text[pos] == '\n'))
      ++pos;
  }

  bool at_end() {
    skip_ws();
    return pos >= text.size();
  }

  std::string token() {
    std::size_t start = pos;
    while (pos < text.size() && text[pos] != '(' && text[pos] != ')' && text[pos] != ' ' &&
           text[pos] != '\t' && text[pos] != '\r' && text[pos] != '\n')
      ++pos;
    return std::string(text.substr(start, pos - start));
  }

  Tree tree() {
    skip_ws();
    if (pos >= text.size() || text[pos] != '(')
      fail("unbalanced-parens", "expected '(' at position " + std::to_string(pos));
    ++pos;  // consume '('
    skip_ws();
    Tree t;
    if (pos < text.size() && text[pos] != '(' && text[pos] != ')') t.label = token();
    for (;;) {
      skip_ws();
      if (pos >= text.size()) fail("unbalanced-parens", "missing ')'");
      if (text[pos] == ')') {
        ++pos;
        break;
      }
      if (text[pos] == '(') {
        t.children.push_back(tree());
      } else {
        // Bare token inside a node: a leaf word.
        t.children.push_back(leaf(token()));
      }
    }
    if (t.children.empty())
      fail("internal-node-without-children", "node '" + t.label + "' has no children");
    return t;
  }
};

}  // namespace detail

inline Tree parse_ptb(std::string_view text) {
  detail::PtbParser parser{text};
  if (parser.at_end()) fail("empty-input", "no tree in input");
  Tree t = parser.tree();
  if (!parser.at_end())
    fail("unbalanced-parens", "trailing content after tree at position " +
                                  std::to_string(parser.pos));
  return t;
}

inline void write_ptb(const Tree& tree, std::string& out) {
  if (tree.is_leaf()) {
    out += tree.label;
    return;
  }
  out += '(';
  out += tree.label;
  for (const Tree& c : tree.children) {
    out += ' ';
    write_ptb(c, out);
  }
  out += ')';
}

inline std::string write_ptb(const Tree& tree) {
  std::string out;
  write_ptb(tree, out);
  return out;
}

// ---------------------------------------------------------------------------
// Structural queries

inline void collect_constituents(const Tree& t, std::size_t start, bool include_preterminals,
                                 bool include_edited, std::vector<Constituent>& out) {
  if (t.is_leaf()) return;
  std::size_t width = t.yield_size();
  bool qualifies = include_preterminals || !t.is_preterminal();
  if (!include_edited && t.label == kEditedLabel) qualifies = false;
  if (qualifies) out.push_back({t.label, start, start + width});
  std::size_t offset = start;
  for (const Tree& c : t.children) {
    collect_constituents(c, offset, include_preterminals, include_edited, out);
    offset += c.yield_size();
  }
}

// One Constituent per qualifying internal node; spans are fencepost indices
// over the full yield (EDITED removal never renumbers).
inline std::vector<Constituent> constituents(const Tree& tree, bool include_preterminals = false,
                                             bool include_edited = true) {
  std::vector<Constituent> out;
  collect_constituents(tree, 0, include_preterminals, include_edited, out);
  return out;
}

// Maximum count of internal nodes (preterminals included) on a root-to-leaf path.
inline std::size_t depth(const Tree& tree) {
  if (tree.is_leaf()) return 0;
  std::size_t best = 0;
  for (const Tree& c : tree.children) best = std::max(best, depth(c));
  return best + 1;
}

inline std::size_t count_label(const Tree& tree, std::string_view label) {
  if (tree.is_leaf()) return 0;
  std::size_t n = tree.label == label ? 1 : 0;
  for (const Tree& c : tree.children) n += count_label(c, label);
  return n;
}

// Removes every subtree rooted at a node with the given label; internal nodes
// left childless are removed as well. Returns nullopt when nothing survives.
inline std::optional<Tree> prune_subtrees(const Tree& tree, std::string_view label) {
  if (tree.is_leaf()) return tree;
  if (tree.label == label) return std::nullopt;
  Tree out{tree.label, {}};
  for (const Tree& c : tree.children) {
    if (auto kept = prune_subtrees(c, label)) out.children.push_back(std::move(*kept));
  }
  if (out.children.empty()) return std::nullopt;
  return out;
}

// ---------------------------------------------------------------------------
// Head rules and percolated dependencies

enum class HeadDirection { LeftToRight, RightToLeft };

// Per-parent child-priority list. A priority entry ending in '*' matches any
// child label with that prefix; otherwise matching is exact.
struct HeadRule {
  HeadDirection direction = HeadDirection::RightToLeft;
  std::vector<std::string> priority;
};

class HeadRules {
 public:
  HeadRules() = default;

  void set_rule(std::string parent, HeadRule rule) { rules_[std::move(parent)] = std::move(rule); }
  void set_default_direction(HeadDirection d) { default_direction_ = d; }
  HeadDirection default_direction() const { return default_direction_; }

  // Deterministic head child index for a non-empty child list.
  std::size_t head_child(const std::string& parent_label,
                         const std::vector<Tree>& children) const {
    auto it = rules_.find(parent_label);
    if (it == rules_.end()) return fallback(default_direction_, children.size());
    const HeadRule& rule = it->second;
    for (const std::string& want : rule.priority) {
      if (rule.direction == HeadDirection::LeftToRight) {
        for (std::size_t i = 0; i < children.size(); ++i)
          if (label_matches(want, children[i].label)) return i;
      } else {
        for (std::size_t i = children.size(); i-- > 0;)
          if (label_matches(want, children[i].label)) return i;
      }
    }
    return fallback(rule.direction, children.size());
  }

  std::vector<std::pair<std::string, HeadRule>> entries() const {
    return {rules_.begin(), rules_.end()};
  }

 private:
  static bool label_matches(const std::string& pattern, const std::string& label) {
    if (!pattern.empty() && pattern.back() == '*')
      return label.compare(0, pattern.size() - 1, pattern, 0, pattern.size() - 1) == 0;
    return pattern == label;
  }

  static std::size_t fallback(HeadDirection d, std::size_t n) {
    return d == HeadDirection::LeftToRight ? 0 : n - 1;
  }

  std::map<std::string, HeadRule> rules_;
  HeadDirection default_direction_ = HeadDirection::RightToLeft;
};

// Collins/Magerman-style defaults: S prefers VP, VP the leftmost verb,
// NP the rightmost nominal; unlisted parents take the rightmost child.
inline HeadRules default_head_rules() {
  HeadRules rules;
  rules.set_rule("S", {HeadDirection::LeftToRight, {"VP", "S", "SBAR"}});
  rules.set_rule("SBAR", {HeadDirection::LeftToRight, {"S", "VP"}});
  rules.set_rule("VP", {HeadDirection::LeftToRight, {"VB*", "MD", "VP"}});
  rules.set_rule("NP", {HeadDirection::RightToLeft, {"NN*", "NP", "PRP", "CD"}});
  rules.set_rule("PP", {HeadDirection::LeftToRight, {"IN", "TO", "PP"}});
  rules.set_default_direction(HeadDirection::RightToLeft);
  return rules;
}

// Plain-text table, one line per parent: `LABEL direction child1 child2 ...`
// with direction `left-to-right` or `right-to-left` (aliases `left`/`right`);
// a `__default__ direction` line sets the fallback for unlisted parents.
// Blank lines and lines starting with '#' are ignored.
inline HeadRules parse_head_rules(std::string_view text) {
  HeadRules rules;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    std::string_view line =
        end == std::string_view::npos ? text.substr(start) : text.substr(start, end - start);
    ++line_no;
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;

    std::vector<std::string> tokens = split_ws(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (tokens.size() < 2)
      fail("malformed-head-rules", "line " + std::to_string(line_no) + ": expected direction");
    HeadDirection dir;
    if (tokens[1] == "left-to-right" || tokens[1] == "left")
      dir = HeadDirection::LeftToRight;
    else if (tokens[1] == "right-to-left" || tokens[1] == "right")
      dir = HeadDirection::RightToLeft;
    else
      fail("malformed-head-rules",
           "line " + std::to_string(line_no) + ": unknown direction '" + tokens[1] + "'");
    if (tokens[0] == "__default__") {
      rules.set_default_direction(dir);
      continue;
    }
    rules.set_rule(tokens[0], {dir, {tokens.begin() + 2, tokens.end()}});
  }
  return rules;
}

namespace detail {

// Bottom-up percolation; returns the case-folded head word of the subtree.
inline std::string percolate(const Tree& t, const HeadRules& rules,
                             std::vector<DependencyTuple>& out) {
  if (t.is_leaf()) return lowercase(t.label);
  std::vector<std::string> child_heads;
  child_heads.reserve(t.children.size());
  for (const Tree& c : t.children) child_heads.push_back(percolate(c, rules, out));
  std::size_t head = rules.head_child(t.label, t.children);
  for (std::size_t i = 0; i < t.children.size(); ++i) {
    if (i == head) continue;
    out.push_back({child_heads[head], child_heads[i], t.label});
  }
  return child_heads[head];
}

}  // namespace detail

// Head-percolated (head, dependent, relation) tuples; exactly n-1 for a tree
// with n leaves. No root sentinel tuple is emitted.
inline std::vector<DependencyTuple> dependencies(const Tree& tree, const HeadRules& rules) {
  std::vector<DependencyTuple> out;
  detail::percolate(tree, rules, out);
  return out;
}

}  // namespace sprank
