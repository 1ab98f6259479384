#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "sprank/tree.hpp"
#include "test_support.hpp"

using namespace sprank;

namespace {

const char* kExample = "(S (NP (PRP i)) (VP (VBP like) (NP (NN music))))";

HeadRules example_rules() {
  HeadRules rules;
  rules.set_rule("S", {HeadDirection::LeftToRight, {"VP"}});
  rules.set_rule("VP", {HeadDirection::LeftToRight, {"VB*"}});
  rules.set_rule("NP", {HeadDirection::RightToLeft, {"NN*"}});
  rules.set_default_direction(HeadDirection::RightToLeft);
  return rules;
}

}  // namespace

TEST_CASE("parse_ptb reads the example tree", "[tree]") {
  Tree t = parse_ptb(kExample);
  CHECK(t.label == "S");
  CHECK(t.yield() == std::vector<std::string>{"i", "like", "music"});
  CHECK(t.children.size() == 2);
  CHECK(t.children[0].is_preterminal() == false);  // NP over PRP
  CHECK(t.children[0].children[0].is_preterminal());
}

TEST_CASE("write_ptb round trips", "[tree]") {
  CHECK(write_ptb(parse_ptb(kExample)) == kExample);
  CHECK(write_ptb(parse_ptb("(X a)")) == "(X a)");
  CHECK(write_ptb(parse_ptb("(A (B (X w)))")) == "(A (B (X w)))");
  CHECK(write_ptb(parse_ptb("(X  a\t )")) == "(X a)");
  // label-less wrapper node, as in raw treebank files
  CHECK(write_ptb(parse_ptb("( (S (X a)))")) == "( (S (X a)))");
  CHECK(parse_ptb(write_ptb(parse_ptb(kExample))) == parse_ptb(kExample));
}

TEST_CASE("parse_ptb rejects malformed input", "[tree]") {
  CHECK_THROWS_MATCHES(parse_ptb("(S (NP"), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.category() == "unbalanced-parens";
                       }));
  CHECK_THROWS_MATCHES(parse_ptb(""), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.category() == "empty-input";
                       }));
  CHECK_THROWS_MATCHES(parse_ptb("   \n"), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.category() == "empty-input";
                       }));
  CHECK_THROWS_MATCHES(parse_ptb("(S)"), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.category() == "internal-node-without-children";
                       }));
  CHECK_THROWS_MATCHES(parse_ptb("(X a) (Y b)"), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.category() == "unbalanced-parens";
                       }));
  CHECK_THROWS_AS(parse_ptb("just words"), Error);
}

TEST_CASE("random trees round trip through text", "[tree]") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    Tree t = testsup::random_tree(rng, 1 + testsup::pick_index(rng, 9));
    CHECK(parse_ptb(write_ptb(t)) == t);
  }
}

TEST_CASE("constituents of the example tree", "[tree]") {
  Tree t = parse_ptb(kExample);
  std::vector<Constituent> got = constituents(t, false, true);
  std::vector<Constituent> want = {
      {"S", 0, 3}, {"NP", 0, 1}, {"VP", 1, 3}, {"NP", 2, 3}};
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  CHECK(got == want);
}

TEST_CASE("constituents EDITED and preterminal toggles", "[tree]") {
  // a unary NP above a preterminal is itself a constituent (EVALB keeps
  // unary chains), so only the EDITED node drops out here
  Tree t = parse_ptb("(EDITED (NP (PRP i)))");
  CHECK(constituents(t, false, false) == std::vector<Constituent>{{"NP", 0, 1}});
  Tree only_edited = parse_ptb("(EDITED (PRP i))");
  CHECK(constituents(only_edited, false, false).empty());
  CHECK(constituents(only_edited, true, false) == std::vector<Constituent>{{"PRP", 0, 1}});
  // spans stay on the full yield when EDITED nodes are dropped
  Tree mixed = parse_ptb("(S (EDITED (UH uh)) (NP (PRP i)))");
  std::vector<Constituent> got = constituents(mixed, false, false);
  std::sort(got.begin(), got.end());
  CHECK(got == std::vector<Constituent>{{"NP", 1, 2}, {"S", 0, 2}});
}

TEST_CASE("constituent count matches a brute-force node walk", "[tree]") {
  std::mt19937_64 rng(12);
  testsup::TreePools pools;
  pools.edited_prob = 0.15;
  for (int i = 0; i < 200; ++i) {
    Tree t = testsup::random_tree(rng, 1 + testsup::pick_index(rng, 9), pools);
    CHECK(constituents(t, true, true).size() == testsup::oracle_internal_count(t));
    CHECK(constituents(t, true, false).size() ==
          testsup::oracle_internal_count(t) - count_label(t, "EDITED"));
  }
}

TEST_CASE("constituent spans nest or are disjoint; root covers the yield", "[tree]") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    Tree t = testsup::random_tree(rng, 2 + testsup::pick_index(rng, 7));
    std::vector<Constituent> spans = constituents(t, true, true);
    CHECK(spans.front() == Constituent{t.label, 0, t.yield_size()});
    for (const Constituent& x : spans)
      for (const Constituent& y : spans) {
        bool disjoint = x.end <= y.start || y.end <= x.start;
        bool nested = (x.start <= y.start && y.end <= x.end) ||
                      (y.start <= x.start && x.end <= y.end);
        CHECK((disjoint || nested));
      }
  }
}

TEST_CASE("depth fixtures and oracle", "[tree]") {
  CHECK(depth(parse_ptb("(X a)")) == 1);
  CHECK(depth(parse_ptb(kExample)) == 4);
  std::mt19937_64 rng(14);
  for (int i = 0; i < 200; ++i) {
    Tree t = testsup::random_tree(rng, 1 + testsup::pick_index(rng, 9));
    CHECK(depth(t) == testsup::oracle_depth(t));
  }
}

TEST_CASE("count_label fixtures and label sum", "[tree]") {
  Tree t = parse_ptb(kExample);
  CHECK(count_label(t, "NP") == 2);
  CHECK(count_label(t, "EDITED") == 0);
  std::mt19937_64 rng(15);
  for (int i = 0; i < 100; ++i) {
    Tree r = testsup::random_tree(rng, 1 + testsup::pick_index(rng, 8));
    std::set<std::string> labels;
    for (const Constituent& c : constituents(r, true, true)) labels.insert(c.label);
    std::size_t total = 0;
    for (const std::string& l : labels) total += count_label(r, l);
    CHECK(total == testsup::oracle_internal_count(r));
  }
}

TEST_CASE("dependencies of the example tree under the stated rules", "[tree]") {
  CHECK(dependencies(parse_ptb("(X a)"), example_rules()).empty());
  std::vector<DependencyTuple> got = dependencies(parse_ptb(kExample), example_rules());
  std::vector<DependencyTuple> want = {{"like", "i", "S"}, {"like", "music", "VP"}};
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  CHECK(got == want);
}

TEST_CASE("dependency words are case-folded", "[tree]") {
  Tree t = parse_ptb("(S (NP (PRP I)) (VP (VBP Like) (NP (NN MUSIC))))");
  std::vector<DependencyTuple> got = dependencies(t, example_rules());
  std::sort(got.begin(), got.end());
  CHECK(got == std::vector<DependencyTuple>{{"like", "i", "S"}, {"like", "music", "VP"}});
}

TEST_CASE("dependency count is yield length minus one", "[tree]") {
  std::mt19937_64 rng(16);
  HeadRules left_table;
  left_table.set_default_direction(HeadDirection::LeftToRight);
  std::vector<HeadRules> tables = {example_rules(), default_head_rules(), left_table};
  for (int i = 0; i < 300; ++i) {
    Tree t = testsup::random_tree(rng, 1 + testsup::pick_index(rng, 10));
    for (const HeadRules& rules : tables)
      CHECK(dependencies(t, rules).size() == t.yield_size() - 1);
  }
}

TEST_CASE("head rule priorities and fallbacks are deterministic", "[tree]") {
  HeadRules rules = default_head_rules();
  Tree vp = parse_ptb("(VP (RB really) (VBP like) (NP (NN music)))");
  CHECK(rules.head_child("VP", vp.children) == 1);  // leftmost verb
  Tree np = parse_ptb("(NP (DT the) (JJ red) (NN dog))");
  CHECK(rules.head_child("NP", np.children) == 2);  // rightmost nominal
  Tree unknown = parse_ptb("(FRAG (X a) (Y b))");
  CHECK(rules.head_child("FRAG", unknown.children) == 1);  // default rightmost
  // no priority match: fall back to the rule's direction
  Tree vp2 = parse_ptb("(VP (RB really) (RB fast))");
  CHECK(rules.head_child("VP", vp2.children) == 0);
}

TEST_CASE("head rule table parses from config text", "[tree]") {
  HeadRules rules = parse_head_rules(
      "# comment\n"
      "S left-to-right VP\n"
      "VP left VB* MD\n"
      "NP right-to-left NN* NP\n"
      "__default__ left\n");
  CHECK(rules.default_direction() == HeadDirection::LeftToRight);
  Tree t = parse_ptb(kExample);
  std::vector<DependencyTuple> got = dependencies(t, rules);
  std::sort(got.begin(), got.end());
  CHECK(got == std::vector<DependencyTuple>{{"like", "i", "S"}, {"like", "music", "VP"}});
  CHECK_THROWS_AS(parse_head_rules("NP sideways NN"), Error);
}

TEST_CASE("prune_subtrees removes EDITED subtrees entirely", "[tree]") {
  Tree t = parse_ptb("(S (EDITED (NP (PRP i))) (NP (PRP i)) (VP (VBP like)))");
  auto pruned = prune_subtrees(t, "EDITED");
  REQUIRE(pruned.has_value());
  CHECK(write_ptb(*pruned) == "(S (NP (PRP i)) (VP (VBP like)))");
  CHECK_FALSE(prune_subtrees(parse_ptb("(EDITED (PRP i))"), "EDITED").has_value());
  // parent collapses away when all children are pruned
  Tree nested = parse_ptb("(S (X (EDITED (PRP i))) (NP (NN dog)))");
  CHECK(write_ptb(*prune_subtrees(nested, "EDITED")) == "(S (NP (NN dog)))");
}

TEST_CASE("constituents and dependencies ignore leaf casing", "[tree]") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 50; ++i) {
    Tree t = testsup::random_tree(rng, 2 + testsup::pick_index(rng, 6));
    Tree upper = t;
    std::function<void(Tree&)> upcase = [&](Tree& node) {
      if (node.is_leaf()) {
        for (char& c : node.label)
          if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
        return;
      }
      for (Tree& c : node.children) upcase(c);
    };
    upcase(upper);
    CHECK(constituents(t, false, true) == constituents(upper, false, true));
    CHECK(dependencies(t, default_head_rules()) == dependencies(upper, default_head_rules()));
  }
}
