#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sprank/util.hpp"

namespace sprank {

// Maximal run of equal (case-folded) words shared by two sequences.
struct MatchingBlock {
  std::size_t a_start = 0;
  std::size_t b_start = 0;
  std::size_t length = 0;

  bool operator==(const MatchingBlock&) const = default;
};

namespace detail {

struct GestaltMatcher {
  std::vector<std::string> a;
  std::vector<std::string> b;
  std::map<std::string, std::vector<std::size_t>> b_positions;

  GestaltMatcher(std::span<const std::string> a_words, std::span<const std::string> b_words) {
    a.reserve(a_words.size());
    for (const auto& w : a_words) a.push_back(lowercase(w));
    b.reserve(b_words.size());
    for (const auto& w : b_words) b.push_back(lowercase(w));
    for (std::size_t j = 0; j < b.size(); ++j) b_positions[b[j]].push_back(j);
  }

  // Longest block within [alo,ahi) x [blo,bhi); ties fall to the smallest
  // a_start, then smallest b_start.
  MatchingBlock longest(std::size_t alo, std::size_t ahi, std::size_t blo, std::size_t bhi) const {
    MatchingBlock best{alo, blo, 0};
    std::map<std::size_t, std::size_t> run_ending_at;  // b index -> run length
    for (std::size_t i = alo; i < ahi; ++i) {
      std::map<std::size_t, std::size_t> next;
      auto it = b_positions.find(a[i]);
      if (it != b_positions.end()) {
        for (std::size_t j : it->second) {
          if (j < blo || j >= bhi) continue;
          std::size_t k = 1;
          if (j > blo) {
            auto prev = run_ending_at.find(j - 1);
            if (prev != run_ending_at.end()) k = prev->second + 1;
          }
          next[j] = k;
          if (k > best.length) best = {i - k + 1, j - k + 1, k};
        }
      }
      run_ending_at.swap(next);
    }
    return best;
  }

  void blocks(std::size_t alo, std::size_t ahi, std::size_t blo, std::size_t bhi,
              std::vector<MatchingBlock>& out) const {
    MatchingBlock block = longest(alo, ahi, blo, bhi);
    if (block.length == 0) return;
    blocks(alo, block.a_start, blo, block.b_start, out);
    out.push_back(block);
    blocks(block.a_start + block.length, ahi, block.b_start + block.length, bhi, out);
  }
};

}  // namespace detail

// Ratcliff-Obershelp recursion: longest common block, then the left and right
// remainders. Blocks come back in ascending order in both sequences. No junk
// heuristic is applied.
inline std::vector<MatchingBlock> matching_blocks(std::span<const std::string> a,
                                                  std::span<const std::string> b) {
  detail::GestaltMatcher matcher(a, b);
  std::vector<MatchingBlock> out;
  matcher.blocks(0, a.size(), 0, b.size(), out);
  return out;
}

// Injective, order-preserving partial map from hypothesis word index to gold
// word index; mapped pairs have equal case-folded forms.
class AlignmentMap {
 public:
  AlignmentMap() = default;
  explicit AlignmentMap(std::size_t hyp_size) : to_gold_(hyp_size, kUnmapped) {}

  static AlignmentMap identity(std::size_t n) {
    AlignmentMap m(n);
    for (std::size_t i = 0; i < n; ++i) m.to_gold_[i] = static_cast<std::ptrdiff_t>(i);
    return m;
  }

  void set(std::size_t hyp_index, std::size_t gold_index) {
    if (hyp_index >= to_gold_.size()) to_gold_.resize(hyp_index + 1, kUnmapped);
    to_gold_[hyp_index] = static_cast<std::ptrdiff_t>(gold_index);
  }

  std::optional<std::size_t> map(std::size_t hyp_index) const {
    if (hyp_index >= to_gold_.size() || to_gold_[hyp_index] == kUnmapped) return std::nullopt;
    return static_cast<std::size_t>(to_gold_[hyp_index]);
  }

  std::size_t domain_size() const { return to_gold_.size(); }

  std::size_t mapped_count() const {
    std::size_t n = 0;
    for (auto v : to_gold_)
      if (v != kUnmapped) ++n;
    return n;
  }

  std::size_t max_target() const {
    std::ptrdiff_t m = -1;
    for (auto v : to_gold_) m = std::max(m, v);
    return m < 0 ? 0 : static_cast<std::size_t>(m) + 1;
  }

  AlignmentMap inverse(std::size_t gold_size) const {
    AlignmentMap inv(gold_size);
    for (std::size_t i = 0; i < to_gold_.size(); ++i)
      if (to_gold_[i] != kUnmapped) inv.to_gold_[to_gold_[i]] = static_cast<std::ptrdiff_t>(i);
    return inv;
  }

 private:
  static constexpr std::ptrdiff_t kUnmapped = -1;
  std::vector<std::ptrdiff_t> to_gold_;
};

inline AlignmentMap word_alignment(std::span<const std::string> gold,
                                   std::span<const std::string> hyp) {
  AlignmentMap map(hyp.size());
  for (const MatchingBlock& block : matching_blocks(gold, hyp)) {
    for (std::size_t k = 0; k < block.length; ++k) map.set(block.b_start + k, block.a_start + k);
  }
  return map;
}

// Minimal-edit counts; ties resolved toward fewer substitutions, then fewer
// deletions, so the component counts are deterministic.
struct EditSummary {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t reference_length = 0;
  double wer = 0.0;

  std::size_t distance() const { return substitutions + insertions + deletions; }

  EditSummary& operator+=(const EditSummary& other) {
    substitutions += other.substitutions;
    insertions += other.insertions;
    deletions += other.deletions;
    reference_length += other.reference_length;
    wer = reference_length == 0 ? 0.0 : static_cast<double>(distance()) / reference_length;
    return *this;
  }
};

inline EditSummary wer(std::span<const std::string> reference,
                       std::span<const std::string> hypothesis) {
  if (reference.empty() && !hypothesis.empty())
    fail("empty-reference", "WER undefined for an empty reference");

  struct Cost {
    std::size_t total, subs, dels;
    bool operator<(const Cost& o) const {
      if (total != o.total) return total < o.total;
      if (subs != o.subs) return subs < o.subs;
      return dels < o.dels;
    }
  };

  std::vector<std::string> ref(reference.size()), hyp(hypothesis.size());
  for (std::size_t i = 0; i < reference.size(); ++i) ref[i] = lowercase(reference[i]);
  for (std::size_t j = 0; j < hypothesis.size(); ++j) hyp[j] = lowercase(hypothesis[j]);

  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<Cost> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = {j, 0, 0};  // insertions only
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = {i, 0, i};  // deletions only
    for (std::size_t j = 1; j <= m; ++j) {
      Cost best = ref[i - 1] == hyp[j - 1]
                      ? prev[j - 1]
                      : Cost{prev[j - 1].total + 1, prev[j - 1].subs + 1, prev[j - 1].dels};
      Cost del{prev[j].total + 1, prev[j].subs, prev[j].dels + 1};
      Cost ins{cur[j - 1].total + 1, cur[j - 1].subs, cur[j - 1].dels};
      if (del < best) best = del;
      if (ins < best) best = ins;
      cur[j] = best;
    }
    prev.swap(cur);
  }

  const Cost& final_cost = prev[m];
  EditSummary out;
  out.substitutions = final_cost.subs;
  out.deletions = final_cost.dels;
  out.insertions = final_cost.total - final_cost.subs - final_cost.dels;
  out.reference_length = n;
  out.wer = n == 0 ? 0.0 : static_cast<double>(final_cost.total) / static_cast<double>(n);
  return out;
}

}  // namespace sprank
