#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sprank/alignment.hpp"
#include "sprank/features.hpp"
#include "sprank/score.hpp"
#include "sprank/tree.hpp"
#include "sprank/util.hpp"

namespace sprank {

// One ASR hypothesis with its parse and per-objective evaluation results.
struct Hypothesis {
  std::vector<std::string> words;
  double asr_score = 0.0;  // log domain
  Tree parse;
  double parse_score = 0.0;
  std::optional<std::vector<WordTiming>> timings;

  // Filled when the owning set is prepared/scored.
  SentenceFeatures features{};
  std::array<F1Score, kNumObjectives> target_f1{};
  EditSummary edits{};
  bool scored = false;
};

// One utterance: gold tree plus up to 10 hypotheses in ASR rank order.
struct HypothesisSet {
  std::string id;
  Tree gold;
  bool has_transcription_error = false;
  std::vector<Hypothesis> hypotheses;
};

// Pairwise-difference sample: F_ab = f_a - f_b, label 1 iff F1(a) > F1(b).
struct PairSample {
  std::vector<double> diff;
  int label = 0;
};

// Per set: the single max-|F1 difference| pair (ties to the lexicographically
// smallest index pair) plus `random_pairs` others sampled uniformly without
// replacement, seeded from (rng_seed, sentence id) so results are independent
// of processing order. Both orientations of every selected pair are emitted;
// equal-F1 pairs keep label 0 in both orientations unless dropped.
inline std::vector<PairSample> build_pairs(const HypothesisSet& set, Objective objective,
                                           const FeaturePreset& preset, std::uint64_t rng_seed,
                                           std::size_t random_pairs = 10,
                                           bool drop_equal = false) {
  const std::size_t k = set.hypotheses.size();
  if (k < 2) return {};

  std::vector<std::vector<double>> masked(k);
  std::vector<double> f1(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Hypothesis& h = set.hypotheses[i];
    if (!h.scored) fail("not-scored", "hypothesis set '" + set.id + "' lacks target F1");
    masked[i] = apply_preset(h.features, preset);
    f1[i] = h.target_f1[static_cast<std::size_t>(objective)].f1;
  }

  std::vector<std::pair<std::size_t, std::size_t>> pool;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) pool.emplace_back(i, j);

  std::size_t max_at = 0;
  double max_diff = -1.0;
  for (std::size_t p = 0; p < pool.size(); ++p) {
    double d = std::fabs(f1[pool[p].first] - f1[pool[p].second]);
    if (d > max_diff) {
      max_diff = d;
      max_at = p;
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> selected{pool[max_at]};
  pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(max_at));
  std::mt19937_64 rng(mix_seed(rng_seed, fnv1a64(set.id)));
  const std::size_t draws = std::min(random_pairs, pool.size());
  for (std::size_t d = 0; d < draws; ++d) {
    std::size_t pick = d + uniform_below(rng, pool.size() - d);
    std::swap(pool[d], pool[pick]);
    selected.push_back(pool[d]);
  }

  std::vector<PairSample> out;
  out.reserve(selected.size() * 2);
  for (auto [a, b] : selected) {
    if (drop_equal && f1[a] == f1[b]) continue;
    PairSample forward, reverse;
    forward.diff.resize(masked[a].size());
    reverse.diff.resize(masked[a].size());
    for (std::size_t i = 0; i < masked[a].size(); ++i) {
      forward.diff[i] = masked[a][i] - masked[b][i];
      reverse.diff[i] = -forward.diff[i];
    }
    forward.label = f1[a] > f1[b] ? 1 : 0;
    reverse.label = f1[b] > f1[a] ? 1 : 0;
    out.push_back(std::move(forward));
    out.push_back(std::move(reverse));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear pair classifiers

enum class RankerKind { Logistic, Hinge };

inline const char* ranker_kind_name(RankerKind k) {
  return k == RankerKind::Logistic ? "logistic" : "hinge";
}

inline RankerKind ranker_kind_from_name(std::string_view name) {
  if (name == "logistic") return RankerKind::Logistic;
  if (name == "hinge") return RankerKind::Hinge;
  fail("unknown-kind", std::string(name));
}

struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;  // zero-variance features get stddev 1

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean[i]) / stddev[i];
    return z;
  }
};

struct RankerModel {
  RankerKind kind = RankerKind::Logistic;
  Objective objective = Objective::LabeledBrk;
  FeaturePreset preset;
  double C = 1.0;
  Standardization standardization;
  std::vector<double> weights;
  double bias = 0.0;
};

// Standardized training matrix with +-1 targets.
struct PairDataset {
  std::vector<std::vector<double>> x;
  std::vector<double> target;  // +1 / -1
  std::size_t dim = 0;
};

inline double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// log(1 + exp(-m)) without overflow
inline double log1p_exp_neg(double m) {
  return m >= 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

// Mean logistic loss plus (1/C) * ||w||^2; bias unregularized. Larger C means
// weaker regularization.
inline double logistic_objective(const PairDataset& data, std::span<const double> w, double bias,
                                 double C) {
  double loss = 0.0;
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    double margin = bias;
    for (std::size_t j = 0; j < data.dim; ++j) margin += w[j] * data.x[i][j];
    loss += log1p_exp_neg(data.target[i] * margin);
  }
  loss /= static_cast<double>(data.x.size());
  double reg = 0.0;
  for (double wj : w) reg += wj * wj;
  return loss + reg / C;
}

inline void logistic_gradient(const PairDataset& data, std::span<const double> w, double bias,
                              double C, std::span<double> grad_w, double& grad_bias) {
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  grad_bias = 0.0;
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    double margin = bias;
    for (std::size_t j = 0; j < data.dim; ++j) margin += w[j] * data.x[i][j];
    double g = -data.target[i] * sigmoid(-data.target[i] * margin);
    for (std::size_t j = 0; j < data.dim; ++j) grad_w[j] += g * data.x[i][j];
    grad_bias += g;
  }
  const double inv_n = 1.0 / static_cast<double>(data.x.size());
  for (std::size_t j = 0; j < data.dim; ++j) grad_w[j] = grad_w[j] * inv_n + 2.0 * w[j] / C;
  grad_bias *= inv_n;
}

inline double hinge_objective(const PairDataset& data, std::span<const double> w, double bias,
                              double C) {
  double loss = 0.0;
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    double margin = bias;
    for (std::size_t j = 0; j < data.dim; ++j) margin += w[j] * data.x[i][j];
    loss += std::max(0.0, 1.0 - data.target[i] * margin);
  }
  loss /= static_cast<double>(data.x.size());
  double reg = 0.0;
  for (double wj : w) reg += wj * wj;
  return loss + reg / C;
}

inline void hinge_gradient(const PairDataset& data, std::span<const double> w, double bias,
                           double C, std::span<double> grad_w, double& grad_bias) {
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  grad_bias = 0.0;
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    double margin = bias;
    for (std::size_t j = 0; j < data.dim; ++j) margin += w[j] * data.x[i][j];
    if (data.target[i] * margin < 1.0) {
      for (std::size_t j = 0; j < data.dim; ++j) grad_w[j] -= data.target[i] * data.x[i][j];
      grad_bias -= data.target[i];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(data.x.size());
  for (std::size_t j = 0; j < data.dim; ++j) grad_w[j] = grad_w[j] * inv_n + 2.0 * w[j] / C;
  grad_bias *= inv_n;
}

struct TrainOptions {
  RankerKind kind = RankerKind::Logistic;
  double C = 1.0;
  std::size_t epochs = 500;
  double learning_rate = 0.5;
  double tolerance = 1e-8;
};

inline PairDataset standardize_pairs(std::span<const PairSample> samples,
                                     Standardization& standardization) {
  const std::size_t n = samples.size();
  const std::size_t dim = samples[0].diff.size();
  standardization.mean.assign(dim, 0.0);
  standardization.stddev.assign(dim, 0.0);
  for (const PairSample& s : samples)
    for (std::size_t j = 0; j < dim; ++j) standardization.mean[j] += s.diff[j];
  for (std::size_t j = 0; j < dim; ++j) standardization.mean[j] /= static_cast<double>(n);
  for (const PairSample& s : samples)
    for (std::size_t j = 0; j < dim; ++j) {
      double d = s.diff[j] - standardization.mean[j];
      standardization.stddev[j] += d * d;
    }
  for (std::size_t j = 0; j < dim; ++j) {
    standardization.stddev[j] = std::sqrt(standardization.stddev[j] / static_cast<double>(n));
    if (standardization.stddev[j] == 0.0) standardization.stddev[j] = 1.0;
  }

  PairDataset data;
  data.dim = dim;
  data.x.reserve(n);
  data.target.reserve(n);
  for (const PairSample& s : samples) {
    data.x.push_back(standardization.apply(s.diff));
    data.target.push_back(s.label == 1 ? 1.0 : -1.0);
  }
  return data;
}

// Full-batch gradient descent on the regularized objective; converged when
// the objective change drops below the tolerance.
inline RankerModel train(std::span<const PairSample> samples, Objective objective,
                         const FeaturePreset& preset, const TrainOptions& options) {
  if (samples.empty()) fail("empty-training-set", "no pair samples");
  const std::size_t dim = preset.arity();
  for (const PairSample& s : samples)
    if (s.diff.size() != dim)
      fail("arity-mismatch", "sample arity " + std::to_string(s.diff.size()) +
                                 " != preset arity " + std::to_string(dim));

  RankerModel model;
  model.kind = options.kind;
  model.objective = objective;
  model.preset = preset;
  model.C = options.C;
  model.weights.assign(dim, 0.0);
  model.bias = 0.0;

  PairDataset data = standardize_pairs(samples, model.standardization);

  const bool logistic = options.kind == RankerKind::Logistic;
  auto objective_at = [&](const std::vector<double>& w, double b) {
    return logistic ? logistic_objective(data, w, b, options.C)
                    : hinge_objective(data, w, b, options.C);
  };

  std::vector<double> grad(dim);
  double grad_bias = 0.0;
  double step = options.learning_rate;
  double prev = objective_at(model.weights, model.bias);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    if (logistic)
      logistic_gradient(data, model.weights, model.bias, options.C, grad, grad_bias);
    else
      hinge_gradient(data, model.weights, model.bias, options.C, grad, grad_bias);

    // monotone step: halve until the objective stops increasing, so strong
    // regularization (small C) cannot blow the iterate up
    std::vector<double> next(dim);
    double next_bias = 0.0;
    double now = prev;
    while (step > 1e-14) {
      for (std::size_t j = 0; j < dim; ++j) next[j] = model.weights[j] - step * grad[j];
      next_bias = model.bias - step * grad_bias;
      now = objective_at(next, next_bias);
      if (now <= prev) break;
      step /= 2.0;
    }
    if (now > prev) break;  // no acceptable step left
    model.weights = next;
    model.bias = next_bias;
    if (std::fabs(prev - now) < options.tolerance) break;
    prev = now;
  }
  return model;
}

// Classifier output for a raw pair-difference vector.
inline double predict_pair(const RankerModel& model, std::span<const double> diff) {
  if (diff.size() != model.weights.size())
    fail("arity-mismatch", "input arity " + std::to_string(diff.size()) + " != model arity " +
                               std::to_string(model.weights.size()));
  std::vector<double> z = model.standardization.apply(diff);
  double margin = model.bias;
  for (std::size_t j = 0; j < z.size(); ++j) margin += model.weights[j] * z[j];
  return sigmoid(margin);
}

// P(a) = C(f_a): the hypothesis paired against an all-zero feature vector.
// For the hinge kind this is a monotone score, not a calibrated probability.
inline double score_pointwise(const RankerModel& model, std::span<const double> masked_features) {
  return predict_pair(model, masked_features);
}

inline std::size_t select_pointwise(const RankerModel& model, const HypothesisSet& set) {
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < set.hypotheses.size(); ++i) {
    std::vector<double> masked = apply_preset(set.hypotheses[i].features, model.preset);
    double s = score_pointwise(model, masked);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

// Sequential tournament in ASR rank order; the champion survives a challenger
// iff the classifier puts it at or above 0.5.
inline std::size_t select_pairwise(const RankerModel& model, const HypothesisSet& set) {
  std::size_t champion = 0;
  std::vector<double> champ_feats =
      set.hypotheses.empty() ? std::vector<double>{}
                             : apply_preset(set.hypotheses[0].features, model.preset);
  for (std::size_t i = 1; i < set.hypotheses.size(); ++i) {
    std::vector<double> chall_feats = apply_preset(set.hypotheses[i].features, model.preset);
    std::vector<double> diff(champ_feats.size());
    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = champ_feats[j] - chall_feats[j];
    if (predict_pair(model, diff) < 0.5) {
      champion = i;
      champ_feats = std::move(chall_feats);
    }
  }
  return champion;
}

inline std::size_t select_oracle(const HypothesisSet& set, Objective objective) {
  std::size_t best = 0;
  double best_f1 = -1.0;
  for (std::size_t i = 0; i < set.hypotheses.size(); ++i) {
    if (!set.hypotheses[i].scored) fail("not-scored", "hypothesis set '" + set.id + "'");
    double f1 = set.hypotheses[i].target_f1[static_cast<std::size_t>(objective)].f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best = i;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Model persistence: versioned plain text; doubles printed exactly.

inline constexpr std::string_view kModelHeader = "sprank-ranker v1";

inline std::string save_model(const RankerModel& model) {
  std::string out;
  out += kModelHeader;
  out += "\nkind ";
  out += ranker_kind_name(model.kind);
  out += "\nobjective ";
  out += objective_name(model.objective);
  out += "\npreset ";
  out += model.preset.name;
  out += "\nC ";
  out += format_double(model.C);
  out += "\ndim ";
  out += std::to_string(model.weights.size());
  out += "\nfeatures";
  for (const std::string& name : model.preset.feature_names()) out += " " + name;
  auto row = [&](std::string_view tag, std::span<const double> values) {
    out += "\n";
    out += tag;
    for (double v : values) out += " " + format_double(v);
  };
  row("mean", model.standardization.mean);
  row("stddev", model.standardization.stddev);
  row("weights", model.weights);
  out += "\nbias " + format_double(model.bias);
  out += "\n";
  return out;
}

inline RankerModel load_model(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.empty() || lines[0] != kModelHeader)
    fail("malformed-record", "missing model header '" + std::string(kModelHeader) + "'");

  auto field = [&](std::size_t idx, std::string_view tag) -> std::vector<std::string> {
    if (idx >= lines.size()) fail("malformed-record", "model truncated at '" + std::string(tag) + "'");
    std::vector<std::string> tokens = split_ws(lines[idx]);
    if (tokens.empty() || tokens[0] != tag)
      fail("malformed-record", "expected model field '" + std::string(tag) + "'");
    return tokens;
  };

  RankerModel model;
  model.kind = ranker_kind_from_name(field(1, "kind").at(1));
  model.objective = objective_from_name(field(2, "objective").at(1));
  std::string preset_name = field(3, "preset").at(1);
  model.C = std::stod(field(4, "C").at(1));
  std::size_t dim = std::stoul(field(5, "dim").at(1));

  std::vector<std::string> names = field(6, "features");
  if (names.size() != dim + 1) fail("malformed-record", "feature-name count != dim");
  FeaturePreset preset;
  preset.name = std::move(preset_name);
  for (std::size_t i = 1; i < names.size(); ++i) {
    bool known = false;
    for (std::size_t j = 0; j < kNumFeatures; ++j)
      if (names[i] == kFeatureNames[j]) {
        preset.mask[j] = true;
        known = true;
        break;
      }
    if (!known) fail("malformed-record", "unknown feature '" + names[i] + "'");
  }
  if (preset.arity() != dim) fail("malformed-record", "feature mask arity != dim");
  model.preset = std::move(preset);

  auto doubles = [&](std::size_t idx, std::string_view tag) {
    std::vector<std::string> tokens = field(idx, tag);
    if (tokens.size() != dim + 1)
      fail("malformed-record", std::string(tag) + " count != dim");
    std::vector<double> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = std::stod(tokens[i + 1]);
    return out;
  };
  model.standardization.mean = doubles(7, "mean");
  model.standardization.stddev = doubles(8, "stddev");
  model.weights = doubles(9, "weights");
  model.bias = std::stod(field(10, "bias").at(1));
  return model;
}

}  // namespace sprank
