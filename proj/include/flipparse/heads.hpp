#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flipparse/bundle.hpp"
#include "flipparse/conllu.hpp"
#include "flipparse/profile.hpp"

namespace flipparse {

/// Head-selection scores. Entry (i, j) scores token j as the head of token
/// i, for dependents i in 1..n and heads j in 0..n (0 = root). Row 0 and the
/// diagonal hold -inf.
struct DepScores {
  Eigen::MatrixXd values;

  int token_count() const { return static_cast<int>(values.rows()) - 1; }
  double operator()(int dependent, int head) const { return values(dependent, head); }
};

/// Builds a DepScores from an n × (n+1) block of dependent rows, filling in
/// the unused row 0 and the -inf diagonal.
DepScores make_dep_scores(const Eigen::MatrixXd& dependent_rows);

struct DepPrediction {
  int head = 0;
  std::string relation;

  bool operator==(const DepPrediction&) const = default;
};

struct SuffixPrediction {
  std::string function;
  FeatureBag features;  // Gender / Number / Person

  bool operator==(const SuffixPrediction&) const = default;
};

struct MorphPrediction {
  std::string upos;
  FeatureBag features;
  std::vector<std::string> proclitic_functions;  // inventory order, no duplicates
  std::optional<SuffixPrediction> suffix;

  bool operator==(const MorphPrediction&) const = default;
};

struct SegPrediction {
  std::vector<std::string> prefixes;

  bool operator==(const SegPrediction&) const = default;
};

struct LemmaPrediction {
  std::string lemma;
  bool from_vocab = true;

  bool operator==(const LemmaPrediction&) const = default;
};

struct NerSpan {
  int start = 0;  // 1-based, inclusive
  int end = 0;
  std::string label;

  bool operator==(const NerSpan&) const = default;
};

struct NerPrediction {
  std::vector<std::string> tags;
  std::vector<NerSpan> spans;

  bool operator==(const NerPrediction&) const = default;
};

class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Index of the first maximal element.
int argmax(std::span<const float> logits);

/// Scaled dot-product attention between dependents and candidate heads.
DepScores score_heads(const EmbeddingMatrix& e, const ModelBundle& bundle);

/// Relation per dependent from the linear classifier over [e_i ; e_head(i)].
/// `heads[k]` is the head of token k+1. When the inventory has "root", the
/// root child gets it and no other token can.
std::vector<std::string> label_relations(const EmbeddingMatrix& e, std::span<const int> heads,
                                         const ModelBundle& bundle);

std::vector<LemmaPrediction> predict_lemmas(const EmbeddingMatrix& e,
                                            std::span<const WholeToken> tokens,
                                            const ModelBundle& bundle);

/// Logistic threshold for the multi-label proclitic classifier.
inline constexpr double kProcliticThreshold = 0.5;

std::vector<MorphPrediction> predict_morph(const EmbeddingMatrix& e, const ModelBundle& bundle);

/// Per letter-group logits of one token's binary segmentation classifiers.
struct SegLogits {
  float absent = 0.0f;
  float present = 0.0f;
};

/// Picks the admissible prefix sequence maximizing the summed include /
/// exclude logits. Ties go to the sequence that comes first in
/// enumerate_valid_prefix_sets order.
std::vector<std::string> choose_segmentation(std::string_view surface,
                                             std::span<const SegLogits> logits,
                                             const LanguageProfile& profile);

std::vector<SegPrediction> predict_seg(const EmbeddingMatrix& e,
                                       std::span<const WholeToken> tokens,
                                       const ModelBundle& bundle, const LanguageProfile& profile);

NerPrediction predict_ner(const EmbeddingMatrix& e, const ModelBundle& bundle);

/// BIO tags to spans. An I- tag that does not continue a span of the same
/// class opens a new one.
std::vector<NerSpan> decode_bio(std::span<const std::string> tags);

}  // namespace flipparse
