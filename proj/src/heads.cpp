#include "flipparse/heads.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace flipparse {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_embeddings(const EmbeddingMatrix& e, const ModelBundle& bundle) {
  if (e.dim() != bundle.d) {
    throw std::invalid_argument("embedding width " + std::to_string(e.dim()) +
                                " does not match bundle dimension " + std::to_string(bundle.d));
  }
  if (e.token_count() < 1) throw std::invalid_argument("embedding matrix has no token rows");
  if (!e.rows.allFinite()) throw NumericError("non-finite embedding entry");
}

// Token rows only (drops the root row).
auto token_rows(const EmbeddingMatrix& e) { return e.rows.bottomRows(e.token_count()); }

int argmax_row(const Matrix& m, Eigen::Index row) {
  return argmax(std::span<const float>(m.row(row).data(), static_cast<size_t>(m.cols())));
}

FeatureBag slot_argmax(const Matrix& logits, Eigen::Index row, const std::vector<LabelSlot>& slots) {
  FeatureBag feats;
  Eigen::Index col = 0;
  for (const auto& slot : slots) {
    const auto width = static_cast<size_t>(slot.values.size());
    const int best = argmax(std::span<const float>(logits.row(row).data() + col, width));
    if (slot.values[best] != kNoneLabel) feats[slot.name] = slot.values[best];
    col += static_cast<Eigen::Index>(width);
  }
  return feats;
}

}  // namespace

int argmax(std::span<const float> logits) {
  if (logits.empty()) throw std::invalid_argument("argmax over an empty label inventory");
  int best = 0;
  for (size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = static_cast<int>(i);
  }
  return best;
}

DepScores make_dep_scores(const Eigen::MatrixXd& dependent_rows) {
  const auto n = dependent_rows.rows();
  if (dependent_rows.cols() != n + 1) {
    throw std::invalid_argument("dependent score block must be n x (n+1)");
  }
  DepScores s{Eigen::MatrixXd::Constant(n + 1, n + 1, kNegInf)};
  s.values.bottomRows(n) = dependent_rows;
  for (Eigen::Index i = 1; i <= n; ++i) s.values(i, i) = kNegInf;
  return s;
}

DepScores score_heads(const EmbeddingMatrix& e, const ModelBundle& bundle) {
  check_embeddings(e, bundle);
  const Matrix q = bundle.query.apply(e.rows);
  const Matrix k = bundle.key.apply(e.rows);
  const float scale = 1.0f / std::sqrt(static_cast<float>(bundle.d_head));
  const Matrix raw = (q * k.transpose()) * scale;
  DepScores s{raw.cast<double>()};
  s.values.row(0).setConstant(kNegInf);
  s.values.diagonal().setConstant(kNegInf);
  return s;
}

std::vector<std::string> label_relations(const EmbeddingMatrix& e, std::span<const int> heads,
                                         const ModelBundle& bundle) {
  check_embeddings(e, bundle);
  const int n = e.token_count();
  if (static_cast<int>(heads.size()) != n) {
    throw std::invalid_argument("label_relations: one head per token required");
  }
  const auto& w = bundle.relation_classifier.weight;
  // [e_i ; e_h] W = e_i W_top + e_h W_bottom
  const Matrix dep_part = e.rows * w.topRows(bundle.d);
  const Matrix head_part = e.rows * w.bottomRows(bundle.d);
  // "root" is reserved for the arc from the root and never used elsewhere
  int root_label = -1;
  for (size_t r = 0; r < bundle.relations.size(); ++r) {
    if (bundle.relations[r] == "root") root_label = static_cast<int>(r);
  }
  std::vector<std::string> out;
  out.reserve(heads.size());
  RowVector logits(w.cols());
  for (int i = 1; i <= n; ++i) {
    const int h = heads[i - 1];
    if (h < 0 || h > n || h == i) {
      throw std::out_of_range("label_relations: invalid head " + std::to_string(h) +
                              " for token " + std::to_string(i));
    }
    if (h == 0 && root_label >= 0) {
      out.push_back(bundle.relations[root_label]);
      continue;
    }
    logits = dep_part.row(i) + head_part.row(h) + bundle.relation_classifier.bias;
    if (root_label >= 0) logits[root_label] = -std::numeric_limits<float>::infinity();
    out.push_back(bundle.relations[argmax(std::span<const float>(logits.data(),
                                                                  static_cast<size_t>(logits.size())))]);
  }
  return out;
}

std::vector<LemmaPrediction> predict_lemmas(const EmbeddingMatrix& e,
                                            std::span<const WholeToken> tokens,
                                            const ModelBundle& bundle) {
  check_embeddings(e, bundle);
  if (bundle.vocab.empty()) throw std::invalid_argument("predict_lemmas: empty vocabulary");
  if (static_cast<int>(tokens.size()) != e.token_count()) {
    throw std::invalid_argument("predict_lemmas: token count differs from embedding rows");
  }
  const Matrix logits = bundle.lm_head.apply(token_rows(e));
  std::vector<LemmaPrediction> out;
  out.reserve(tokens.size());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int best = argmax_row(logits, i);
    if (static_cast<std::uint32_t>(best) == bundle.blank_id) {
      out.push_back({tokens[i].surface, false});
    } else {
      out.push_back({bundle.vocab[best], true});
    }
  }
  return out;
}

std::vector<MorphPrediction> predict_morph(const EmbeddingMatrix& e, const ModelBundle& bundle) {
  check_embeddings(e, bundle);
  const Matrix x = token_rows(e);
  const Matrix pos = bundle.pos_classifier.apply(x);
  const Matrix proclitic = bundle.proclitic_classifier.apply(x);
  const Matrix feats = bundle.feature_classifier.apply(x);
  const Matrix suffix = bundle.suffix_classifier.apply(x);

  std::vector<MorphPrediction> out(static_cast<size_t>(x.rows()));
  std::vector<Eigen::Index> suffixed;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    auto& m = out[static_cast<size_t>(i)];
    m.upos = bundle.upos_labels[argmax_row(pos, i)];
    for (Eigen::Index c = 0; c < proclitic.cols(); ++c) {
      const double p = 1.0 / (1.0 + std::exp(-static_cast<double>(proclitic(i, c))));
      if (p > kProcliticThreshold) m.proclitic_functions.push_back(bundle.proclitic_labels[c]);
    }
    m.features = slot_argmax(feats, i, bundle.feature_slots);
    const int suffix_label = argmax_row(suffix, i);
    if (suffix_label != 0) {
      m.suffix = SuffixPrediction{bundle.suffix_labels[suffix_label], {}};
      suffixed.push_back(i);
    }
  }
  if (suffixed.empty()) return out;
  // the suffix-feature classifier only runs for tokens predicted to carry a suffix
  Matrix rows(static_cast<Eigen::Index>(suffixed.size()), x.cols());
  for (size_t k = 0; k < suffixed.size(); ++k) rows.row(static_cast<Eigen::Index>(k)) = x.row(suffixed[k]);
  const Matrix sf = bundle.suffix_feature_classifier.apply(rows);
  for (size_t k = 0; k < suffixed.size(); ++k) {
    out[static_cast<size_t>(suffixed[k])].suffix->features =
        slot_argmax(sf, static_cast<Eigen::Index>(k), bundle.suffix_feature_slots);
  }
  return out;
}

namespace {

struct SegChoice {
  double gain = 0.0;
  std::vector<int> groups;
};

class SegSearch {
 public:
  SegSearch(std::string_view surface, std::span<const SegLogits> logits,
            const LanguageProfile& profile)
      : surface_(surface), logits_(logits), profile_(profile) {}

  // Best continuation from byte offset `pos` after a group of rank `last_rank`.
  const SegChoice& best(size_t pos, int last_rank, int last_group) {
    auto key = std::make_pair(pos, last_group);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    SegChoice choice;  // stopping here
    const std::string_view rest = surface_.substr(pos);
    for (size_t g = 0; g < profile_.letter_groups.size(); ++g) {
      const auto& group = profile_.letter_groups[g];
      if (group.rank <= last_rank) continue;
      if (rest.size() <= group.text.size() || !rest.starts_with(group.text)) continue;
      const SegChoice& tail = best(pos + group.text.size(), group.rank, static_cast<int>(g));
      const double gain = static_cast<double>(logits_[g].present) -
                          static_cast<double>(logits_[g].absent) + tail.gain;
      if (gain > choice.gain) {
        choice.gain = gain;
        choice.groups.assign(1, static_cast<int>(g));
        choice.groups.insert(choice.groups.end(), tail.groups.begin(), tail.groups.end());
      }
    }
    return memo_.emplace(key, std::move(choice)).first->second;
  }

 private:
  std::string_view surface_;
  std::span<const SegLogits> logits_;
  const LanguageProfile& profile_;
  std::map<std::pair<size_t, int>, SegChoice> memo_;
};

}  // namespace

std::vector<std::string> choose_segmentation(std::string_view surface,
                                             std::span<const SegLogits> logits,
                                             const LanguageProfile& profile) {
  if (logits.size() != profile.letter_groups.size()) {
    throw std::invalid_argument("choose_segmentation: one logit pair per letter-group required");
  }
  SegSearch search(surface, logits, profile);
  const SegChoice& choice = search.best(0, std::numeric_limits<int>::min(), -1);
  std::vector<std::string> prefixes;
  for (int g : choice.groups) prefixes.push_back(profile.letter_groups[g].text);
  return prefixes;
}

std::vector<SegPrediction> predict_seg(const EmbeddingMatrix& e,
                                       std::span<const WholeToken> tokens,
                                       const ModelBundle& bundle, const LanguageProfile& profile) {
  check_embeddings(e, bundle);
  if (bundle.seg_groups.size() != profile.letter_groups.size()) {
    throw std::invalid_argument("predict_seg: bundle has " +
                                std::to_string(bundle.seg_groups.size()) +
                                " segmentation heads but the profile has " +
                                std::to_string(profile.letter_groups.size()) + " letter-groups");
  }
  for (size_t g = 0; g < bundle.seg_groups.size(); ++g) {
    if (bundle.seg_groups[g] != profile.letter_groups[g].text) {
      throw std::invalid_argument("predict_seg: segmentation head " + std::to_string(g) +
                                  " is '" + bundle.seg_groups[g] + "', profile expects '" +
                                  profile.letter_groups[g].text + "'");
    }
  }
  if (static_cast<int>(tokens.size()) != e.token_count()) {
    throw std::invalid_argument("predict_seg: token count differs from embedding rows");
  }
  // one wide product instead of a narrow one per group
  const auto groups = static_cast<Eigen::Index>(bundle.seg_classifiers.size());
  LinearLayer stacked(bundle.d, static_cast<int>(2 * groups));
  for (Eigen::Index g = 0; g < groups; ++g) {
    stacked.weight.middleCols(2 * g, 2) = bundle.seg_classifiers[g].weight;
    stacked.bias.segment(2 * g, 2) = bundle.seg_classifiers[g].bias;
  }
  const Matrix all = stacked.apply(token_rows(e));

  std::vector<SegPrediction> out;
  out.reserve(tokens.size());
  std::vector<SegLogits> logits(static_cast<size_t>(groups));
  for (size_t i = 0; i < tokens.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    for (Eigen::Index g = 0; g < groups; ++g) {
      logits[static_cast<size_t>(g)] = {all(row, 2 * g), all(row, 2 * g + 1)};
    }
    out.push_back({choose_segmentation(tokens[i].surface, logits, profile)});
  }
  return out;
}

NerPrediction predict_ner(const EmbeddingMatrix& e, const ModelBundle& bundle) {
  check_embeddings(e, bundle);
  const Matrix logits = bundle.ner_classifier.apply(token_rows(e));
  NerPrediction out;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    out.tags.push_back(bundle.ner_labels[argmax_row(logits, i)]);
  }
  out.spans = decode_bio(out.tags);
  return out;
}

std::vector<NerSpan> decode_bio(std::span<const std::string> tags) {
  std::vector<NerSpan> spans;
  bool open = false;
  for (size_t i = 0; i < tags.size(); ++i) {
    const std::string& tag = tags[i];
    const int position = static_cast<int>(i) + 1;
    if (tag.size() < 3 || tag[1] != '-' || (tag[0] != 'B' && tag[0] != 'I')) {
      open = false;  // O or anything unrecognized
      continue;
    }
    const std::string label = tag.substr(2);
    if (tag[0] == 'I' && open && spans.back().label == label) {
      spans.back().end = position;
      continue;
    }
    spans.push_back({position, position, label});
    open = true;
  }
  return spans;
}

}  // namespace flipparse
