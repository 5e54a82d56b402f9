#include "flipparse/pipeline.hpp"

#include "flipparse/scoring.hpp"

namespace flipparse {

Pipeline::Pipeline(const ModelBundle& bundle, const LanguageProfile& profile,
                   const EmbeddingStore* store)
    : bundle_(bundle), profile_(profile), store_(store) {
  bundle_.validate();
  if (bundle_.seg_groups.size() != profile_.letter_groups.size()) {
    throw std::invalid_argument("bundle has " + std::to_string(bundle_.seg_groups.size()) +
                                " segmentation heads, profile " + profile_.name + " has " +
                                std::to_string(profile_.letter_groups.size()) + " letter-groups");
  }
  if (store_ != nullptr && store_->dim() != bundle_.d) {
    throw std::invalid_argument("embedding dump width " + std::to_string(store_->dim()) +
                                " does not match bundle dimension " + std::to_string(bundle_.d));
  }
}

EmbeddingMatrix Pipeline::embed(std::span<const WholeToken> tokens) const {
  return store_ != nullptr ? flipparse::embed(tokens, *store_) : flipparse::embed(tokens, bundle_);
}

ExpertOutputs Pipeline::run_experts(const EmbeddingMatrix& e, std::span<const WholeToken> tokens,
                                    std::span<const Expert> order) const {
  ExpertOutputs out;
  for (Expert expert : order) {
    switch (expert) {
      case Expert::kDependency:
        out.heads = mst_decode(score_heads(e, bundle_));
        out.relations = label_relations(e, out.heads, bundle_);
        break;
      case Expert::kLemma: out.lemmas = predict_lemmas(e, tokens, bundle_); break;
      case Expert::kMorphology: out.morphs = predict_morph(e, bundle_); break;
      case Expert::kSegmentation: out.segs = predict_seg(e, tokens, bundle_, profile_); break;
      case Expert::kNer: out.ner = predict_ner(e, bundle_); break;
    }
  }
  return out;
}

ParseResult Pipeline::parse_embedded(const EmbeddingMatrix& e, std::span<const WholeToken> tokens,
                                     bool with_ner) const {
  std::vector<Expert> order = {Expert::kDependency, Expert::kLemma, Expert::kMorphology,
                               Expert::kSegmentation};
  if (with_ner) order.push_back(Expert::kNer);
  ExpertOutputs x = run_experts(e, tokens, order);

  ParseResult r;
  r.input.tokens.assign(tokens.begin(), tokens.end());
  for (size_t i = 0; i < x.heads.size(); ++i) r.input.deps.push_back({x.heads[i], x.relations[i]});
  r.input.morphs = std::move(x.morphs);
  r.input.segs = std::move(x.segs);
  r.input.lemmas = std::move(x.lemmas);
  r.ner = std::move(x.ner);
  r.sentence = convert_to_ud(r.input, profile_);
  if (with_ner) set_ner_tags(r.sentence, r.ner.tags);
  return r;
}

ParseResult Pipeline::parse(std::span<const WholeToken> tokens, bool with_ner) const {
  return parse_embedded(embed(tokens), tokens, with_ner);
}

}  // namespace flipparse
