#pragma once

#include <array>
#include <span>
#include <vector>

#include "flipparse/bundle.hpp"
#include "flipparse/heads.hpp"
#include "flipparse/profile.hpp"
#include "flipparse/synthesis.hpp"
#include "flipparse/tree_decoder.hpp"

namespace flipparse {

enum class Expert { kDependency, kLemma, kMorphology, kSegmentation, kNer };

inline constexpr std::array<Expert, 5> kAllExperts = {
    Expert::kDependency, Expert::kLemma, Expert::kMorphology, Expert::kSegmentation, Expert::kNer};

/// Raw outputs of the five experts for one sentence.
struct ExpertOutputs {
  std::vector<int> heads;  // MST-decoded
  std::vector<std::string> relations;
  std::vector<LemmaPrediction> lemmas;
  std::vector<MorphPrediction> morphs;
  std::vector<SegPrediction> segs;
  NerPrediction ner;

  bool operator==(const ExpertOutputs&) const = default;
};

struct ParseResult {
  SynthesisInput input;
  NerPrediction ner;
  UdSentence sentence;
};

/// Embedding, the five experts, tree decoding and synthesis for one
/// bundle / profile pair. Immutable after construction, so one instance
/// can serve several threads.
class Pipeline {
 public:
  /// With a store, embeddings are looked up in it; otherwise they are
  /// generated from the bundle's seed.
  Pipeline(const ModelBundle& bundle, const LanguageProfile& profile,
           const EmbeddingStore* store = nullptr);

  EmbeddingMatrix embed(std::span<const WholeToken> tokens) const;

  /// Runs the experts in the given order. The order never affects the result.
  ExpertOutputs run_experts(const EmbeddingMatrix& e, std::span<const WholeToken> tokens,
                            std::span<const Expert> order = kAllExperts) const;

  /// Everything after the encoder.
  ParseResult parse_embedded(const EmbeddingMatrix& e, std::span<const WholeToken> tokens,
                             bool with_ner = false) const;
  ParseResult parse(std::span<const WholeToken> tokens, bool with_ner = false) const;

  const ModelBundle& bundle() const { return bundle_; }
  const LanguageProfile& profile() const { return profile_; }

 private:
  const ModelBundle& bundle_;
  const LanguageProfile& profile_;
  const EmbeddingStore* store_;
};

}  // namespace flipparse
