#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flipparse/conllu.hpp"
#include "flipparse/heads.hpp"
#include "flipparse/profile.hpp"

namespace flipparse {

/// The five experts' per-token outputs for one sentence. NER is not part of
/// the UD analysis and is deliberately absent.
struct SynthesisInput {
  std::vector<WholeToken> tokens;
  std::vector<DepPrediction> deps;
  std::vector<MorphPrediction> morphs;
  std::vector<SegPrediction> segs;
  std::vector<LemmaPrediction> lemmas;

  /// Throws std::invalid_argument on unequal lengths, bad heads or
  /// segmentations that do not match their surface.
  void validate() const;

  bool operator==(const SynthesisInput&) const = default;
};

class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Which rule fired for a prefix, an inserted determiner or a suffix.
enum class SynthesisBranch {
  kMarkLocal,       // relativizer on a VERB
  kMarkEscalated,   // relativizer on anything else
  kCcLocal,         // conjunction, token deprel in note 1
  kCcEscalated,     // conjunction, token deprel outside note 1
  kCaseLocal,       // case kept on the token
  kCaseEscalated,   // function word whose deprel is in note 2
  kDet,             // article letter realized as DET
  kImplicitDet,     // article absorbed by a preposition
  kSuffixSwap,      // ADP / NUM / DET host: suffix takes the token's arc
  kSuffixObj,       // VERB host
  kSuffixPoss,      // any other host, with possessive marker
};

std::string_view to_string(SynthesisBranch branch);

struct TraceEvent {
  int token = 0;  // 1-based whole-token index
  SynthesisBranch branch;

  bool operator==(const TraceEvent&) const = default;
};

using SynthesisTrace = std::vector<TraceEvent>;

/// Reference to a head before node ids are known.
struct HeadRef {
  enum class Kind { kRoot, kToken, kLocal };
  Kind kind = Kind::kRoot;
  int index = 0;  // whole-token index (kToken) or 0-based output position (kLocal)

  static HeadRef root() { return {Kind::kRoot, 0}; }
  static HeadRef token(int i) { return {Kind::kToken, i}; }
  static HeadRef local(int pos) { return {Kind::kLocal, pos}; }

  bool operator==(const HeadRef&) const = default;
};

/// First entry of the prefix's function table present in `functions`, which
/// is then removed; the table default when nothing matches.
std::string choose_prefix_function(const std::string& prefix, std::vector<std::string>& functions,
                                   const LanguageProfile& profile);

struct PrefixAttachment {
  HeadRef head;
  std::string deprel;
  SynthesisBranch branch;
};

/// Head and relation of a prefix node of whole token `token_index`.
/// An escalation that would reach the root stays on the token.
PrefixAttachment attach_prefix(const std::string& prefix, const std::string& pos, int token_index,
                               const MorphPrediction& morph, const DepPrediction& dep,
                               const LanguageProfile& profile);

struct SuffixExpansion {
  std::string main_form;  // the main node's form becomes its lemma
  bool main_reattached = false;  // main node now heads to the suffix with `case`
  bool possessive_marker = false;
  UdNode suffix;  // head left unset; see suffix_head
  HeadRef suffix_head;
  SynthesisBranch branch;
};

/// Suffix node for whole token `token_index`. Throws SynthesisError when
/// the profile has no entry for the predicted suffix features.
SuffixExpansion expand_suffix(int token_index, const MorphPrediction& morph,
                              const DepPrediction& dep, const LemmaPrediction& lemma,
                              const LanguageProfile& profile);

/// Whether an implicit determiner node is inserted after the prefixes.
bool needs_implicit_det(const MorphPrediction& morph, const SegPrediction& seg,
                        const LanguageProfile& profile);

/// Merges the expert outputs into a segmented UD sentence. When `trace` is
/// given, every rule application is appended to it.
UdSentence convert_to_ud(const SynthesisInput& input, const LanguageProfile& profile,
                         SynthesisTrace* trace = nullptr);

/// Recovers whole-token predictions from a sentence in the shape that
/// convert_to_ud produces, so that converting them reproduces it.
SynthesisInput decompose_ud(const UdSentence& sentence, const LanguageProfile& profile);

}  // namespace flipparse
