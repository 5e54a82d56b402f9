#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flipparse/conllu.hpp"

namespace flipparse {

inline constexpr int kProfileFormatVersion = 1;

/// A proclitic letter-group. Groups may only be stacked in strictly
/// increasing rank order (conjunction < relativizer < preposition < article
/// for Hebrew).
struct LetterGroup {
  std::string text;
  int rank = 0;
};

/// Form, lemma and UPOS of a node the synthesizer inserts without
/// consuming surface characters.
struct NodeTemplate {
  std::string form;
  std::string lemma;
  std::string upos;
};

/// One row of the suffix dictionary. Pattern fields match a predicted value
/// exactly, `*` matches anything, `_` matches an absent feature. Rows are
/// tried in file order.
struct SuffixRule {
  std::string function;
  std::string gender;
  std::string number;
  std::string person;
  std::string form;
  std::string lemma;
};

struct LanguageProfile {
  std::string name;
  std::string notes;
  std::vector<LetterGroup> letter_groups;
  std::map<std::string, std::vector<std::string>> prefix_functions;
  std::string conj_letter;
  std::string relativizer_suffix;
  std::string implicit_det_letter;
  NodeTemplate implicit_det;
  NodeTemplate possessive_marker;
  /// Main-word POS tags for which a case prefix always stays on the token.
  std::vector<std::string> case_keep_local_upos;
  /// Main-word POS tags whose suffix takes over the token's own arc.
  std::vector<std::string> suffix_swap_upos;
  /// Deprels for which a conjunction prefix stays on the token.
  std::vector<std::string> note1_deprels;
  /// Deprels for which a case prefix of a function word moves to the token's head.
  std::vector<std::string> note2_deprels;
  /// Suffix function label -> UPOS of the suffix node.
  std::map<std::string, std::string> suffix_functions;
  std::vector<SuffixRule> suffix_table;

  int group_index(std::string_view text) const;  // -1 if unknown
  bool is_letter_group(std::string_view text) const { return group_index(text) >= 0; }

  /// First suffix_table row matching, or nullopt.
  const SuffixRule* lookup_suffix(std::string_view function, const FeatureBag& feats) const;
};

class ProfileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

LanguageProfile parse_profile(std::string_view json_text);
LanguageProfile load_profile(const std::filesystem::path& path);

/// Resolves a profile argument: an existing path is used as is, otherwise
/// `<name>.json` is looked up in $FLIPPARSE_PROFILE_DIR and then in the
/// profiles shipped with the build.
std::filesystem::path resolve_profile_path(const std::string& name_or_path);

/// Every admissible proclitic sequence at the start of `surface`, in
/// depth-first order over the profile's letter-group order. The empty
/// sequence comes first; stripping never consumes the whole surface.
std::vector<std::vector<std::string>> enumerate_valid_prefix_sets(std::string_view surface,
                                                                  const LanguageProfile& profile);

}  // namespace flipparse
