#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flipparse {

/// A space-delimited surface word, the unit every expert head predicts on.
struct WholeToken {
  int index = 0;  // 1-based
  std::string surface;

  bool operator==(const WholeToken&) const = default;
};

/// Splits a raw line on whitespace into 1-based whole tokens.
std::vector<WholeToken> tokenize_whitespace(std::string_view line);

/// Key/value morphological features. std::map keeps keys in the
/// lexicographic order used on serialization.
using FeatureBag = std::map<std::string, std::string>;

/// Renders `Key=Val|Key=Val`, or `_` for an empty bag.
std::string format_feats(const FeatureBag& feats);
FeatureBag parse_feats(std::string_view field);

/// The 17 universal POS tags.
const std::vector<std::string>& upos_inventory();
bool is_upos(std::string_view tag);

struct UdNode {
  int id = 0;  // 1-based segment index
  std::string form;
  std::string lemma;
  std::string upos;
  std::string xpos = "_";
  FeatureBag feats;
  int head = 0;  // 0 = root
  std::string deprel;
  std::string deps = "_";  // enhanced graph, kept opaque
  std::string misc = "_";

  bool operator==(const UdNode&) const = default;
};

/// A multiword token line `start-end` grouping the segments of one
/// whole token.
struct MultiwordSpan {
  int start = 0;
  int end = 0;
  std::string surface;
  std::string misc = "_";

  bool operator==(const MultiwordSpan&) const = default;
};

struct UdSentence {
  std::vector<UdNode> nodes;
  std::vector<MultiwordSpan> spans;
  std::optional<std::string> text;    // from / to the `# text =` comment
  std::vector<std::string> comments;  // every other comment line, verbatim

  bool operator==(const UdSentence&) const = default;
};

/// Whole tokens of a segmented sentence: each multiword span is one token,
/// every node outside a span is its own token.
std::vector<WholeToken> whole_tokens_of(const UdSentence& sentence);

enum class DiagnosticKind { kHeadOutOfRange, kSelfHead, kNoRoot, kMultipleRoots, kCycle, kBadSpan };

struct Diagnostic {
  DiagnosticKind kind;
  int node_id = 0;
  std::string message;
  std::vector<int> cycle;  // kCycle only, in head-following order
};

/// Returns an empty list iff the head graph is a single-rooted tree over
/// all nodes and the multiword spans are disjoint, ordered and in range.
std::vector<Diagnostic> validate_tree(const UdSentence& sentence);

/// Malformed CoNLL-U input.
class ConlluError : public std::runtime_error {
 public:
  ConlluError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

/// A syntactically well-formed sentence whose head graph is not a tree.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(int line, std::vector<Diagnostic> diagnostics);
  int line() const { return line_; }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }
  /// Node ids on the first reported cycle, empty when the failure is not a cycle.
  std::vector<int> cycle() const;

 private:
  int line_;
  std::vector<Diagnostic> diagnostics_;
};

std::vector<UdSentence> parse_conllu(std::string_view text);
std::string serialize_conllu(const std::vector<UdSentence>& sentences);
std::string serialize_conllu(const UdSentence& sentence);

}  // namespace flipparse
