#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "flipparse/conllu.hpp"

namespace flipparse {

/// Percentages in [0, 100].
struct Prf {
  double precision = 100.0;
  double recall = 100.0;
  double f1 = 100.0;
};

enum class Aspect { kSeg, kPos, kFeats, kUas, kLas };

class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Segments of a sentence assigned to the gold whole tokens they came from.
struct GroupedSentence {
  std::vector<WholeToken> tokens;
  std::vector<int> group_of;               // node id - 1 -> 1-based whole token
  std::vector<std::vector<int>> members;   // whole token - 1 -> node ids
};

/// Aligns segments to `gold_tokens` by character offsets. Throws
/// AlignmentError when the characters differ or a unit straddles two gold
/// tokens.
GroupedSentence group_to_whole_tokens(const UdSentence& segmented,
                                      std::span<const WholeToken> gold_tokens);

/// Matched / predicted / gold item counts.
struct Counts {
  long matched = 0;
  long predicted = 0;
  long gold = 0;

  Counts& operator+=(const Counts& o) {
    matched += o.matched;
    predicted += o.predicted;
    gold += o.gold;
    return *this;
  }
  /// Empty on both sides counts as perfect.
  Prf prf() const;
};

Counts multiset_counts(const UdSentence& pred, const UdSentence& gold, Aspect aspect,
                       bool ignore_punct);
Prf multiset_f1(const UdSentence& pred, const UdSentence& gold, Aspect aspect, bool ignore_punct);

/// Node id of a group's main segment: the one attached outside the group,
/// preferring the last such node that is not a function word.
int primary_node(const UdSentence& sentence, const GroupedSentence& grouped, int group);

struct WholeTokenCounts {
  long tokens = 0;
  long pos_correct = 0;
  long uas_correct = 0;
  long las_correct = 0;
  std::map<std::string, Counts> pos_classes;  // matched = tp, predicted = tp+fp, gold = tp+fn

  WholeTokenCounts& operator+=(const WholeTokenCounts& o);
};

WholeTokenCounts whole_token_counts(const UdSentence& pred, const UdSentence& gold);

struct WholeTokenScores {
  double pos_macro_f1 = 100.0;
  double pos_acc = 100.0;
  double uas = 100.0;
  double las = 100.0;
};

WholeTokenScores whole_token_scores(const WholeTokenCounts& counts);
WholeTokenScores whole_token_scores(const UdSentence& pred, const UdSentence& gold);

/// Token tags carried in a `# ner = ...` comment, if present.
std::optional<std::vector<std::string>> ner_tags_of(const UdSentence& sentence);
void set_ner_tags(UdSentence& sentence, std::span<const std::string> tags);

Counts ner_counts(std::span<const std::string> pred, std::span<const std::string> gold);
/// Micro-F1 over non-O tags; 100 when neither side has any.
double ner_token_f1(std::span<const std::string> pred, std::span<const std::string> gold);

struct ScoreReport {
  double seg_f1 = 100.0;
  double pos_f1 = 100.0;
  double feats_f1 = 100.0;
  double uas_f1 = 100.0;
  double las_f1 = 100.0;
  double uas_nopunc = 100.0;
  double las_nopunc = 100.0;
  double wt_pos_macro_f1 = 100.0;
  double wt_pos_acc = 100.0;
  double wt_uas = 100.0;
  double wt_las = 100.0;
  std::optional<double> ner_f1;  // only when both sides carry NER tags
  long sentences = 0;
  long whole_tokens = 0;

  std::string to_text() const;
  std::string to_json() const;
};

/// Corpus-level scoring by summing per-sentence counts.
class ScoreAccumulator {
 public:
  /// Throws AlignmentError when the two sentences do not share their whole tokens.
  void add(const UdSentence& pred, const UdSentence& gold);
  ScoreReport report() const;

 private:
  std::map<std::pair<Aspect, bool>, Counts> multiset_;
  WholeTokenCounts whole_;
  Counts ner_;
  bool ner_seen_ = false;
  bool ner_missing_ = false;
  long sentences_ = 0;
};

ScoreReport score_corpus(const std::vector<UdSentence>& pred, const std::vector<UdSentence>& gold);

/// Fraction (percent) of gold lemmas found in `vocab`.
double lemma_coverage(const std::vector<UdSentence>& gold, const std::vector<std::string>& vocab);

}  // namespace flipparse
