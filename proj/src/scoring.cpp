#include "flipparse/scoring.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_map>

#include <json.hpp>

namespace flipparse {

namespace {

constexpr std::string_view kNerPrefix = "# ner = ";

double percent(long num, long den) { return den == 0 ? 100.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den); }

double f1_of(long matched, long predicted, long gold) {
  return predicted + gold == 0 ? 100.0
                               : 200.0 * static_cast<double>(matched) /
                                     static_cast<double>(predicted + gold);
}

std::string base_relation(const std::string& deprel) { return deprel.substr(0, deprel.find(':')); }

int head_group(const GroupedSentence& g, const UdNode& node) {
  return node.head == 0 ? 0 : g.group_of[node.head - 1];
}

// A gold whole token made only of punctuation.
std::vector<bool> punct_groups(const UdSentence& gold, const GroupedSentence& g) {
  std::vector<bool> punct(g.members.size() + 1, false);
  for (size_t k = 0; k < g.members.size(); ++k) {
    punct[k + 1] = std::all_of(g.members[k].begin(), g.members[k].end(),
                               [&](int id) { return gold.nodes[id - 1].upos == "PUNCT"; });
  }
  return punct;
}

std::vector<std::string> items(const UdSentence& s, const GroupedSentence& g, Aspect aspect,
                               const std::vector<bool>* punct) {
  std::vector<std::string> out;
  out.reserve(s.nodes.size());
  for (const auto& node : s.nodes) {
    const int dep = g.group_of[node.id - 1];
    std::string key = std::to_string(dep) + '\x1f';
    switch (aspect) {
      case Aspect::kSeg: key += node.form; break;
      case Aspect::kPos: key += node.form + '\x1f' + node.upos; break;
      case Aspect::kFeats: key += node.form + '\x1f' + format_feats(node.feats); break;
      case Aspect::kUas:
      case Aspect::kLas: {
        const int head = head_group(g, node);
        if (punct != nullptr && ((*punct)[dep] || (*punct)[head])) continue;
        key += std::to_string(head);
        if (aspect == Aspect::kLas) key += '\x1f' + node.deprel;
        break;
      }
    }
    out.push_back(std::move(key));
  }
  return out;
}

Counts multiset_counts_grouped(const UdSentence& pred, const GroupedSentence& pg,
                               const UdSentence& gold, const GroupedSentence& gg, Aspect aspect,
                               bool ignore_punct) {
  std::vector<bool> punct;
  if (ignore_punct) punct = punct_groups(gold, gg);
  const std::vector<bool>* filter = ignore_punct ? &punct : nullptr;
  const auto gold_items = items(gold, gg, aspect, filter);
  const auto pred_items = items(pred, pg, aspect, filter);
  std::unordered_map<std::string, long> pool;
  for (const auto& k : gold_items) ++pool[k];
  Counts c;
  c.gold = static_cast<long>(gold_items.size());
  c.predicted = static_cast<long>(pred_items.size());
  for (const auto& k : pred_items) {
    auto it = pool.find(k);
    if (it != pool.end() && it->second > 0) {
      --it->second;
      ++c.matched;
    }
  }
  return c;
}

struct Aligned {
  GroupedSentence gold;
  GroupedSentence pred;
};

Aligned align(const UdSentence& pred, const UdSentence& gold) {
  const auto tokens = whole_tokens_of(gold);
  return {group_to_whole_tokens(gold, tokens), group_to_whole_tokens(pred, tokens)};
}

WholeTokenCounts whole_token_counts_grouped(const UdSentence& pred, const GroupedSentence& pg,
                                            const UdSentence& gold, const GroupedSentence& gg) {
  WholeTokenCounts c;
  for (int g = 1; g <= static_cast<int>(gg.members.size()); ++g) {
    const UdNode& gp = gold.nodes[primary_node(gold, gg, g) - 1];
    const UdNode& pp = pred.nodes[primary_node(pred, pg, g) - 1];
    ++c.tokens;
    ++c.pos_classes[gp.upos].gold;
    ++c.pos_classes[pp.upos].predicted;
    if (gp.upos == pp.upos) {
      ++c.pos_correct;
      ++c.pos_classes[gp.upos].matched;
    }
    const int target = head_group(gg, gp);
    bool attached = false;
    bool labeled = false;
    for (int id : pg.members[g - 1]) {
      const UdNode& node = pred.nodes[id - 1];
      if (head_group(pg, node) != target) continue;
      attached = true;
      if (node.deprel == gp.deprel) labeled = true;
    }
    if (attached) ++c.uas_correct;
    if (labeled) ++c.las_correct;
  }
  return c;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

Prf Counts::prf() const {
  Prf p;
  p.precision = percent(matched, predicted);
  p.recall = percent(matched, gold);
  p.f1 = f1_of(matched, predicted, gold);
  if (predicted == 0 && gold > 0) p.precision = 0.0;
  if (gold == 0 && predicted > 0) p.recall = 0.0;
  return p;
}

GroupedSentence group_to_whole_tokens(const UdSentence& segmented,
                                      std::span<const WholeToken> gold_tokens) {
  std::string gold_chars;
  std::vector<size_t> gold_end;  // exclusive character offset per gold token
  for (const auto& t : gold_tokens) {
    gold_chars += t.surface;
    gold_end.push_back(gold_chars.size());
  }

  GroupedSentence out;
  out.tokens.assign(gold_tokens.begin(), gold_tokens.end());
  out.group_of.assign(segmented.nodes.size(), 0);
  out.members.assign(gold_tokens.size(), {});

  size_t offset = 0;
  size_t gold_index = 0;
  size_t span = 0;
  const int m = static_cast<int>(segmented.nodes.size());
  for (int id = 1; id <= m;) {
    int last = id;
    std::string text = segmented.nodes[id - 1].form;
    if (span < segmented.spans.size() && segmented.spans[span].start == id) {
      last = segmented.spans[span].end;
      text = segmented.spans[span].surface;
      ++span;
    }
    if (text.empty()) throw AlignmentError("segment " + std::to_string(id) + " has no characters");
    if (gold_chars.compare(offset, text.size(), text) != 0) {
      throw AlignmentError("segment '" + text + "' at character " + std::to_string(offset) +
                           " does not match the gold text");
    }
    while (gold_index < gold_end.size() && gold_end[gold_index] <= offset) ++gold_index;
    if (offset + text.size() > gold_end[gold_index]) {
      throw AlignmentError("segment '" + text + "' spans two gold whole tokens");
    }
    for (int k = id; k <= last; ++k) {
      out.group_of[k - 1] = static_cast<int>(gold_index) + 1;
      out.members[gold_index].push_back(k);
    }
    offset += text.size();
    id = last + 1;
  }
  if (offset != gold_chars.size()) {
    throw AlignmentError("segmented sentence ends at character " + std::to_string(offset) +
                         " of " + std::to_string(gold_chars.size()));
  }
  return out;
}

Counts multiset_counts(const UdSentence& pred, const UdSentence& gold, Aspect aspect,
                       bool ignore_punct) {
  const Aligned a = align(pred, gold);
  return multiset_counts_grouped(pred, a.pred, gold, a.gold, aspect, ignore_punct);
}

Prf multiset_f1(const UdSentence& pred, const UdSentence& gold, Aspect aspect, bool ignore_punct) {
  return multiset_counts(pred, gold, aspect, ignore_punct).prf();
}

int primary_node(const UdSentence& sentence, const GroupedSentence& grouped, int group) {
  static const std::set<std::string> kFunctional = {"cc", "mark", "case", "det", "punct"};
  const auto& members = grouped.members.at(group - 1);
  if (members.empty()) throw AlignmentError("whole token " + std::to_string(group) + " has no segments");
  int fallback = 0;
  int best = 0;
  for (int id : members) {
    const UdNode& node = sentence.nodes[id - 1];
    if (head_group(grouped, node) == group) continue;
    fallback = id;
    if (!kFunctional.contains(base_relation(node.deprel))) best = id;
  }
  if (best != 0) return best;
  return fallback != 0 ? fallback : members.back();
}

WholeTokenCounts& WholeTokenCounts::operator+=(const WholeTokenCounts& o) {
  tokens += o.tokens;
  pos_correct += o.pos_correct;
  uas_correct += o.uas_correct;
  las_correct += o.las_correct;
  for (const auto& [k, v] : o.pos_classes) pos_classes[k] += v;
  return *this;
}

WholeTokenCounts whole_token_counts(const UdSentence& pred, const UdSentence& gold) {
  const Aligned a = align(pred, gold);
  return whole_token_counts_grouped(pred, a.pred, gold, a.gold);
}

WholeTokenScores whole_token_scores(const WholeTokenCounts& c) {
  WholeTokenScores s;
  s.pos_acc = percent(c.pos_correct, c.tokens);
  s.uas = percent(c.uas_correct, c.tokens);
  s.las = percent(c.las_correct, c.tokens);
  double sum = 0.0;
  int classes = 0;
  for (const auto& [label, k] : c.pos_classes) {
    if (k.gold == 0) continue;
    sum += f1_of(k.matched, k.predicted, k.gold);
    ++classes;
  }
  s.pos_macro_f1 = classes == 0 ? 100.0 : sum / classes;
  return s;
}

WholeTokenScores whole_token_scores(const UdSentence& pred, const UdSentence& gold) {
  return whole_token_scores(whole_token_counts(pred, gold));
}

std::optional<std::vector<std::string>> ner_tags_of(const UdSentence& sentence) {
  for (const auto& c : sentence.comments) {
    if (!c.starts_with(kNerPrefix)) continue;
    std::vector<std::string> tags;
    for (auto& t : tokenize_whitespace(std::string_view(c).substr(kNerPrefix.size()))) {
      tags.push_back(std::move(t.surface));
    }
    return tags;
  }
  return std::nullopt;
}

void set_ner_tags(UdSentence& sentence, std::span<const std::string> tags) {
  std::string line(kNerPrefix);
  for (size_t i = 0; i < tags.size(); ++i) {
    if (i > 0) line += ' ';
    line += tags[i];
  }
  for (auto& c : sentence.comments) {
    if (c.starts_with(kNerPrefix)) {
      c = line;
      return;
    }
  }
  sentence.comments.push_back(std::move(line));
}

Counts ner_counts(std::span<const std::string> pred, std::span<const std::string> gold) {
  if (pred.size() != gold.size()) {
    throw std::invalid_argument("NER tag sequences differ in length (" + std::to_string(pred.size()) +
                                " vs " + std::to_string(gold.size()) + ")");
  }
  Counts c;
  for (size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != "O";
    const bool g = gold[i] != "O";
    c.predicted += p;
    c.gold += g;
    if (p && g && pred[i] == gold[i]) ++c.matched;
  }
  return c;
}

double ner_token_f1(std::span<const std::string> pred, std::span<const std::string> gold) {
  return ner_counts(pred, gold).prf().f1;
}

std::string ScoreReport::to_text() const {
  std::string out;
  auto row = [&](const char* name, double v) {
    out += name;
    out.append(18 - std::string_view(name).size(), ' ');
    out += fixed2(v) + "\n";
  };
  out += "sentences         " + std::to_string(sentences) + "\n";
  out += "whole_tokens      " + std::to_string(whole_tokens) + "\n";
  out += "# aligned multiset F1\n";
  row("seg_f1", seg_f1);
  row("pos_f1", pos_f1);
  row("feats_f1", feats_f1);
  row("uas_f1", uas_f1);
  row("las_f1", las_f1);
  row("uas_nopunc", uas_nopunc);
  row("las_nopunc", las_nopunc);
  out += "# whole-token\n";
  row("wt_pos_macro_f1", wt_pos_macro_f1);
  row("wt_pos_acc", wt_pos_acc);
  row("wt_uas", wt_uas);
  row("wt_las", wt_las);
  if (ner_f1) {
    out += "# named entities\n";
    row("ner_f1", *ner_f1);
  }
  return out;
}

std::string ScoreReport::to_json() const {
  nlohmann::ordered_json j;
  j["sentences"] = sentences;
  j["whole_tokens"] = whole_tokens;
  j["seg_f1"] = seg_f1;
  j["pos_f1"] = pos_f1;
  j["feats_f1"] = feats_f1;
  j["uas_f1"] = uas_f1;
  j["las_f1"] = las_f1;
  j["uas_nopunc"] = uas_nopunc;
  j["las_nopunc"] = las_nopunc;
  j["wt_pos_macro_f1"] = wt_pos_macro_f1;
  j["wt_pos_acc"] = wt_pos_acc;
  j["wt_uas"] = wt_uas;
  j["wt_las"] = wt_las;
  j["ner_f1"] = ner_f1 ? nlohmann::ordered_json(*ner_f1) : nlohmann::ordered_json(nullptr);
  return j.dump(2) + "\n";
}

void ScoreAccumulator::add(const UdSentence& pred, const UdSentence& gold) {
  const Aligned a = align(pred, gold);
  for (Aspect aspect : {Aspect::kSeg, Aspect::kPos, Aspect::kFeats, Aspect::kUas, Aspect::kLas}) {
    multiset_[{aspect, false}] += multiset_counts_grouped(pred, a.pred, gold, a.gold, aspect, false);
  }
  for (Aspect aspect : {Aspect::kUas, Aspect::kLas}) {
    multiset_[{aspect, true}] += multiset_counts_grouped(pred, a.pred, gold, a.gold, aspect, true);
  }
  whole_ += whole_token_counts_grouped(pred, a.pred, gold, a.gold);

  const auto pred_ner = ner_tags_of(pred);
  const auto gold_ner = ner_tags_of(gold);
  if (pred_ner && gold_ner) {
    ner_ += ner_counts(*pred_ner, *gold_ner);
    ner_seen_ = true;
  } else if (pred_ner || gold_ner) {
    ner_missing_ = true;
  }
  ++sentences_;
}

ScoreReport ScoreAccumulator::report() const {
  auto f1 = [&](Aspect a, bool punct) {
    auto it = multiset_.find({a, punct});
    return it == multiset_.end() ? 100.0 : it->second.prf().f1;
  };
  ScoreReport r;
  r.seg_f1 = f1(Aspect::kSeg, false);
  r.pos_f1 = f1(Aspect::kPos, false);
  r.feats_f1 = f1(Aspect::kFeats, false);
  r.uas_f1 = f1(Aspect::kUas, false);
  r.las_f1 = f1(Aspect::kLas, false);
  r.uas_nopunc = f1(Aspect::kUas, true);
  r.las_nopunc = f1(Aspect::kLas, true);
  const WholeTokenScores wt = whole_token_scores(whole_);
  r.wt_pos_macro_f1 = wt.pos_macro_f1;
  r.wt_pos_acc = wt.pos_acc;
  r.wt_uas = wt.uas;
  r.wt_las = wt.las;
  if (ner_seen_ && !ner_missing_) r.ner_f1 = ner_.prf().f1;
  r.sentences = sentences_;
  r.whole_tokens = whole_.tokens;
  return r;
}

ScoreReport score_corpus(const std::vector<UdSentence>& pred, const std::vector<UdSentence>& gold) {
  if (pred.size() != gold.size()) {
    throw AlignmentError("prediction has " + std::to_string(pred.size()) + " sentences, gold has " +
                         std::to_string(gold.size()));
  }
  ScoreAccumulator acc;
  for (size_t i = 0; i < pred.size(); ++i) {
    try {
      acc.add(pred[i], gold[i]);
    } catch (const AlignmentError& e) {
      throw AlignmentError("sentence " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return acc.report();
}

double lemma_coverage(const std::vector<UdSentence>& gold, const std::vector<std::string>& vocab) {
  const std::set<std::string_view> known(vocab.begin(), vocab.end());
  long hits = 0;
  long total = 0;
  for (const auto& s : gold) {
    for (const auto& node : s.nodes) {
      ++total;
      if (known.contains(node.lemma)) ++hits;
    }
  }
  return percent(hits, total);
}

}  // namespace flipparse
