#include <doctest.h>

#include <random>

#include <json.hpp>

#include "flipparse/scoring.hpp"
#include "flipparse/synthesis.hpp"
#include "support.hpp"

using namespace flipparse;
using testsupport::fixture_path;
using testsupport::read_text;

namespace {

UdNode node(int id, const std::string& form, const std::string& upos, int head,
            const std::string& deprel) {
  UdNode n;
  n.id = id;
  n.form = form;
  n.lemma = form;
  n.upos = upos;
  n.head = head;
  n.deprel = deprel;
  return n;
}

// gold: [ה ילד] רץ ; pred leaves the first token whole
UdSentence segmented_gold() {
  UdSentence s;
  s.nodes = {node(1, "ה", "DET", 2, "det"), node(2, "ילד", "NOUN", 3, "nsubj"),
             node(3, "רץ", "VERB", 0, "root")};
  s.spans = {{1, 2, "הילד"}};
  return s;
}

UdSentence unsegmented_pred() {
  UdSentence s;
  s.nodes = {node(1, "הילד", "NOUN", 2, "nsubj"), node(2, "רץ", "VERB", 0, "root")};
  return s;
}

std::vector<UdSentence> load(const char* name) { return parse_conllu(read_text(fixture_path(name))); }

void check_all_100(const ScoreReport& r) {
  for (double v : {r.seg_f1, r.pos_f1, r.feats_f1, r.uas_f1, r.las_f1, r.uas_nopunc, r.las_nopunc,
                   r.wt_pos_macro_f1, r.wt_pos_acc, r.wt_uas, r.wt_las}) {
    CHECK(v == 100.0);
  }
}

}  // namespace

TEST_CASE("identity scores 100 everywhere") {
  for (const char* name : {"eval/gold.conllu", "ladder/expected.conllu", "book/book.conllu"}) {
    CAPTURE(name);
    const auto gold = load(name);
    check_all_100(score_corpus(gold, gold));
    for (const auto& s : gold) {
      for (Aspect a : {Aspect::kSeg, Aspect::kPos, Aspect::kFeats, Aspect::kUas, Aspect::kLas}) {
        const Prf p = multiset_f1(s, s, a, false);
        CHECK(p.precision == 100.0);
        CHECK(p.recall == 100.0);
        CHECK(p.f1 == 100.0);
      }
    }
  }
}

TEST_CASE("one wrong head in twenty whole-token arcs") {
  const auto gold = load("eval/gold.conllu");
  const auto pred = load("eval/pred.conllu");
  const ScoreReport r = score_corpus(pred, gold);
  CHECK(r.sentences == 5);
  CHECK(r.whole_tokens == 20);
  CHECK(r.wt_uas == 95.0);
  CHECK(r.wt_las == 95.0);
  CHECK(r.wt_pos_acc == 100.0);
  CHECK(r.wt_pos_macro_f1 == 100.0);
  CHECK(r.seg_f1 == 100.0);
  CHECK(r.pos_f1 == 100.0);
  CHECK(r.feats_f1 == 100.0);
  // 30 segment arcs, 29 right; 25 without the punctuation arcs, 24 right
  CHECK(r.uas_f1 == doctest::Approx(100.0 * 29 / 30));
  CHECK(r.las_f1 == doctest::Approx(100.0 * 29 / 30));
  CHECK(r.uas_nopunc == doctest::Approx(96.0));
  CHECK(r.las_nopunc == doctest::Approx(96.0));
  CHECK_FALSE(r.ner_f1.has_value());
  CHECK(r.to_text() == read_text(fixture_path("eval/expected_report.txt")));

  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["wt_uas"].get<double>() == 95.0);
  CHECK(j["ner_f1"].is_null());
  for (const char* key : {"seg_f1", "pos_f1", "feats_f1", "uas_f1", "las_f1", "uas_nopunc",
                          "las_nopunc", "wt_pos_macro_f1", "wt_pos_acc", "wt_uas", "wt_las",
                          "sentences", "whole_tokens"}) {
    CHECK(j.contains(key));
  }
}

TEST_CASE("under-segmented prediction, hand-counted") {
  const UdSentence gold = segmented_gold();
  const UdSentence pred = unsegmented_pred();

  // seg items: gold {1:ה, 1:ילד, 2:רץ}, pred {1:הילד, 2:רץ}
  Counts c = multiset_counts(pred, gold, Aspect::kSeg, false);
  CHECK(c.matched == 1);
  CHECK(c.predicted == 2);
  CHECK(c.gold == 3);
  Prf p = c.prf();
  CHECK(p.precision == 50.0);
  CHECK(p.recall == doctest::Approx(100.0 / 3));
  CHECK(p.f1 == 40.0);
  CHECK(multiset_f1(pred, gold, Aspect::kPos, false).f1 == 40.0);
  CHECK(multiset_f1(pred, gold, Aspect::kFeats, false).f1 == 40.0);

  // arcs: gold {(1,1), (1,2), (2,0)}, pred {(1,2), (2,0)}
  p = multiset_f1(pred, gold, Aspect::kUas, false);
  CHECK(p.precision == 100.0);
  CHECK(p.recall == doctest::Approx(200.0 / 3));
  CHECK(p.f1 == 80.0);
  CHECK(multiset_f1(pred, gold, Aspect::kLas, false).f1 == 80.0);

  // the main segment of each whole token is right
  const WholeTokenScores w = whole_token_scores(pred, gold);
  CHECK(w.pos_acc == 100.0);
  CHECK(w.uas == 100.0);
  CHECK(w.las == 100.0);
  CHECK(w.pos_macro_f1 == 100.0);
}

TEST_CASE("swapping prediction and gold swaps precision and recall") {
  const UdSentence a = segmented_gold();
  const UdSentence b = unsegmented_pred();
  for (Aspect asp : {Aspect::kSeg, Aspect::kPos, Aspect::kFeats, Aspect::kUas, Aspect::kLas}) {
    const Prf ab = multiset_f1(a, b, asp, false);
    const Prf ba = multiset_f1(b, a, asp, false);
    CHECK(ab.precision == ba.recall);
    CHECK(ab.recall == ba.precision);
    CHECK(ab.f1 == ba.f1);
  }
}

TEST_CASE("empty sentence pair scores 100") {
  const UdSentence empty;
  for (Aspect a : {Aspect::kSeg, Aspect::kPos, Aspect::kFeats, Aspect::kUas, Aspect::kLas}) {
    const Prf p = multiset_f1(empty, empty, a, true);
    CHECK(p.precision == 100.0);
    CHECK(p.recall == 100.0);
    CHECK(p.f1 == 100.0);
  }
  CHECK(whole_token_scores(empty, empty).uas == 100.0);
  check_all_100(score_corpus({}, {}));
}

TEST_CASE("whole-token POS accuracy and macro F1") {
  UdSentence gold;
  for (int i = 1; i <= 10; ++i) {
    gold.nodes.push_back(node(i, "w" + std::to_string(i), i <= 6 ? "NOUN" : "VERB", i == 1 ? 0 : 1,
                              i == 1 ? "root" : "dep"));
  }
  UdSentence pred = gold;
  pred.nodes[9].upos = "NOUN";
  const WholeTokenScores w = whole_token_scores(pred, gold);
  CHECK(w.pos_acc == 90.0);
  // NOUN: tp 6, fp 1, fn 0 -> 12/13; VERB: tp 3, fn 1 -> 6/7
  CHECK(w.pos_macro_f1 == doctest::Approx((100.0 * 12 / 13 + 100.0 * 6 / 7) / 2));
  CHECK(w.uas == 100.0);

  // a class predicted but absent from gold does not enter the average
  pred = gold;
  pred.nodes[9].upos = "ADJ";
  CHECK(whole_token_scores(pred, gold).pos_macro_f1 == doctest::Approx((100.0 + 100.0 * 6 / 7) / 2));
}

TEST_CASE("a whole-token arc is right if any segment reaches the gold head") {
  // gold: ומביתו -> יצא with the noun as the attached segment
  UdSentence gold;
  gold.nodes = {node(1, "ו", "CCONJ", 3, "cc"), node(2, "מ", "ADP", 3, "case"),
                node(3, "ביתו", "NOUN", 4, "obl"), node(4, "יצא", "VERB", 0, "root")};
  gold.spans = {{1, 3, "ומביתו"}};

  // pred: only the conjunction points at the verb, with the wrong relation
  UdSentence pred = gold;
  pred.nodes[2].head = 1;
  pred.nodes[0].head = 4;
  pred.nodes[1].head = 1;
  pred.nodes[0].deprel = "cc";
  WholeTokenCounts c = whole_token_counts(pred, gold);
  CHECK(c.tokens == 2);
  CHECK(c.uas_correct == 2);
  CHECK(c.las_correct == 1);

  // relation of that segment matches the gold primary: labeled too
  pred.nodes[0].deprel = "obl";
  c = whole_token_counts(pred, gold);
  CHECK(c.las_correct == 2);

  // no segment reaches the verb group
  pred.nodes[0].head = 2;
  pred.nodes[0].deprel = "cc";
  pred.nodes[3].head = 3;
  pred.nodes[3].deprel = "dep";
  pred.nodes[2].head = 0;
  pred.nodes[2].deprel = "root";
  c = whole_token_counts(pred, gold);
  CHECK(c.uas_correct == 0);
  CHECK(c.las_correct == 0);
}

TEST_CASE("primary segment selection") {
  UdSentence s;
  s.nodes = {node(1, "ש", "SCONJ", 4, "mark"), node(2, "הוא", "PRON", 4, "nsubj"),
             node(3, "ל", "ADP", 4, "case"), node(4, "בא", "VERB", 0, "root")};
  s.spans = {{1, 2, "שהוא"}};
  const auto g = group_to_whole_tokens(s, whole_tokens_of(s));
  CHECK(primary_node(s, g, 1) == 2);
  CHECK(primary_node(s, g, 2) == 3);
  CHECK(primary_node(s, g, 3) == 4);

  // only function words leave the group: the last of them
  s.nodes[1].deprel = "case";
  CHECK(primary_node(s, group_to_whole_tokens(s, whole_tokens_of(s)), 1) == 2);
}

TEST_CASE("alignment failures") {
  const UdSentence gold = segmented_gold();
  UdSentence pred = unsegmented_pred();
  pred.nodes[1].form = "הלך";
  CHECK_THROWS_AS(multiset_counts(pred, gold, Aspect::kSeg, false), AlignmentError);

  UdSentence merged;
  merged.nodes = {node(1, "הילדרץ", "NOUN", 0, "root")};
  try {
    multiset_counts(merged, gold, Aspect::kSeg, false);
    FAIL("expected an AlignmentError");
  } catch (const AlignmentError& e) {
    CHECK(std::string(e.what()).find("two gold whole tokens") != std::string::npos);
  }

  UdSentence shorter;
  shorter.nodes = {node(1, "הילד", "NOUN", 0, "root")};
  CHECK_THROWS_AS(multiset_counts(shorter, gold, Aspect::kSeg, false), AlignmentError);

  try {
    score_corpus({unsegmented_pred(), pred}, {gold, gold});
    FAIL("expected an AlignmentError");
  } catch (const AlignmentError& e) {
    CHECK(std::string(e.what()).starts_with("sentence 2: "));
  }
  CHECK_THROWS_AS(score_corpus({gold}, {gold, gold}), AlignmentError);
}

TEST_CASE("punctuation arcs are dropped from the no-punct scores") {
  UdSentence gold;
  gold.nodes = {node(1, "רץ", "VERB", 0, "root"), node(2, ".", "PUNCT", 1, "punct")};
  UdSentence pred = gold;
  pred.nodes[1].deprel = "dep";
  CHECK(multiset_f1(pred, gold, Aspect::kLas, false).f1 == 50.0);
  CHECK(multiset_f1(pred, gold, Aspect::kLas, true).f1 == 100.0);
  CHECK(multiset_counts(pred, gold, Aspect::kUas, true).gold == 1);
}

TEST_CASE("whole-token UAS is never below LAS") {
  std::mt19937_64 rng(8);
  const auto& latin = testsupport::latin();
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 8;
    const SynthesisInput in = testsupport::random_input(rng, n, latin);
    SynthesisInput other = in;
    // perturb relations and heads of the prediction
    for (int i = 0; i < n; ++i) {
      if (std::bernoulli_distribution(0.3)(rng) && other.deps[i].head != 0) other.deps[i].relation = "dep";
    }
    const UdSentence gold = convert_to_ud(in, latin);
    const UdSentence pred = convert_to_ud(other, latin);
    const WholeTokenScores w = whole_token_scores(pred, gold);
    CHECK(w.uas >= w.las);
    const ScoreReport r = score_corpus({pred}, {gold});
    CHECK(r.uas_f1 >= r.las_f1);
    CHECK(r.wt_uas == 100.0);
  }
}

TEST_CASE("token-level NER F1") {
  using Tags = std::vector<std::string>;
  CHECK(ner_token_f1(Tags{"B-PER", "I-PER", "O"}, Tags{"B-PER", "I-PER", "O"}) == 100.0);
  CHECK(ner_token_f1(Tags{"O", "O"}, Tags{"O", "O"}) == 100.0);
  const Counts c = ner_counts(Tags{"B-PER", "O", "O"}, Tags{"B-PER", "I-PER", "O"});
  CHECK(c.prf().precision == 100.0);
  CHECK(c.prf().recall == 50.0);
  CHECK(c.prf().f1 == doctest::Approx(66.6667).epsilon(1e-4));
  CHECK(ner_token_f1(Tags{"B-ORG", "O"}, Tags{"B-PER", "O"}) == 0.0);
  CHECK_THROWS_AS(ner_token_f1(Tags{"O"}, Tags{"O", "O"}), std::invalid_argument);
}

TEST_CASE("NER tags travel in a sentence comment") {
  UdSentence gold = unsegmented_pred();
  UdSentence pred = gold;
  CHECK_FALSE(ner_tags_of(gold).has_value());
  const std::vector<std::string> tags = {"B-PER", "O"};
  set_ner_tags(gold, tags);
  CHECK(ner_tags_of(gold) == tags);
  CHECK(gold.comments == std::vector<std::string>{"# ner = B-PER O"});
  set_ner_tags(gold, std::vector<std::string>{"B-PER", "B-LOC"});
  CHECK(gold.comments.size() == 1);

  // only one side tagged: no NER score
  CHECK_FALSE(score_corpus({pred}, {gold}).ner_f1.has_value());
  set_ner_tags(pred, std::vector<std::string>{"B-PER", "O"});
  const ScoreReport r = score_corpus({pred}, {gold});
  REQUIRE(r.ner_f1.has_value());
  CHECK(*r.ner_f1 == doctest::Approx(66.6667).epsilon(1e-4));
  CHECK(r.to_text().find("ner_f1            66.67") != std::string::npos);
}

TEST_CASE("lemma coverage") {
  const auto gold = load("eval/gold.conllu");
  CHECK(lemma_coverage(gold, {}) == 0.0);
  std::vector<std::string> vocab;
  for (const auto& s : gold) {
    for (const auto& n : s.nodes) vocab.push_back(n.lemma);
  }
  CHECK(lemma_coverage(gold, vocab) == 100.0);
  CHECK(lemma_coverage({}, vocab) == 100.0);
}
