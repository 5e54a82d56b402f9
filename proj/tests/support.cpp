#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace testsupport {

using namespace flipparse;
using nlohmann::json;

std::filesystem::path fixture_path(const std::string& relative) {
  return std::filesystem::path(FLIPPARSE_TEST_FIXTURES) / relative;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const LanguageProfile& hebrew() {
  static const LanguageProfile p = load_profile(std::filesystem::path(FLIPPARSE_PROFILES) / "hebrew.json");
  return p;
}

const LanguageProfile& latin() {
  static const LanguageProfile p =
      load_profile(std::filesystem::path(FLIPPARSE_PROFILES) / "synthetic_latin.json");
  return p;
}

namespace {

SynthesisCase case_from_json(const json& j) {
  SynthesisCase c;
  c.name = j.at("name").get<std::string>();
  if (j.contains("branches")) c.branches = j.at("branches").get<std::vector<std::string>>();
  int index = 0;
  for (const auto& t : j.at("tokens")) {
    ++index;
    c.input.tokens.push_back({index, t.at("surface").get<std::string>()});
    c.input.deps.push_back({t.at("head").get<int>(), t.at("deprel").get<std::string>()});
    MorphPrediction m;
    m.upos = t.at("upos").get<std::string>();
    m.features = parse_feats(t.value("feats", "_"));
    m.proclitic_functions = t.value("proclitics", std::vector<std::string>{});
    if (t.contains("suffix")) {
      m.suffix = SuffixPrediction{t["suffix"].at("function").get<std::string>(),
                                  parse_feats(t["suffix"].value("feats", "_"))};
    }
    c.input.morphs.push_back(std::move(m));
    c.input.segs.push_back({t.value("prefixes", std::vector<std::string>{})});
    c.input.lemmas.push_back({t.at("lemma").get<std::string>(), true});
  }
  return c;
}

int index_of(const std::vector<std::string>& labels, const std::string& value, const char* what) {
  auto it = std::find(labels.begin(), labels.end(), value);
  if (it == labels.end()) throw std::invalid_argument(std::string("oracle: no ") + what + " '" + value + "'");
  return static_cast<int>(it - labels.begin());
}

// Sets the one-hot column of every slot for row `row`.
void set_slots(LinearLayer& layer, int row, const std::vector<LabelSlot>& slots, const FeatureBag& feats) {
  int col = 0;
  for (const auto& slot : slots) {
    auto it = feats.find(slot.name);
    const std::string value = it == feats.end() ? std::string(kNoneLabel) : it->second;
    layer.weight(row, col + index_of(slot.values, value, "feature value")) = 1.0f;
    col += static_cast<int>(slot.values.size());
  }
}

int slot_width(const std::vector<LabelSlot>& slots) {
  int w = 0;
  for (const auto& s : slots) w += static_cast<int>(s.values.size());
  return w;
}

}  // namespace

std::vector<SynthesisCase> load_cases(const std::filesystem::path& path) {
  std::vector<SynthesisCase> out;
  for (const auto& j : json::parse(read_text(path))) out.push_back(case_from_json(j));
  return out;
}

SynthesisCase load_case(const std::filesystem::path& path) {
  return case_from_json(json::parse(read_text(path)));
}

Oracle build_oracle(const SynthesisInput& in, const LanguageProfile& profile,
                    const std::vector<std::string>& ner_tags) {
  const int n = static_cast<int>(in.tokens.size());
  const int d = n + 1;
  ModelBundle b;
  b.d = d;
  b.d_head = d;
  b.embed_seed = 0;

  b.query = LinearLayer(d, d);
  b.query.weight.setIdentity();
  b.key = LinearLayer(d, d);
  for (int i = 1; i <= n; ++i) b.key.weight(in.deps[i - 1].head, i) = 1.0f;

  b.relations = default_relations();
  b.relation_classifier = LinearLayer(2 * d, static_cast<int>(b.relations.size()));
  for (int i = 1; i <= n; ++i) {
    b.relation_classifier.weight(i, index_of(b.relations, in.deps[i - 1].relation, "relation")) = 1.0f;
  }

  b.vocab = {std::string(kBlankToken)};
  b.blank_id = 0;
  std::vector<int> lemma_ids;
  for (int i = 1; i <= n; ++i) {
    const auto& lemma = in.lemmas[i - 1].lemma;
    if (lemma == in.tokens[i - 1].surface) {
      lemma_ids.push_back(0);
      continue;
    }
    auto it = std::find(b.vocab.begin(), b.vocab.end(), lemma);
    if (it == b.vocab.end()) {
      b.vocab.push_back(lemma);
      it = b.vocab.end() - 1;
    }
    lemma_ids.push_back(static_cast<int>(it - b.vocab.begin()));
  }
  b.lm_head = LinearLayer(d, static_cast<int>(b.vocab.size()));
  for (int i = 1; i <= n; ++i) b.lm_head.weight(i, lemma_ids[i - 1]) = 1.0f;

  b.upos_labels = upos_inventory();
  b.pos_classifier = LinearLayer(d, static_cast<int>(b.upos_labels.size()));
  b.proclitic_labels = default_proclitic_labels();
  b.proclitic_classifier = LinearLayer(d, static_cast<int>(b.proclitic_labels.size()));
  b.feature_slots = default_feature_slots();
  b.feature_classifier = LinearLayer(d, slot_width(b.feature_slots));
  b.suffix_labels = default_suffix_labels();
  b.suffix_classifier = LinearLayer(d, static_cast<int>(b.suffix_labels.size()));
  b.suffix_feature_slots = default_suffix_feature_slots();
  b.suffix_feature_classifier = LinearLayer(d, slot_width(b.suffix_feature_slots));
  for (int i = 1; i <= n; ++i) {
    const auto& m = in.morphs[i - 1];
    b.pos_classifier.weight(i, index_of(b.upos_labels, m.upos, "UPOS")) = 1.0f;
    for (const auto& f : m.proclitic_functions) {
      b.proclitic_classifier.weight(i, index_of(b.proclitic_labels, f, "proclitic function")) = 1.0f;
    }
    set_slots(b.feature_classifier, i, b.feature_slots, m.features);
    if (m.suffix) {
      b.suffix_classifier.weight(i, index_of(b.suffix_labels, m.suffix->function, "suffix function")) = 1.0f;
      set_slots(b.suffix_feature_classifier, i, b.suffix_feature_slots, m.suffix->features);
    } else {
      b.suffix_classifier.weight(i, 0) = 1.0f;
    }
  }

  for (const auto& group : profile.letter_groups) {
    b.seg_groups.push_back(group.text);
    LinearLayer layer(d, 2);
    for (int i = 1; i <= n; ++i) {
      const auto& p = in.segs[i - 1].prefixes;
      const bool present = std::find(p.begin(), p.end(), group.text) != p.end();
      layer.weight(i, present ? 1 : 0) = 1.0f;
    }
    b.seg_classifiers.push_back(std::move(layer));
  }

  b.ner_labels = default_ner_labels();
  b.ner_classifier = LinearLayer(d, static_cast<int>(b.ner_labels.size()));
  for (int i = 1; i <= n; ++i) {
    const std::string tag = ner_tags.empty() ? "O" : ner_tags[i - 1];
    b.ner_classifier.weight(i, index_of(b.ner_labels, tag, "NER tag")) = 1.0f;
  }

  Oracle o{std::move(b), EmbeddingStore(d)};
  o.store.add(in.tokens, Matrix::Identity(d, d));
  return o;
}

DepScores random_scores(std::mt19937_64& rng, int n, bool small_integers) {
  Eigen::MatrixXd block(n, n + 1);
  std::uniform_real_distribution<double> real(-5.0, 5.0);
  std::uniform_int_distribution<int> small(-2, 2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= n; ++j) block(i, j) = small_integers ? small(rng) : real(rng);
  }
  return make_dep_scores(block);
}

SynthesisInput random_input(std::mt19937_64& rng, int n, const LanguageProfile& profile) {
  static const std::vector<std::string> kUpos = {"NOUN", "VERB", "ADJ", "ADP", "NUM", "DET",
                                                 "ADV",  "PRON", "PROPN", "SCONJ", "PUNCT"};
  static const std::vector<std::string> kRelations = {
      "nsubj", "obj", "obl", "conj", "advmod", "det", "amod", "nmod", "acl", "mark",
      "aux",   "cop", "dep", "fixed", "punct", "nummod", "appos", "parataxis", "compound:affix"};
  static const std::vector<std::string> kGender = {"Masc", "Fem", "Fem,Masc"};
  static const std::vector<std::string> kNumber = {"Sing", "Plur"};
  static const std::vector<std::string> kPerson = {"1", "2", "3"};
  const std::string stem_letters = "abcdefgiklmnoprtuy";
  auto pick = [&](const auto& v) -> const auto& {
    return v[std::uniform_int_distribution<size_t>(0, v.size() - 1)(rng)];
  };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };

  SynthesisInput in;
  // random tree: attach tokens in a random order to already attached ones
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i + 1;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> heads(n + 1, 0);
  for (int k = 1; k < n; ++k) {
    heads[order[k]] = order[std::uniform_int_distribution<int>(0, k - 1)(rng)];
  }

  for (int i = 1; i <= n; ++i) {
    std::vector<std::string> prefixes;
    int last_rank = std::numeric_limits<int>::min();
    for (const auto& g : profile.letter_groups) {
      if (g.rank > last_rank && coin(0.25)) {
        prefixes.push_back(g.text);
        last_rank = g.rank;
      }
    }
    std::string stem;
    for (int k = std::uniform_int_distribution<int>(2, 5)(rng); k > 0; --k) stem += pick(stem_letters);
    std::string surface;
    for (const auto& p : prefixes) surface += p;
    surface += stem;

    MorphPrediction m;
    m.upos = pick(kUpos);
    if (coin(0.5)) m.features["Gender"] = pick(kGender);
    if (coin(0.5)) m.features["Number"] = pick(kNumber);
    for (const auto& p : prefixes) {
      if (coin(0.8)) {
        const auto& fs = profile.prefix_functions.at(p);
        const auto& f = pick(fs);
        if (std::find(m.proclitic_functions.begin(), m.proclitic_functions.end(), f) ==
            m.proclitic_functions.end()) {
          m.proclitic_functions.push_back(f);
        }
      }
    }
    if (coin(0.2) && std::find(m.proclitic_functions.begin(), m.proclitic_functions.end(), "DET") ==
                         m.proclitic_functions.end()) {
      m.proclitic_functions.push_back("DET");
    }
    if (coin(0.3)) {
      m.suffix = SuffixPrediction{coin(0.5) ? "PRON" : "ADP_PRON",
                                  {{"Gender", pick(kGender)},
                                   {"Number", pick(kNumber)},
                                   {"Person", pick(kPerson)}}};
    }

    in.tokens.push_back({i, surface});
    in.deps.push_back({heads[i], heads[i] == 0 ? "root" : pick(kRelations)});
    in.morphs.push_back(std::move(m));
    in.segs.push_back({prefixes});
    in.lemmas.push_back({"l" + stem, true});
  }
  return in;
}

TempDir::TempDir() {
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = base / ("flipparse-test-" + std::to_string(rd()));
    if (std::filesystem::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create a temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace testsupport
