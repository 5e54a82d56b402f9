#include "flipparse/bundle.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

namespace flipparse {

static_assert(std::endian::native == std::endian::little,
              "bundle I/O assumes a little-endian host");

namespace {

constexpr char kBundleMagic[8] = {'F', 'L', 'I', 'P', 'B', 'N', 'D', 'L'};
constexpr char kEmbeddingMagic[8] = {'F', 'L', 'I', 'P', 'E', 'M', 'B', 'D'};
constexpr std::uint32_t kEmbeddingFormatVersion = 1;

std::uint32_t crc_of(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

class Writer {
 public:
  template <typename T>
  void put(T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_string(std::string_view s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void put_strings(const std::vector<std::string>& list) {
    put<std::uint32_t>(static_cast<std::uint32_t>(list.size()));
    for (const auto& s : list) put_string(s);
  }
  void put_slots(const std::vector<LabelSlot>& slots) {
    put<std::uint32_t>(static_cast<std::uint32_t>(slots.size()));
    for (const auto& slot : slots) {
      put_string(slot.name);
      put_strings(slot.values);
    }
  }
  void put_floats(const float* data, size_t n) {
    out_.append(reinterpret_cast<const char*>(data), n * sizeof(float));
  }
  void put_layer(const LinearLayer& layer) {
    put<std::uint32_t>(static_cast<std::uint32_t>(layer.weight.rows()));
    put<std::uint32_t>(static_cast<std::uint32_t>(layer.weight.cols()));
    put_floats(layer.weight.data(), static_cast<size_t>(layer.weight.size()));
    put_floats(layer.bias.data(), static_cast<size_t>(layer.bias.size()));
  }
  void put_raw(const char* data, size_t n) { out_.append(data, n); }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t offset() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }

  void need(size_t n, const char* what) const {
    if (remaining() < n) {
      throw BundleError(std::string("truncated file while reading ") + what, pos_);
    }
  }
  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_string(const char* what) {
    auto n = get<std::uint32_t>(what);
    need(n, what);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::vector<std::string> get_strings(const char* what) {
    auto n = get<std::uint32_t>(what);
    std::vector<std::string> out;
    for (std::uint32_t i = 0; i < n; ++i) out.push_back(get_string(what));
    return out;
  }
  std::vector<LabelSlot> get_slots(const char* what) {
    auto n = get<std::uint32_t>(what);
    std::vector<LabelSlot> out;
    for (std::uint32_t i = 0; i < n; ++i) {
      LabelSlot slot;
      slot.name = get_string(what);
      slot.values = get_strings(what);
      out.push_back(std::move(slot));
    }
    return out;
  }
  void get_floats(float* dst, size_t n, const char* what) {
    need(n * sizeof(float), what);
    std::memcpy(dst, bytes_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }
  LinearLayer get_layer(const char* what) {
    auto rows = get<std::uint32_t>(what);
    auto cols = get<std::uint32_t>(what);
    need(static_cast<size_t>(rows) * cols * sizeof(float), what);
    LinearLayer layer(static_cast<int>(rows), static_cast<int>(cols));
    get_floats(layer.weight.data(), static_cast<size_t>(rows) * cols, what);
    get_floats(layer.bias.data(), cols, what);
    return layer;
  }
  void expect_magic(const char (&magic)[8], const char* what) {
    need(8, what);
    if (std::memcmp(bytes_.data(), magic, 8) != 0) {
      throw BundleError(std::string("bad magic header for ") + what, 0);
    }
    pos_ = 8;
  }
  bool checksum_ok() const {
    if (bytes_.size() < 12) return false;
    const size_t body = bytes_.size() - 4;
    std::uint32_t stored;
    std::memcpy(&stored, bytes_.data() + body, 4);
    return stored == crc_of(bytes_.substr(0, body));
  }
  std::uint64_t checksum_offset() const { return bytes_.size() < 4 ? 0 : bytes_.size() - 4; }
  void expect_end_of_body() {
    if (remaining() != 4) {
      throw BundleError("unexpected trailing bytes before checksum", pos_);
    }
  }

 private:
  std::string_view bytes_;
  size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BundleError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw BundleError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw BundleError("write failed for " + path.string());
}

size_t slot_width(const std::vector<LabelSlot>& slots) {
  size_t n = 0;
  for (const auto& s : slots) n += s.values.size();
  return n;
}

void check_layer(const LinearLayer& layer, int in, size_t out, const std::string& head) {
  if (layer.in_dim() != in) {
    throw BundleError(head + ": expected " + std::to_string(in) + " input rows, found " +
                      std::to_string(layer.in_dim()));
  }
  if (static_cast<size_t>(layer.out_dim()) != out) {
    throw BundleError(head + ": expected " + std::to_string(out) +
                      " output columns (label inventory size), found " +
                      std::to_string(layer.out_dim()));
  }
  if (layer.bias.size() != layer.out_dim()) {
    throw BundleError(head + ": bias length does not match output columns");
  }
  if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
    throw BundleError(head + ": non-finite weight");
  }
}

void check_labels(const std::vector<std::string>& labels, const std::string& head) {
  if (labels.empty()) throw BundleError(head + ": empty label inventory");
}

void check_slots(const std::vector<LabelSlot>& slots, const std::string& head) {
  if (slots.empty()) throw BundleError(head + ": empty slot inventory");
  for (const auto& s : slots) {
    if (s.values.empty()) throw BundleError(head + ": slot '" + s.name + "' has no values");
  }
}

// splitmix64; used for both weights and synthetic embeddings so that
// output is identical on every platform.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xCBF29CE484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

// Uniform in [-1, 1).
float unit_float(std::uint64_t bits) {
  return static_cast<float>(bits >> 40) * (2.0f / 16777216.0f) - 1.0f;
}

class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  float next() {
    state_ += 0x9E3779B97F4A7C15ull;
    return unit_float(mix64(state_));
  }

 private:
  std::uint64_t state_;
};

LinearLayer random_layer(SplitMix& rng, int in, int out) {
  LinearLayer layer(in, out);
  const float scale = 1.0f / std::sqrt(static_cast<float>(in));
  for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = rng.next() * scale;
  for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.next() * 0.1f;
  return layer;
}

}  // namespace

Matrix LinearLayer::apply(const Matrix& x) const {
  Matrix y = x * weight;
  y.rowwise() += bias;
  return y;
}

RowVector LinearLayer::apply_row(const Eigen::Ref<const RowVector>& x) const {
  return x * weight + bias;
}

bool LinearLayer::operator==(const LinearLayer& other) const {
  if (weight.rows() != other.weight.rows() || weight.cols() != other.weight.cols() ||
      bias.size() != other.bias.size()) {
    return false;
  }
  // bitwise, so NaN payloads and signed zeros count
  return std::memcmp(weight.data(), other.weight.data(), weight.size() * sizeof(float)) == 0 &&
         std::memcmp(bias.data(), other.bias.data(), bias.size() * sizeof(float)) == 0;
}

BundleError::BundleError(const std::string& what, std::optional<std::uint64_t> offset)
    : std::runtime_error(offset ? what + " at byte offset " + std::to_string(*offset) : what),
      offset_(offset) {}

void ModelBundle::validate() const {
  if (format_version != kBundleFormatVersion) {
    throw BundleError("unsupported bundle format_version " + std::to_string(format_version));
  }
  if (d < 1 || d_head < 1) throw BundleError("encoder: dimensions must be positive");
  if (learned_root() && root_vector.size() != d) {
    throw BundleError("root: learned root vector length differs from d");
  }
  check_layer(query, d, static_cast<size_t>(d_head), "dependency query");
  check_layer(key, d, static_cast<size_t>(d_head), "dependency key");
  check_labels(relations, "relation classifier");
  check_layer(relation_classifier, 2 * d, relations.size(), "relation classifier");
  check_labels(vocab, "lemma head");
  if (blank_id >= vocab.size()) throw BundleError("lemma head: BLANK id outside vocabulary");
  check_layer(lm_head, d, vocab.size(), "lemma head");
  check_labels(upos_labels, "POS classifier");
  for (const auto& tag : upos_labels) {
    if (!is_upos(tag)) throw BundleError("POS classifier: unknown UPOS '" + tag + "'");
  }
  check_layer(pos_classifier, d, upos_labels.size(), "POS classifier");
  check_labels(proclitic_labels, "proclitic classifier");
  check_layer(proclitic_classifier, d, proclitic_labels.size(), "proclitic classifier");
  check_slots(feature_slots, "feature classifier");
  check_layer(feature_classifier, d, slot_width(feature_slots), "feature classifier");
  check_labels(suffix_labels, "suffix classifier");
  if (suffix_labels.front() != kNoneLabel) {
    throw BundleError("suffix classifier: label 0 must be the no-suffix label '_'");
  }
  check_layer(suffix_classifier, d, suffix_labels.size(), "suffix classifier");
  check_slots(suffix_feature_slots, "suffix feature classifier");
  check_layer(suffix_feature_classifier, d, slot_width(suffix_feature_slots),
              "suffix feature classifier");
  if (seg_groups.empty() || seg_groups.size() != seg_classifiers.size()) {
    throw BundleError("segmentation: one binary classifier per letter-group required");
  }
  for (size_t i = 0; i < seg_classifiers.size(); ++i) {
    check_layer(seg_classifiers[i], d, 2, "segmentation classifier '" + seg_groups[i] + "'");
  }
  check_labels(ner_labels, "NER classifier");
  check_layer(ner_classifier, d, ner_labels.size(), "NER classifier");
}

bool ModelBundle::operator==(const ModelBundle& o) const {
  auto same_root = [&] {
    return root_vector.size() == o.root_vector.size() &&
           std::memcmp(root_vector.data(), o.root_vector.data(),
                       root_vector.size() * sizeof(float)) == 0;
  };
  return format_version == o.format_version && flags == o.flags && embed_seed == o.embed_seed &&
         d == o.d && d_head == o.d_head && same_root() && query == o.query && key == o.key &&
         relations == o.relations && relation_classifier == o.relation_classifier &&
         vocab == o.vocab && blank_id == o.blank_id && lm_head == o.lm_head &&
         upos_labels == o.upos_labels && pos_classifier == o.pos_classifier &&
         proclitic_labels == o.proclitic_labels &&
         proclitic_classifier == o.proclitic_classifier && feature_slots == o.feature_slots &&
         feature_classifier == o.feature_classifier && suffix_labels == o.suffix_labels &&
         suffix_classifier == o.suffix_classifier &&
         suffix_feature_slots == o.suffix_feature_slots &&
         suffix_feature_classifier == o.suffix_feature_classifier &&
         seg_groups == o.seg_groups && seg_classifiers == o.seg_classifiers &&
         ner_labels == o.ner_labels && ner_classifier == o.ner_classifier;
}

std::string serialize_bundle(const ModelBundle& b) {
  Writer w;
  w.put_raw(kBundleMagic, 8);
  w.put<std::uint32_t>(b.format_version);
  w.put<std::uint32_t>(b.flags);
  w.put<std::uint64_t>(b.embed_seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(b.d));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(b.d_head));
  if (b.learned_root()) w.put_floats(b.root_vector.data(), static_cast<size_t>(b.root_vector.size()));
  w.put_layer(b.query);
  w.put_layer(b.key);
  w.put_strings(b.relations);
  w.put_layer(b.relation_classifier);
  w.put_strings(b.vocab);
  w.put<std::uint32_t>(b.blank_id);
  w.put_layer(b.lm_head);
  w.put_strings(b.upos_labels);
  w.put_layer(b.pos_classifier);
  w.put_strings(b.proclitic_labels);
  w.put_layer(b.proclitic_classifier);
  w.put_slots(b.feature_slots);
  w.put_layer(b.feature_classifier);
  w.put_strings(b.suffix_labels);
  w.put_layer(b.suffix_classifier);
  w.put_slots(b.suffix_feature_slots);
  w.put_layer(b.suffix_feature_classifier);
  w.put_strings(b.seg_groups);
  for (const auto& layer : b.seg_classifiers) w.put_layer(layer);
  w.put_strings(b.ner_labels);
  w.put_layer(b.ner_classifier);
  w.put<std::uint32_t>(crc_of(w.bytes()));
  return std::move(w.bytes());
}

namespace {

ModelBundle parse_bundle_body(std::string_view bytes) {
  Reader r(bytes);
  r.expect_magic(kBundleMagic, "bundle");
  ModelBundle b;
  b.format_version = r.get<std::uint32_t>("header");
  if (b.format_version != kBundleFormatVersion) {
    throw BundleError("unsupported bundle format_version " + std::to_string(b.format_version), 8);
  }
  b.flags = r.get<std::uint32_t>("header");
  b.embed_seed = r.get<std::uint64_t>("header");
  b.d = static_cast<int>(r.get<std::uint32_t>("header"));
  b.d_head = static_cast<int>(r.get<std::uint32_t>("header"));
  if (b.learned_root()) {
    r.need(static_cast<size_t>(b.d) * sizeof(float), "root vector");
    b.root_vector = RowVector(b.d);
    r.get_floats(b.root_vector.data(), static_cast<size_t>(b.d), "root vector");
  }
  b.query = r.get_layer("dependency query");
  b.key = r.get_layer("dependency key");
  b.relations = r.get_strings("relation inventory");
  b.relation_classifier = r.get_layer("relation classifier");
  b.vocab = r.get_strings("vocabulary");
  b.blank_id = r.get<std::uint32_t>("BLANK id");
  b.lm_head = r.get_layer("lemma head");
  b.upos_labels = r.get_strings("POS inventory");
  b.pos_classifier = r.get_layer("POS classifier");
  b.proclitic_labels = r.get_strings("proclitic inventory");
  b.proclitic_classifier = r.get_layer("proclitic classifier");
  b.feature_slots = r.get_slots("feature slots");
  b.feature_classifier = r.get_layer("feature classifier");
  b.suffix_labels = r.get_strings("suffix inventory");
  b.suffix_classifier = r.get_layer("suffix classifier");
  b.suffix_feature_slots = r.get_slots("suffix feature slots");
  b.suffix_feature_classifier = r.get_layer("suffix feature classifier");
  b.seg_groups = r.get_strings("segmentation groups");
  for (size_t i = 0; i < b.seg_groups.size(); ++i) {
    b.seg_classifiers.push_back(r.get_layer("segmentation classifier"));
  }
  b.ner_labels = r.get_strings("NER inventory");
  b.ner_classifier = r.get_layer("NER classifier");
  r.expect_end_of_body();
  return b;
}

}  // namespace

// A failed checksum is reported as such unless the body is also
// structurally truncated, in which case the truncation offset is more useful.
ModelBundle deserialize_bundle(std::string_view bytes) {
  Reader r(bytes);
  if (!r.checksum_ok()) {
    parse_bundle_body(bytes);
    throw BundleError("checksum mismatch", r.checksum_offset());
  }
  ModelBundle b = parse_bundle_body(bytes);
  b.validate();
  return b;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  bundle.validate();
  write_file(path, serialize_bundle(bundle));
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return deserialize_bundle(bytes);
  } catch (const BundleError& e) {
    throw BundleError(path.string() + ": " + e.what());
  }
}

const std::vector<std::string>& default_relations() {
  static const std::vector<std::string> labels = {
      "acl",        "acl:relcl", "advcl",     "advmod",   "amod",     "appos",
      "aux",        "case",      "cc",        "ccomp",    "compound", "compound:affix",
      "compound:smixut", "conj", "cop",       "csubj",    "dep",      "det",
      "discourse",  "fixed",     "flat",      "flat:name", "iobj",    "list",
      "mark",       "nmod",      "nmod:poss", "nsubj",    "nsubj:pass", "nummod",
      "obj",        "obl",       "orphan",    "parataxis", "punct",   "root",
      "vocative",   "xcomp"};
  return labels;
}

const std::vector<std::string>& default_proclitic_labels() {
  static const std::vector<std::string> labels = {"ADP", "ADV", "CCONJ", "DET", "SCONJ"};
  return labels;
}

const std::vector<LabelSlot>& default_feature_slots() {
  static const std::vector<LabelSlot> slots = {
      {"Gender", {"_", "Masc", "Fem", "Fem,Masc"}},
      {"Number", {"_", "Sing", "Plur", "Dual"}},
      {"Person", {"_", "1", "2", "3"}},
      {"Tense", {"_", "Past", "Fut"}},
  };
  return slots;
}

const std::vector<std::string>& default_suffix_labels() {
  static const std::vector<std::string> labels = {"_", "ADP_PRON", "PRON"};
  return labels;
}

const std::vector<LabelSlot>& default_suffix_feature_slots() {
  static const std::vector<LabelSlot> slots = {
      {"Gender", {"Masc", "Fem", "Fem,Masc"}},
      {"Number", {"Sing", "Plur"}},
      {"Person", {"1", "2", "3"}},
  };
  return slots;
}

const std::vector<std::string>& default_ner_labels() {
  static const std::vector<std::string> labels = [] {
    const char* classes[] = {"ANG", "DUC", "EVE", "FAC", "GPE", "INFORMAL", "LOC",
                             "MISC", "ORG", "PER", "TIMEX", "TTL", "WOA"};
    std::vector<std::string> out = {"O"};
    for (const char* c : classes) {
      out.push_back(std::string("B-") + c);
      out.push_back(std::string("I-") + c);
    }
    return out;
  }();
  return labels;
}

ModelBundle synthetic_bundle(std::uint64_t seed, int d, const LanguageProfile& profile, int d_head,
                             int vocab_size) {
  if (d < 4) throw std::invalid_argument("synthetic_bundle: d must be at least 4");
  if (d_head < 1 || vocab_size < 2) throw std::invalid_argument("synthetic_bundle: bad sizes");
  SplitMix rng(mix64(seed ^ 0x5EEDB0DDull));

  ModelBundle b;
  b.embed_seed = seed;
  b.d = d;
  b.d_head = d_head;
  b.query = random_layer(rng, d, d_head);
  b.key = random_layer(rng, d, d_head);
  b.relations = default_relations();
  b.relation_classifier = random_layer(rng, 2 * d, static_cast<int>(b.relations.size()));

  b.vocab.emplace_back(kBlankToken);
  for (int i = 1; i < vocab_size; ++i) b.vocab.push_back("lemma" + std::to_string(i));
  b.blank_id = 0;
  b.lm_head = random_layer(rng, d, vocab_size);

  b.upos_labels = upos_inventory();
  b.pos_classifier = random_layer(rng, d, static_cast<int>(b.upos_labels.size()));
  b.proclitic_labels = default_proclitic_labels();
  b.proclitic_classifier = random_layer(rng, d, static_cast<int>(b.proclitic_labels.size()));
  b.feature_slots = default_feature_slots();
  b.feature_classifier = random_layer(rng, d, static_cast<int>(slot_width(b.feature_slots)));
  b.suffix_labels = default_suffix_labels();
  b.suffix_classifier = random_layer(rng, d, static_cast<int>(b.suffix_labels.size()));
  b.suffix_feature_slots = default_suffix_feature_slots();
  b.suffix_feature_classifier =
      random_layer(rng, d, static_cast<int>(slot_width(b.suffix_feature_slots)));

  for (const auto& group : profile.letter_groups) {
    b.seg_groups.push_back(group.text);
    b.seg_classifiers.push_back(random_layer(rng, d, 2));
  }
  b.ner_labels = default_ner_labels();
  b.ner_classifier = random_layer(rng, d, static_cast<int>(b.ner_labels.size()));
  return b;
}

std::uint64_t sentence_key(std::span<const WholeToken> tokens) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) h = fnv1a(" ", h);
    h = fnv1a(tokens[i].surface, h);
  }
  return h;
}

void EmbeddingStore::add(std::span<const WholeToken> tokens, Matrix rows) {
  if (rows.cols() != d_) throw std::invalid_argument("EmbeddingStore::add: wrong row width");
  if (rows.rows() != static_cast<Eigen::Index>(tokens.size()) + 1) {
    throw std::invalid_argument("EmbeddingStore::add: need one root row plus one row per token");
  }
  const auto key = sentence_key(tokens);
  if (!records_.contains(key)) order_.push_back(key);
  records_[key] = std::move(rows);
}

const Matrix* EmbeddingStore::find(std::uint64_t key) const {
  auto it = records_.find(key);
  return it == records_.end() ? nullptr : &it->second;
}

std::string EmbeddingStore::serialize() const {
  Writer w;
  w.put_raw(kEmbeddingMagic, 8);
  w.put<std::uint32_t>(kEmbeddingFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(d_));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(order_.size()));
  for (auto key : order_) {
    const Matrix& rows = records_.at(key);
    w.put<std::uint64_t>(key);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(rows.rows()));
    w.put_floats(rows.data(), static_cast<size_t>(rows.size()));
  }
  w.put<std::uint32_t>(crc_of(w.bytes()));
  return std::move(w.bytes());
}

EmbeddingStore EmbeddingStore::deserialize(std::string_view bytes) {
  if (Reader check(bytes); !check.checksum_ok()) {
    parse_body(bytes);
    throw BundleError("checksum mismatch", check.checksum_offset());
  }
  return parse_body(bytes);
}

EmbeddingStore EmbeddingStore::parse_body(std::string_view bytes) {
  Reader r(bytes);
  r.expect_magic(kEmbeddingMagic, "embedding dump");
  auto version = r.get<std::uint32_t>("header");
  if (version != kEmbeddingFormatVersion) {
    throw BundleError("unsupported embedding dump version " + std::to_string(version), 8);
  }
  EmbeddingStore store(static_cast<int>(r.get<std::uint32_t>("header")));
  auto count = r.get<std::uint32_t>("header");
  for (std::uint32_t i = 0; i < count; ++i) {
    auto key = r.get<std::uint64_t>("record key");
    auto rows = r.get<std::uint32_t>("record rows");
    r.need(static_cast<size_t>(rows) * store.d_ * sizeof(float), "record rows");
    Matrix m(rows, store.d_);
    r.get_floats(m.data(), static_cast<size_t>(m.size()), "record rows");
    if (!store.records_.contains(key)) store.order_.push_back(key);
    store.records_[key] = std::move(m);
  }
  r.expect_end_of_body();
  return store;
}

void EmbeddingStore::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return deserialize(bytes);
  } catch (const BundleError& e) {
    throw BundleError(path.string() + ": " + e.what());
  }
}

EmbeddingMatrix embed(std::span<const WholeToken> tokens, const ModelBundle& bundle) {
  if (tokens.empty()) throw std::invalid_argument("embed: at least one token required");
  EmbeddingMatrix e{Matrix(static_cast<Eigen::Index>(tokens.size()) + 1, bundle.d)};
  const std::uint64_t seed_key = mix64(bundle.embed_seed);
  for (size_t row = 0; row <= tokens.size(); ++row) {
    std::uint64_t key = seed_key;
    if (row > 0) key = fnv1a(tokens[row - 1].surface, key);
    key = mix64(key ^ mix64(row));
    for (int c = 0; c < bundle.d; ++c) {
      e.rows(static_cast<Eigen::Index>(row), c) = unit_float(mix64(key + static_cast<std::uint64_t>(c)));
    }
  }
  if (bundle.learned_root()) e.rows.row(0) = bundle.root_vector;
  return e;
}

EmbeddingMatrix embed(std::span<const WholeToken> tokens, const EmbeddingStore& store) {
  if (tokens.empty()) throw std::invalid_argument("embed: at least one token required");
  const Matrix* rows = store.find(sentence_key(tokens));
  if (rows == nullptr) {
    std::string text;
    for (const auto& t : tokens) text += (text.empty() ? "" : " ") + t.surface;
    throw LookupError("no embedding record for sentence '" + text + "'");
  }
  if (rows->rows() != static_cast<Eigen::Index>(tokens.size()) + 1) {
    throw LookupError("embedding record row count does not match the token count");
  }
  return EmbeddingMatrix{*rows};
}

}  // namespace flipparse
