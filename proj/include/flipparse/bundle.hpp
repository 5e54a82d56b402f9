#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "flipparse/conllu.hpp"
#include "flipparse/profile.hpp"

namespace flipparse {

using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXf;

/// y = x W + b with W stored input-major (in × out), as exported.
struct LinearLayer {
  Matrix weight;
  RowVector bias;

  LinearLayer() = default;
  LinearLayer(int in, int out) : weight(Matrix::Zero(in, out)), bias(RowVector::Zero(out)) {}

  int in_dim() const { return static_cast<int>(weight.rows()); }
  int out_dim() const { return static_cast<int>(weight.cols()); }
  Matrix apply(const Matrix& x) const;
  RowVector apply_row(const Eigen::Ref<const RowVector>& x) const;

  bool operator==(const LinearLayer& other) const;
};

/// A group of mutually exclusive labels occupying consecutive classifier
/// columns, e.g. the Gender slot of the feature classifier.
struct LabelSlot {
  std::string name;
  std::vector<std::string> values;

  bool operator==(const LabelSlot&) const = default;
};

/// Label used for "no value" in feature slots and "no suffix" in the suffix
/// function inventory (always index 0 there).
inline constexpr std::string_view kNoneLabel = "_";
inline constexpr std::string_view kBlankToken = "[BLANK]";
inline constexpr std::uint32_t kBundleFormatVersion = 1;
inline constexpr std::uint32_t kBundleFlagLearnedRoot = 1u;
inline constexpr int kDefaultHeadDim = 128;

struct ModelBundle {
  std::uint32_t format_version = kBundleFormatVersion;
  std::uint32_t flags = 0;
  std::uint64_t embed_seed = 0;  // keys the synthetic embedder
  int d = 0;
  int d_head = kDefaultHeadDim;
  RowVector root_vector;  // only with kBundleFlagLearnedRoot

  LinearLayer query;  // d × d_head
  LinearLayer key;    // d × d_head
  std::vector<std::string> relations;
  LinearLayer relation_classifier;  // 2d × |relations|

  std::vector<std::string> vocab;
  std::uint32_t blank_id = 0;
  LinearLayer lm_head;  // d × |vocab|

  std::vector<std::string> upos_labels;
  LinearLayer pos_classifier;
  std::vector<std::string> proclitic_labels;
  LinearLayer proclitic_classifier;  // multi-label
  std::vector<LabelSlot> feature_slots;
  LinearLayer feature_classifier;
  std::vector<std::string> suffix_labels;  // [0] == kNoneLabel
  LinearLayer suffix_classifier;
  std::vector<LabelSlot> suffix_feature_slots;
  LinearLayer suffix_feature_classifier;

  std::vector<std::string> seg_groups;  // letter-group per binary classifier
  std::vector<LinearLayer> seg_classifiers;  // d × 2: [absent, present]

  std::vector<std::string> ner_labels;
  LinearLayer ner_classifier;

  bool learned_root() const { return (flags & kBundleFlagLearnedRoot) != 0; }

  /// Throws BundleError naming the first head whose shape or inventory is
  /// inconsistent.
  void validate() const;

  bool operator==(const ModelBundle& other) const;
};

class BundleError : public std::runtime_error {
 public:
  BundleError(const std::string& what, std::optional<std::uint64_t> offset = std::nullopt);
  std::optional<std::uint64_t> offset() const { return offset_; }

 private:
  std::optional<std::uint64_t> offset_;
};

/// Serializes without validating (the writer of record for the format).
std::string serialize_bundle(const ModelBundle& bundle);
/// Parses and validates.
ModelBundle deserialize_bundle(std::string_view bytes);

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

/// Default label inventories shipped with synthetic bundles.
const std::vector<std::string>& default_relations();
const std::vector<std::string>& default_proclitic_labels();
const std::vector<LabelSlot>& default_feature_slots();
const std::vector<std::string>& default_suffix_labels();
const std::vector<LabelSlot>& default_suffix_feature_slots();
/// O followed by B-/I- pairs of the 13 entity classes.
const std::vector<std::string>& default_ner_labels();

/// Deterministic random bundle for desk-scale testing.
ModelBundle synthetic_bundle(std::uint64_t seed, int d, const LanguageProfile& profile,
                             int d_head = kDefaultHeadDim, int vocab_size = 256);

/// Row 0 is the root (sequence-start) embedding, rows 1..n the whole tokens.
struct EmbeddingMatrix {
  Matrix rows;

  int token_count() const { return static_cast<int>(rows.rows()) - 1; }
  int dim() const { return static_cast<int>(rows.cols()); }
};

/// FNV-1a 64 over the token surfaces joined by single spaces.
std::uint64_t sentence_key(std::span<const WholeToken> tokens);

/// Per-sentence embedding records keyed by sentence_key.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(int d = 0) : d_(d) {}

  int dim() const { return d_; }
  size_t size() const { return records_.size(); }
  void add(std::span<const WholeToken> tokens, Matrix rows);
  const Matrix* find(std::uint64_t key) const;

  std::string serialize() const;
  static EmbeddingStore deserialize(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static EmbeddingStore load(const std::filesystem::path& path);

 private:
  static EmbeddingStore parse_body(std::string_view bytes);

  int d_;
  std::vector<std::uint64_t> order_;
  std::unordered_map<std::uint64_t, Matrix> records_;
};

class LookupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Synthetic contextual embeddings: every row is a keyed hash of
/// (embed_seed, surface, position). A learned root vector, when present,
/// replaces row 0.
EmbeddingMatrix embed(std::span<const WholeToken> tokens, const ModelBundle& bundle);
/// Rows exactly as stored in the dump.
EmbeddingMatrix embed(std::span<const WholeToken> tokens, const EmbeddingStore& store);

}  // namespace flipparse
