#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "flipparse/bundle.hpp"
#include "flipparse/heads.hpp"
#include "flipparse/profile.hpp"
#include "flipparse/synthesis.hpp"

namespace testsupport {

std::filesystem::path fixture_path(const std::string& relative);
std::string read_text(const std::filesystem::path& path);

const flipparse::LanguageProfile& hebrew();
const flipparse::LanguageProfile& latin();

// A prediction fixture: the synthesis input plus the rule branches it is
// expected to trigger, in firing order.
struct SynthesisCase {
  std::string name;
  flipparse::SynthesisInput input;
  std::vector<std::string> branches;
};

std::vector<SynthesisCase> load_cases(const std::filesystem::path& path);
SynthesisCase load_case(const std::filesystem::path& path);

// Bundle plus embedding dump whose heads reproduce `input` exactly on its
// sentence. Embeddings are one-hot rows (d = n + 1); every head maps row i
// to the wanted label with a unit weight. Lemmas equal to the surface go
// through the BLANK fallback.
struct Oracle {
  flipparse::ModelBundle bundle;
  flipparse::EmbeddingStore store;
};

Oracle build_oracle(const flipparse::SynthesisInput& input, const flipparse::LanguageProfile& profile,
                    const std::vector<std::string>& ner_tags = {});

// Random head scores, optionally restricted to small integers so ties occur.
flipparse::DepScores random_scores(std::mt19937_64& rng, int n, bool small_integers = false);

// Random but well-formed synthesis input over Latin-profile style words.
flipparse::SynthesisInput random_input(std::mt19937_64& rng, int n,
                                       const flipparse::LanguageProfile& profile);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
