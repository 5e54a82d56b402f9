#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "flipparse/conllu.hpp"
#include "flipparse/profile.hpp"

namespace flipparse {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Entry point of the `flipparse` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

/// Deterministic benchmark corpus: `count` sentences with lengths drawn
/// uniformly from [min_len, max_len], words built from the profile's
/// letter-groups and a fixed alphabet.
std::vector<std::vector<WholeToken>> generate_corpus(std::uint64_t seed, int count, int min_len,
                                                     int max_len, const LanguageProfile& profile);

}  // namespace flipparse
