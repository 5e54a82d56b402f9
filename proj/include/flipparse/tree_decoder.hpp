#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "flipparse/heads.hpp"

namespace flipparse {

/// Per-dependent best head (lowest index on ties). Heads of tokens 1..n;
/// the result may contain cycles or several roots.
std::vector<int> argmax_heads(const DepScores& scores);

/// Maximum spanning arborescence rooted at 0 with exactly one root child
/// (Chu-Liu/Edmonds). Heads of tokens 1..n.
std::vector<int> mst_decode(const DepScores& scores);

/// Sum of scores(i, heads[i-1]) over tokens in index order.
double tree_score(const DepScores& scores, std::span<const int> heads);

/// True iff `heads` is a tree rooted at 0 with exactly one root child.
bool is_single_rooted_tree(std::span<const int> heads);

/// Calls `visit` with every single-rooted head assignment over n tokens,
/// in lexicographic order of the head vectors.
void for_each_single_rooted_tree(int n, const std::function<void(std::span<const int>)>& visit);

inline constexpr int kBruteForceMaxTokens = 8;

/// Exhaustive maximum over single-rooted trees; ties go to the
/// lexicographically smallest head vector. Refuses n > 8.
std::vector<int> brute_force_mst(const DepScores& scores);

}  // namespace flipparse
