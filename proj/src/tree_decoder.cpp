#include "flipparse/tree_decoder.hpp"

#include <cmath>
#include <stdexcept>

namespace flipparse {

namespace {

// Edge weight in the ordered group Z x R, compared lexicographically. The
// integer part counts root edges negatively, so any tree with one root edge
// beats every tree with more, and among single-rooted trees the real part
// decides. This enforces the single-root constraint exactly, with no
// finite penalty constant.
struct Weight {
  std::int64_t roots = 0;
  double score = 0.0;

  Weight operator+(const Weight& o) const { return {roots + o.roots, score + o.score}; }
  Weight operator-(const Weight& o) const { return {roots - o.roots, score - o.score}; }
  bool operator>(const Weight& o) const {
    return roots != o.roots ? roots > o.roots : score > o.score;
  }
};

constexpr std::int64_t kForbidden = -(std::int64_t{1} << 40);

bool allowed(const Weight& w) { return w.roots > kForbidden / 2; }
Weight forbidden() { return {kForbidden, 0.0}; }

using WeightMatrix = std::vector<std::vector<Weight>>;  // [dependent][head]

// Nodes on a cycle of `tree` (excluding the root), or empty.
std::vector<int> find_cycle(const std::vector<int>& tree) {
  const int m = static_cast<int>(tree.size());
  std::vector<int> state(m, 0);  // 0 new, 1 on walk, 2 done
  state[0] = 2;
  for (int start = 1; start < m; ++start) {
    if (state[start] != 0) continue;
    std::vector<int> walk;
    int v = start;
    while (state[v] == 0) {
      state[v] = 1;
      walk.push_back(v);
      v = tree[v];
    }
    if (state[v] == 1) {
      std::vector<int> cycle;
      for (auto it = walk.rbegin(); it != walk.rend(); ++it) {
        cycle.push_back(*it);
        if (*it == v) break;
      }
      return cycle;
    }
    for (int w : walk) state[w] = 2;
  }
  return {};
}

std::vector<int> chu_liu_edmonds(const WeightMatrix& s) {
  const int m = static_cast<int>(s.size());
  std::vector<int> tree(m, 0);
  for (int dep = 1; dep < m; ++dep) {
    int best = -1;
    for (int head = 0; head < m; ++head) {
      if (head == dep || !allowed(s[dep][head])) continue;
      if (best < 0 || s[dep][head] > s[dep][best]) best = head;
    }
    if (best < 0) throw std::logic_error("mst_decode: node without an admissible head");
    tree[dep] = best;
  }

  const std::vector<int> cycle = find_cycle(tree);
  if (cycle.empty()) return tree;

  std::vector<bool> in_cycle(m, false);
  for (int c : cycle) in_cycle[c] = true;
  Weight cycle_weight;
  for (int c : cycle) cycle_weight = cycle_weight + s[c][tree[c]];

  std::vector<int> outside;  // original ids of non-cycle nodes, root first
  for (int v = 0; v < m; ++v) {
    if (!in_cycle[v]) outside.push_back(v);
  }
  const int k = static_cast<int>(outside.size());  // index of the contracted node
  WeightMatrix sub(k + 1, std::vector<Weight>(k + 1, forbidden()));
  std::vector<int> enter_at(m, -1);  // outside dep -> cycle node it attaches to
  std::vector<int> broken_at(m, -1);  // outside head -> cycle node whose edge it replaces

  for (int a = 1; a < k; ++a) {
    const int dep = outside[a];
    for (int b = 0; b < k; ++b) {
      if (a != b) sub[a][b] = s[dep][outside[b]];
    }
    Weight best = forbidden();
    for (int c : cycle) {
      if (allowed(s[dep][c]) && (enter_at[dep] < 0 || s[dep][c] > best ||
                                 (!(best > s[dep][c]) && c < enter_at[dep]))) {
        best = s[dep][c];
        enter_at[dep] = c;
      }
    }
    sub[a][k] = best;
  }
  for (int b = 0; b < k; ++b) {
    const int head = outside[b];
    Weight best = forbidden();
    for (int c : cycle) {
      if (!allowed(s[c][head])) continue;
      const Weight w = s[c][head] - s[c][tree[c]] + cycle_weight;
      if (broken_at[head] < 0 || w > best || (!(best > w) && c < broken_at[head])) {
        best = w;
        broken_at[head] = c;
      }
    }
    sub[k][b] = best;
  }

  const std::vector<int> contracted = chu_liu_edmonds(sub);
  std::vector<int> result = tree;
  for (int a = 1; a < k; ++a) {
    const int h = contracted[a];
    result[outside[a]] = (h == k) ? enter_at[outside[a]] : outside[h];
  }
  const int entry_head = outside[contracted[k]];
  result[broken_at[entry_head]] = entry_head;
  return result;
}

void check_scores(const DepScores& scores) {
  if (scores.token_count() < 1) throw std::invalid_argument("tree decoding needs at least one token");
  if (scores.values.cols() != scores.values.rows()) {
    throw std::invalid_argument("score matrix must be (n+1) x (n+1)");
  }
}

bool acyclic(std::span<const int> heads) {
  const int n = static_cast<int>(heads.size());
  for (int start = 1; start <= n; ++start) {
    int v = start;
    for (int steps = 0; steps <= n; ++steps) {
      v = heads[v - 1];
      if (v == 0) break;
      if (v == start || steps == n) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<int> argmax_heads(const DepScores& scores) {
  check_scores(scores);
  const int n = scores.token_count();
  std::vector<int> heads(n);
  for (int i = 1; i <= n; ++i) {
    int best = -1;
    for (int j = 0; j <= n; ++j) {
      if (j == i) continue;
      if (best < 0 || scores(i, j) > scores(i, best)) best = j;
    }
    heads[i - 1] = best;
  }
  return heads;
}

std::vector<int> mst_decode(const DepScores& scores) {
  check_scores(scores);
  const int n = scores.token_count();
  WeightMatrix w(n + 1, std::vector<Weight>(n + 1, forbidden()));
  for (int dep = 1; dep <= n; ++dep) {
    for (int head = 0; head <= n; ++head) {
      const double v = scores(dep, head);
      if (head == dep || std::isnan(v) || v == -INFINITY) continue;
      if (!std::isfinite(v)) throw std::invalid_argument("mst_decode: non-finite score");
      w[dep][head] = {head == 0 ? -1 : 0, v};
    }
  }
  const std::vector<int> tree = chu_liu_edmonds(w);
  return std::vector<int>(tree.begin() + 1, tree.end());
}

double tree_score(const DepScores& scores, std::span<const int> heads) {
  double total = 0.0;
  for (size_t i = 0; i < heads.size(); ++i) total += scores(static_cast<int>(i) + 1, heads[i]);
  return total;
}

bool is_single_rooted_tree(std::span<const int> heads) {
  const int n = static_cast<int>(heads.size());
  int roots = 0;
  for (int i = 1; i <= n; ++i) {
    const int h = heads[i - 1];
    if (h < 0 || h > n || h == i) return false;
    if (h == 0) ++roots;
  }
  return roots == 1 && acyclic(heads);
}

void for_each_single_rooted_tree(int n, const std::function<void(std::span<const int>)>& visit) {
  if (n < 1) return;
  std::vector<int> heads(n, 0);
  std::function<void(int, int)> assign = [&](int pos, int roots) {
    if (pos == n) {
      if (roots == 1 && acyclic(heads)) visit(heads);
      return;
    }
    for (int h = 0; h <= n; ++h) {
      if (h == pos + 1) continue;
      if (h == 0 && roots == 1) continue;
      heads[pos] = h;
      assign(pos + 1, roots + (h == 0 ? 1 : 0));
    }
  };
  assign(0, 0);
}

std::vector<int> brute_force_mst(const DepScores& scores) {
  check_scores(scores);
  const int n = scores.token_count();
  if (n > kBruteForceMaxTokens) {
    throw std::invalid_argument("brute_force_mst refuses n > " +
                                std::to_string(kBruteForceMaxTokens));
  }
  std::vector<int> best;
  double best_score = 0.0;
  for_each_single_rooted_tree(n, [&](std::span<const int> heads) {
    const double s = tree_score(scores, heads);
    if (best.empty() || s > best_score) {
      best.assign(heads.begin(), heads.end());
      best_score = s;
    }
  });
  return best;
}

}  // namespace flipparse
