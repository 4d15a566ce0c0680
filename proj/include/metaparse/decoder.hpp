#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "metaparse/conllu.hpp"
#include "metaparse/tensor.hpp"

namespace metaparse {

inline constexpr double kMasked = -std::numeric_limits<double>::infinity();

/// Arc scores over n tokens plus ROOT at index 0; at(h, d) scores h -> d.
/// Column 0 (ROOT as dependent) and the diagonal are masked to -inf.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  explicit ScoreMatrix(std::size_t n, double fill = 0.0) : n_(n), scores_((n + 1) * (n + 1), fill) { apply_mask(); }

  std::size_t n() const { return n_; }
  std::size_t dim() const { return n_ + 1; }
  double& at(std::size_t h, std::size_t d) { return scores_[h * (n_ + 1) + d]; }
  double at(std::size_t h, std::size_t d) const { return scores_[h * (n_ + 1) + d]; }
  const std::vector<double>& values() const { return scores_; }

  void apply_mask() {
    for (std::size_t i = 0; i <= n_; ++i) {
      at(i, 0) = kMasked;
      at(i, i) = kMasked;
    }
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> scores_;
};

/// heads[d-1] is the head of token d; 0 = ROOT.
using HeadVector = std::vector<int>;

inline double tree_score(const ScoreMatrix& m, const HeadVector& heads) {
  double s = 0;
  for (std::size_t d = 1; d <= heads.size(); ++d) s += m.at(static_cast<std::size_t>(heads[d - 1]), d);
  return s;
}

/// Valid tree with exactly one dependent of ROOT.
inline bool is_single_root_tree(const HeadVector& heads) { return is_tree(heads); }

namespace detail {

// Chu-Liu/Edmonds on a dense graph with node 0 as root. w[h * size + d].
// Returns heads (heads[0] = -1). Ties resolve to the lowest head index.
inline std::vector<int> chu_liu_edmonds_dense(const std::vector<double>& w, std::size_t size) {
  std::vector<int> head(size, -1);
  for (std::size_t d = 1; d < size; ++d) {
    double best = kMasked;
    for (std::size_t h = 0; h < size; ++h) {
      if (h == d) continue;
      const double s = w[h * size + d];
      if (s > best) {
        best = s;
        head[d] = static_cast<int>(h);
      }
    }
    if (head[d] < 0) throw Error("chu_liu_edmonds: node " + std::to_string(d) + " has no admissible head");
  }

  // Find one cycle.
  std::vector<int> color(size, 0);  // 0 unvisited, 1 on stack (tagged by start), 2 done
  std::vector<int> cycle;
  for (std::size_t start = 1; start < size && cycle.empty(); ++start) {
    if (color[start] != 0) continue;
    std::vector<int> path;
    int cur = static_cast<int>(start);
    while (cur > 0 && color[static_cast<std::size_t>(cur)] == 0) {
      color[static_cast<std::size_t>(cur)] = 1;
      path.push_back(cur);
      cur = head[static_cast<std::size_t>(cur)];
    }
    if (cur > 0 && color[static_cast<std::size_t>(cur)] == 1) {
      bool in = false;
      for (int p : path) {
        if (p == cur) in = true;
        if (in) cycle.push_back(p);
      }
    }
    for (int p : path) color[static_cast<std::size_t>(p)] = 2;
  }
  if (cycle.empty()) return head;

  std::vector<bool> in_cycle(size, false);
  for (int c : cycle) in_cycle[static_cast<std::size_t>(c)] = true;
  std::vector<int> to_new(size, -1);
  std::vector<std::size_t> to_old;
  for (std::size_t v = 0; v < size; ++v) {
    if (in_cycle[v]) continue;
    to_new[v] = static_cast<int>(to_old.size());
    to_old.push_back(v);
  }
  const std::size_t c = to_old.size();
  const std::size_t new_size = c + 1;
  std::vector<double> nw(new_size * new_size, kMasked);
  std::vector<int> enter_via(new_size, -1);  // best cycle node entered from new node u
  std::vector<int> leave_via(new_size, -1);  // best cycle node leaving to new node x

  for (std::size_t nu = 0; nu < c; ++nu) {
    const std::size_t u = to_old[nu];
    for (std::size_t nx = 0; nx < c; ++nx) {
      if (nx == nu) continue;
      nw[nu * new_size + nx] = w[u * size + to_old[nx]];
    }
    double best_in = kMasked;
    for (std::size_t v = 1; v < size; ++v) {
      if (!in_cycle[v]) continue;
      const double s = w[u * size + v] - w[static_cast<std::size_t>(head[v]) * size + v];
      if (s > best_in) {
        best_in = s;
        enter_via[nu] = static_cast<int>(v);
      }
    }
    nw[nu * new_size + c] = best_in;
    double best_out = kMasked;
    for (std::size_t v = 1; v < size; ++v) {
      if (!in_cycle[v]) continue;
      const double s = w[v * size + u];
      if (s > best_out) {
        best_out = s;
        leave_via[nu] = static_cast<int>(v);
      }
    }
    nw[c * new_size + nu] = best_out;
  }
  for (std::size_t i = 0; i < new_size; ++i) nw[i * new_size + 0] = kMasked;

  const std::vector<int> sub = chu_liu_edmonds_dense(nw, new_size);

  std::vector<int> result = head;  // cycle nodes keep their in-cycle heads by default
  for (std::size_t nx = 1; nx < c; ++nx) {
    const std::size_t x = to_old[nx];
    const int hn = sub[nx];
    result[x] = static_cast<std::size_t>(hn) == c ? leave_via[nx] : static_cast<int>(to_old[static_cast<std::size_t>(hn)]);
  }
  const int entering = sub[c];
  const int v = enter_via[static_cast<std::size_t>(entering)];
  result[static_cast<std::size_t>(v)] = static_cast<int>(to_old[static_cast<std::size_t>(entering)]);
  return result;
}

}  // namespace detail

/// Maximum spanning arborescence rooted at ROOT with exactly one ROOT
/// dependent: each candidate root dependent r is forced in turn and the best
/// of the constrained solutions wins (lowest r on ties).
inline HeadVector chu_liu_edmonds(const ScoreMatrix& m) {
  const std::size_t n = m.n();
  if (n == 0) throw Error("chu_liu_edmonds: empty score matrix");
  if (n == 1) return {0};
  const std::size_t size = n + 1;
  HeadVector best;
  double best_score = kMasked;
  std::vector<double> w(m.values());
  for (std::size_t i = 0; i < size; ++i) {
    w[i * size + i] = kMasked;
    w[i * size + 0] = kMasked;
  }
  for (std::size_t r = 1; r <= n; ++r) {
    if (m.at(0, r) == kMasked) continue;
    std::vector<double> wr = w;
    for (std::size_t d = 1; d <= n; ++d)
      if (d != r) wr[d] = kMasked;
    std::vector<int> heads;
    try {
      heads = detail::chu_liu_edmonds_dense(wr, size);
    } catch (const Error&) {
      continue;
    }
    HeadVector hv(heads.begin() + 1, heads.end());
    const double s = tree_score(m, hv);
    if (best.empty() || s > best_score) {
      best_score = s;
      best = std::move(hv);
    }
  }
  if (best.empty()) throw Error("chu_liu_edmonds: no admissible tree");
  return best;
}

/// Exhaustive search over all head vectors (n <= 8). Among optimal trees the
/// lexicographically smallest head vector is returned.
inline HeadVector brute_force_mst(const ScoreMatrix& m) {
  const std::size_t n = m.n();
  if (n == 0) throw Error("brute_force_mst: empty score matrix");
  if (n > 8) throw Error("brute_force_mst: n = " + std::to_string(n) + " exceeds the limit of 8");
  HeadVector cur(n, 0), best;
  double best_score = kMasked;
  auto recurse = [&](auto&& self, std::size_t d, int roots, double score) -> void {
    if (d > n) {
      if (roots == 1 && is_tree(cur) && (best.empty() || score > best_score)) {
        best_score = score;
        best = cur;
      }
      return;
    }
    for (std::size_t h = 0; h <= n; ++h) {
      if (h == d) continue;
      const double s = m.at(h, d);
      if (s == kMasked) continue;
      if (h == 0 && roots == 1) continue;
      cur[d - 1] = static_cast<int>(h);
      self(self, d + 1, roots + (h == 0 ? 1 : 0), score + s);
    }
  };
  recurse(recurse, 1, 0, 0.0);
  if (best.empty()) throw Error("brute_force_mst: no admissible tree");
  return best;
}

struct GreedyResult {
  HeadVector heads;
  bool is_tree = false;
};

/// Independent per-token argmax; the result may contain cycles or several
/// ROOT dependents, which `is_tree` reports.
inline GreedyResult greedy_heads(const ScoreMatrix& m) {
  const std::size_t n = m.n();
  GreedyResult r;
  r.heads.assign(n, 0);
  for (std::size_t d = 1; d <= n; ++d) {
    double best = kMasked;
    for (std::size_t h = 0; h <= n; ++h) {
      if (h == d) continue;
      if (m.at(h, d) > best) {
        best = m.at(h, d);
        r.heads[d - 1] = static_cast<int>(h);
      }
    }
  }
  r.is_tree = n > 0 && is_tree(r.heads);
  return r;
}

}  // namespace metaparse
