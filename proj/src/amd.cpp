#include "remlkit/amd.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace remlkit {

std::vector<int> natural_order(int m) {
  std::vector<int> p(m);
  for (int i = 0; i < m; ++i) p[i] = i;
  return p;
}

std::vector<int> invert_permutation(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = (int)k;
  return inv;
}

std::vector<int> amd_order(const SparseSymPattern& pat) {
  pat.check();
  const int m = pat.m;
  std::vector<int> order;
  order.reserve(m);
  if (m == 0) return order;

  // Full off-diagonal adjacency from the lower triangle.
  std::vector<std::vector<int>> adjvar(m);
  for (int j = 0; j < m; ++j) {
    for (int p = pat.col_ptr[j] + 1; p < pat.col_ptr[j + 1]; ++p) {
      const int i = pat.row_ind[p];
      adjvar[i].push_back(j);
      adjvar[j].push_back(i);
    }
  }
  for (int v = 0; v < m; ++v) std::sort(adjvar[v].begin(), adjvar[v].end());

  enum : unsigned char { kLive, kEliminated, kDeferred };
  std::vector<unsigned char> state(m, kLive);

  // Defer near-dense rows; they are appended (in index order) at the end.
  const int dense_cut = std::max(16, (int)(10.0 * std::sqrt((double)m)));
  std::vector<int> deferred;
  for (int v = 0; v < m; ++v) {
    if ((int)adjvar[v].size() > dense_cut) {
      state[v] = kDeferred;
      deferred.push_back(v);
    }
  }
  if (!deferred.empty()) {
    for (int v = 0; v < m; ++v) {
      if (state[v] != kLive) continue;
      auto& a = adjvar[v];
      a.erase(std::remove_if(a.begin(), a.end(),
                             [&](int u) { return state[u] == kDeferred; }),
              a.end());
    }
  }

  std::vector<std::vector<int>> adjel(m);   // element ids adjacent to a variable
  std::vector<std::vector<int>> elbound(m); // element boundary (may hold dead vars)
  std::vector<char> el_live(m, 0);
  std::vector<int> degree(m, 0);

  std::set<std::pair<int, int>> queue;  // (degree, index): deterministic min pick
  int nlive = 0;
  for (int v = 0; v < m; ++v) {
    if (state[v] != kLive) continue;
    degree[v] = (int)adjvar[v].size();
    queue.insert({degree[v], v});
    ++nlive;
  }

  std::vector<int> mark(m, -1);   // stamp: member of current L_p
  std::vector<int> wstamp(m, -1); // stamp: |L_e \ L_p| cached this pivot
  std::vector<int> wval(m, 0);
  std::vector<int> lp;

  for (int step = 0; step < nlive; ++step) {
    const int p = queue.begin()->second;
    queue.erase(queue.begin());
    state[p] = kEliminated;
    order.push_back(p);

    // L_p: live neighbours of p through both edges and adjacent elements.
    lp.clear();
    for (int u : adjvar[p]) {
      if (state[u] == kLive && mark[u] != p) {
        mark[u] = p;
        lp.push_back(u);
      }
    }
    for (int e : adjel[p]) {
      if (!el_live[e]) continue;
      for (int u : elbound[e]) {
        if (state[u] == kLive && mark[u] != p) {
          mark[u] = p;
          lp.push_back(u);
        }
      }
      el_live[e] = 0;  // absorbed into the new element p
    }
    std::sort(lp.begin(), lp.end());

    el_live[p] = 1;
    elbound[p] = lp;
    const int lp_size = (int)lp.size();

    for (int v : lp) {
      // Edges inside L_p are now represented by element p; drop them,
      // along with anything dead.
      auto& av = adjvar[v];
      av.erase(std::remove_if(av.begin(), av.end(),
                              [&](int u) {
                                return state[u] != kLive || mark[u] == p;
                              }),
               av.end());
      auto& ev = adjel[v];
      ev.erase(std::remove_if(ev.begin(), ev.end(),
                              [&](int e) { return !el_live[e]; }),
               ev.end());
      ev.push_back(p);
    }

    // Approximate external degree: |A_v| + |L_p \ {v}| + sum over other
    // elements e of |L_e \ L_p|.
    for (int v : lp) {
      long d = (long)adjvar[v].size() + (lp_size - 1);
      for (int e : adjel[v]) {
        if (e == p) continue;
        if (wstamp[e] != p) {
          wstamp[e] = p;
          int w = 0;
          for (int u : elbound[e])
            if (state[u] == kLive && mark[u] != p) ++w;
          wval[e] = w;
          if (w == 0) el_live[e] = 0;  // boundary swallowed by L_p
        }
        d += wval[e];
      }
      const int left = nlive - step - 1;
      const int nd = (int)std::min<long>(d, left > 0 ? left - 1 : 0);
      if (nd != degree[v]) {
        queue.erase({degree[v], v});
        degree[v] = nd;
        queue.insert({nd, v});
      }
    }
  }

  for (int v : deferred) order.push_back(v);
  if ((int)order.size() != m) throw std::logic_error("amd: lost variables");
  return order;
}

}  // namespace remlkit
