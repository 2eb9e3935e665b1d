#include "remlkit/ldl.hpp"

#include <algorithm>
#include <cmath>

namespace remlkit {

PermutedLowerRows permute_lower(const SparseSymPattern& pat,
                                const std::vector<int>& perm,
                                std::vector<int>* value_map) {
  const int m = pat.m;
  const std::vector<int> iperm = [&] {
    std::vector<int> inv(m);
    for (int k = 0; k < m; ++k) inv[perm[k]] = k;
    return inv;
  }();

  PermutedLowerRows rows;
  rows.m = m;
  rows.row_ptr.assign(m + 1, 0);

  // Count, then fill; entries (i,j) of the original lower triangle land at
  // (max(pi,pj), min(pi,pj)).
  for (int j = 0; j < m; ++j) {
    for (int p = pat.col_ptr[j]; p < pat.col_ptr[j + 1]; ++p) {
      const int r = std::max(iperm[pat.row_ind[p]], iperm[j]);
      rows.row_ptr[r + 1]++;
    }
  }
  for (int i = 0; i < m; ++i) rows.row_ptr[i + 1] += rows.row_ptr[i];

  const int nz = rows.row_ptr[m];
  rows.col_ind.assign(nz, 0);
  std::vector<int> vmap(nz, 0);
  std::vector<int> next(rows.row_ptr.begin(), rows.row_ptr.end() - 1);
  for (int j = 0; j < m; ++j) {
    for (int p = pat.col_ptr[j]; p < pat.col_ptr[j + 1]; ++p) {
      const int pi = iperm[pat.row_ind[p]], pj = iperm[j];
      const int r = std::max(pi, pj), c = std::min(pi, pj);
      const int slot = next[r]++;
      rows.col_ind[slot] = c;
      vmap[slot] = p;
    }
  }
  // Sort each row by column, keeping the value map aligned.
  for (int i = 0; i < m; ++i) {
    const int lo = rows.row_ptr[i], hi = rows.row_ptr[i + 1];
    std::vector<std::pair<int, int>> tmp;
    tmp.reserve(hi - lo);
    for (int p = lo; p < hi; ++p) tmp.emplace_back(rows.col_ind[p], vmap[p]);
    std::sort(tmp.begin(), tmp.end());
    for (int p = lo; p < hi; ++p) {
      rows.col_ind[p] = tmp[p - lo].first;
      vmap[p] = tmp[p - lo].second;
    }
  }
  if (value_map) *value_map = std::move(vmap);
  return rows;
}

namespace {

std::vector<int> etree_parents(const PermutedLowerRows& rows) {
  const int m = rows.m;
  std::vector<int> parent(m, -1), ancestor(m, -1);
  for (int i = 0; i < m; ++i) {
    for (int p = rows.row_ptr[i]; p < rows.row_ptr[i + 1]; ++p) {
      int j = rows.col_ind[p];
      if (j >= i) continue;
      // Walk to the current root, compressing ancestor links.
      while (ancestor[j] != -1 && ancestor[j] != i) {
        const int next = ancestor[j];
        ancestor[j] = i;
        j = next;
      }
      if (ancestor[j] == -1) {
        ancestor[j] = i;
        parent[j] = i;
      }
    }
  }
  return parent;
}

// Column counts of L by row-subtree traversal: row i of L is the set of
// columns on etree paths from row i's below-diagonal entries up to i.
std::vector<int> etree_col_counts(const PermutedLowerRows& rows,
                                  const std::vector<int>& parent) {
  const int m = rows.m;
  std::vector<int> count(m, 1), mark(m, -1);
  for (int i = 0; i < m; ++i) {
    mark[i] = i;
    for (int p = rows.row_ptr[i]; p < rows.row_ptr[i + 1]; ++p) {
      for (int j = rows.col_ind[p]; mark[j] != i; j = parent[j]) {
        mark[j] = i;
        count[j]++;
      }
    }
  }
  return count;
}

}  // namespace

EliminationTree elimination_tree(const SparseSymPattern& pat,
                                 const std::vector<int>& perm) {
  const PermutedLowerRows rows = permute_lower(pat, perm);
  EliminationTree t;
  t.parent = etree_parents(rows);
  t.col_counts = etree_col_counts(rows, t.parent);
  return t;
}

SymbolicPlan symbolic_factor(const SparseSymPattern& pat,
                             const std::vector<int>& perm) {
  SymbolicPlan plan;
  plan.perm = perm;
  plan.iperm.assign(pat.m, 0);
  for (int k = 0; k < pat.m; ++k) plan.iperm[perm[k]] = k;
  plan.rows = permute_lower(pat, perm, &plan.value_map);
  plan.tree.parent = etree_parents(plan.rows);
  plan.tree.col_counts = etree_col_counts(plan.rows, plan.tree.parent);
  plan.nnz_l = 0;
  plan.flops = 0;
  for (int mi : plan.tree.col_counts) {
    plan.nnz_l += mi;
    plan.flops += (std::int64_t)mi * mi;
  }
  plan.flops -= pat.m;
  return plan;
}

std::int64_t nnz_l_count(const SparseSymPattern& pat,
                         const std::vector<int>& perm) {
  const PermutedLowerRows rows = permute_lower(pat, perm);
  const std::vector<int> parent = etree_parents(rows);
  const int m = rows.m;
  std::vector<int> mark(m, -1);
  std::int64_t nnz = 0;
  for (int i = 0; i < m; ++i) {
    mark[i] = i;
    nnz += 1;  // diagonal
    for (int p = rows.row_ptr[i]; p < rows.row_ptr[i + 1]; ++p) {
      for (int j = rows.col_ind[p]; mark[j] != i; j = parent[j]) {
        mark[j] = i;
        nnz += 1;
      }
    }
  }
  return nnz;
}

LdlFactor numeric_factor(const std::vector<double>& values,
                         const SymbolicPlan& plan,
                         double pivot_tol) {
  const int m = plan.rows.m;
  LdlFactor f;
  f.m = m;
  f.perm = plan.perm;
  f.iperm = plan.iperm;
  f.flops = plan.flops;

  f.col_ptr.assign(m + 1, 0);
  for (int j = 0; j < m; ++j)
    f.col_ptr[j + 1] = f.col_ptr[j] + plan.tree.col_counts[j] - 1;
  f.row_ind.assign(f.col_ptr[m], 0);
  f.lvalues.assign(f.col_ptr[m], 0.0);
  f.d.assign(m, 0.0);

  double diag_max = 0.0;
  for (int i = 0; i < m; ++i) {
    const int lo = plan.rows.row_ptr[i];
    if (plan.rows.col_ind[plan.rows.row_ptr[i + 1] - 1] == i)
      diag_max = std::max(diag_max,
                          std::fabs(values[plan.value_map[plan.rows.row_ptr[i + 1] - 1]]));
    (void)lo;
  }
  const double tol = pivot_tol * std::max(diag_max, 1e-300);

  std::vector<double> y(m, 0.0);
  std::vector<int> lnz(m, 0), mark(m, -1), pattern(m), stack(m);

  for (int k = 0; k < m; ++k) {
    mark[k] = k;
    int top = m;
    double dk = 0.0;
    for (int p = plan.rows.row_ptr[k]; p < plan.rows.row_ptr[k + 1]; ++p) {
      const int c = plan.rows.col_ind[p];
      const double v = values[plan.value_map[p]];
      if (c == k) {
        dk = v;
        continue;
      }
      y[c] += v;  // duplicates impossible; += is harmless either way
      int len = 0;
      for (int j = c; mark[j] != k; j = plan.tree.parent[j]) {
        pattern[len++] = j;
        mark[j] = k;
      }
      while (len > 0) stack[--top] = pattern[--len];
    }
    for (int t = top; t < m; ++t) {
      const int j = stack[t];
      const double yj = y[j];
      y[j] = 0.0;
      for (int p = f.col_ptr[j]; p < f.col_ptr[j] + lnz[j]; ++p)
        y[f.row_ind[p]] -= f.lvalues[p] * yj;
      const double lkj = yj / f.d[j];
      dk -= lkj * yj;
      const int slot = f.col_ptr[j] + lnz[j]++;
      f.row_ind[slot] = k;
      f.lvalues[slot] = lkj;
    }
    if (!(dk > tol)) throw NotPositiveDefinite(k, dk);
    f.d[k] = dk;
    f.logdet += std::log(dk);
  }
  return f;
}

void LdlFactor::solve_inplace(double* b, int r) const {
  std::vector<double> z((std::size_t)m);
  for (int c = 0; c < r; ++c) {
    double* bc = b + (std::size_t)c * m;
    for (int k = 0; k < m; ++k) z[k] = bc[perm[k]];
    for (int j = 0; j < m; ++j) {
      const double zj = z[j];
      if (zj != 0.0)
        for (int p = col_ptr[j]; p < col_ptr[j + 1]; ++p)
          z[row_ind[p]] -= lvalues[p] * zj;
    }
    for (int j = 0; j < m; ++j) z[j] /= d[j];
    for (int j = m - 1; j >= 0; --j) {
      double s = z[j];
      for (int p = col_ptr[j]; p < col_ptr[j + 1]; ++p)
        s -= lvalues[p] * z[row_ind[p]];
      z[j] = s;
    }
    for (int k = 0; k < m; ++k) bc[perm[k]] = z[k];
  }
}

std::vector<double> LdlFactor::solve(const std::vector<double>& b) const {
  std::vector<double> x = b;
  solve_inplace(x.data(), (int)(b.size() / m));
  return x;
}

}  // namespace remlkit
