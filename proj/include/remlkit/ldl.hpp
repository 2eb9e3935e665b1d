#ifndef REMLKIT_LDL_HPP
#define REMLKIT_LDL_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "remlkit/sparse.hpp"

namespace remlkit {

/// Pivot d_i fell below tolerance during factorization; the matrix is not
/// numerically positive definite under the given ordering.
class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(int column, double pivot)
      : std::runtime_error("not positive definite at column " +
                           std::to_string(column) +
                           " (pivot " + std::to_string(pivot) + ")"),
        column(column),
        pivot(pivot) {}
  int column;
  double pivot;
};

struct EliminationTree {
  std::vector<int> parent;      // parent column in the permuted matrix, -1 = root
  std::vector<int> col_counts;  // m_i = nnz in column i of L, diagonal included
};

/// Row-wise lower-triangle pattern of P A P^T (diagonal included, columns
/// strictly increasing within a row). Row-major because the up-looking
/// factorization consumes one row of A at a time.
struct PermutedLowerRows {
  int m = 0;
  std::vector<int> row_ptr;
  std::vector<int> col_ind;
};

/// Everything theta-independent about a factorization: ordering, permuted
/// pattern, elimination tree, column counts, and the FLOP budget
/// sum(m_i^2) - m. Reusable across numeric refactorizations.
struct SymbolicPlan {
  std::vector<int> perm;       // perm[k] = original index at position k
  std::vector<int> iperm;
  PermutedLowerRows rows;
  std::vector<int> value_map;  // col_ind entry -> index into original values
  EliminationTree tree;
  std::int64_t nnz_l = 0;
  std::int64_t flops = 0;      // sum m_i^2 - m
};

struct LdlFactor {
  int m = 0;
  std::vector<int> perm, iperm;
  std::vector<int> col_ptr;    // columns of L, strictly-below-diagonal entries
  std::vector<int> row_ind;
  std::vector<double> lvalues;
  std::vector<double> d;       // pivots
  double logdet = 0.0;         // sum log d_i
  std::int64_t flops = 0;

  /// In-place solve of A x = b for r right-hand sides stored column-major
  /// in b (leading dimension m). Read-only on the factor; concurrent calls
  /// with distinct buffers are safe.
  void solve_inplace(double* b, int r = 1) const;
  std::vector<double> solve(const std::vector<double>& b) const;
};

PermutedLowerRows permute_lower(const SparseSymPattern& pattern,
                                const std::vector<int>& perm,
                                std::vector<int>* value_map = nullptr);

EliminationTree elimination_tree(const SparseSymPattern& pattern,
                                 const std::vector<int>& perm);

SymbolicPlan symbolic_factor(const SparseSymPattern& pattern,
                             const std::vector<int>& perm);

/// Numeric up-looking factorization over a symbolic plan. `values` are the
/// entries of the *original* (unpermuted) matrix, aligned with the pattern
/// the plan was built from. pivot_tol scales max|diag|; a pivot at or below
/// that threshold throws NotPositiveDefinite.
LdlFactor numeric_factor(const std::vector<double>& values,
                         const SymbolicPlan& plan,
                         double pivot_tol = 1e-12);

/// Total nnz(L) for a given ordering without forming column counts; uses
/// path-compressed row subtree traversal, so it stays cheap even when the
/// ordering fills badly. For natural-vs-AMD comparisons.
std::int64_t nnz_l_count(const SparseSymPattern& pattern,
                         const std::vector<int>& perm);

}  // namespace remlkit

#endif
