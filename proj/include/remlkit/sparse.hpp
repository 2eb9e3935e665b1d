#ifndef REMLKIT_SPARSE_HPP
#define REMLKIT_SPARSE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace remlkit {

/// Lower-triangular pattern of a symmetric sparse matrix in compressed
/// column form. The diagonal is structurally present in every column and
/// row indices are strictly increasing within a column.
struct SparseSymPattern {
  int m = 0;
  std::vector<int> col_ptr;  // size m + 1
  std::vector<int> row_ind;  // row indices, row >= col

  int nnz() const { return m == 0 ? 0 : col_ptr[m]; }
  void check() const;  // throws std::invalid_argument on malformed input
};

/// Pattern plus values, one value per stored (lower-triangle) entry.
struct SparseSym {
  SparseSymPattern pattern;
  std::vector<double> values;

  double diag_max_abs() const;
  void matvec(const double* x, double* y) const;  // y = A x (full symmetric)
};

/// Accumulates (i, j, v) entries (any order, duplicates summed) and
/// compresses them into lower-triangle CSC. Entries above the diagonal are
/// mirrored into the lower triangle.
class TripletBuilder {
 public:
  explicit TripletBuilder(int m) : m_(m) {}
  void add(int i, int j, double v);
  SparseSym build() const;
  SparseSymPattern build_pattern() const;

 private:
  int m_;
  mutable std::vector<std::int64_t> keys_;  // i * m + j, lower triangle
  mutable std::vector<double> vals_;
};

// Matrix Market coordinate format, "symmetric" qualifier, lower triangle,
// 1-based indices.
void write_matrix_market(std::ostream& os, const SparseSym& a);
void write_matrix_market(const std::string& path, const SparseSym& a);
SparseSym read_matrix_market(std::istream& is);
SparseSym read_matrix_market(const std::string& path);

}  // namespace remlkit

#endif
