#include "remlkit/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace remlkit {

void SparseSymPattern::check() const {
  if (m < 0) throw std::invalid_argument("sparse: negative order");
  if ((int)col_ptr.size() != m + 1)
    throw std::invalid_argument("sparse: col_ptr size mismatch");
  for (int j = 0; j < m; ++j) {
    if (col_ptr[j + 1] < col_ptr[j])
      throw std::invalid_argument("sparse: non-monotone col_ptr");
    if (col_ptr[j] == col_ptr[j + 1] || row_ind[col_ptr[j]] != j)
      throw std::invalid_argument("sparse: diagonal entry missing");
    for (int p = col_ptr[j] + 1; p < col_ptr[j + 1]; ++p) {
      if (row_ind[p] <= row_ind[p - 1] || row_ind[p] >= m)
        throw std::invalid_argument("sparse: row indices not strictly increasing");
    }
  }
}

double SparseSym::diag_max_abs() const {
  double dmax = 0.0;
  for (int j = 0; j < pattern.m; ++j)
    dmax = std::max(dmax, std::fabs(values[pattern.col_ptr[j]]));
  return dmax;
}

void SparseSym::matvec(const double* x, double* y) const {
  const int m = pattern.m;
  std::fill(y, y + m, 0.0);
  for (int j = 0; j < m; ++j) {
    for (int p = pattern.col_ptr[j]; p < pattern.col_ptr[j + 1]; ++p) {
      const int i = pattern.row_ind[p];
      const double v = values[p];
      y[i] += v * x[j];
      if (i != j) y[j] += v * x[i];
    }
  }
}

void TripletBuilder::add(int i, int j, double v) {
  if (i < 0 || j < 0 || i >= m_ || j >= m_)
    throw std::invalid_argument("triplet: index out of range");
  if (i < j) std::swap(i, j);
  keys_.push_back((std::int64_t)i * m_ + j);
  vals_.push_back(v);
}

SparseSym TripletBuilder::build() const {
  // Sort by (col, row); duplicates summed.
  const std::size_t nt = keys_.size();
  std::vector<std::size_t> order(nt);
  for (std::size_t k = 0; k < nt; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const std::int64_t ia = keys_[a] / m_, ja = keys_[a] % m_;
    const std::int64_t ib = keys_[b] / m_, jb = keys_[b] % m_;
    return ja != jb ? ja < jb : ia < ib;
  });

  SparseSym a;
  a.pattern.m = m_;
  a.pattern.col_ptr.assign(m_ + 1, 0);
  std::vector<int> rows;
  std::vector<double> vals;
  rows.reserve(nt);
  vals.reserve(nt);
  std::int64_t prev_key = -1;
  for (std::size_t k = 0; k < nt; ++k) {
    const std::size_t t = order[k];
    if (keys_[t] == prev_key) {
      vals.back() += vals_[t];
      continue;
    }
    prev_key = keys_[t];
    rows.push_back((int)(keys_[t] / m_));
    vals.push_back(vals_[t]);
    a.pattern.col_ptr[keys_[t] % m_ + 1]++;
  }
  for (int j = 0; j < m_; ++j) a.pattern.col_ptr[j + 1] += a.pattern.col_ptr[j];

  // Guarantee a structural diagonal in every column.
  SparseSym b;
  b.pattern.m = m_;
  b.pattern.col_ptr.assign(m_ + 1, 0);
  for (int j = 0; j < m_; ++j) {
    const int lo = a.pattern.col_ptr[j], hi = a.pattern.col_ptr[j + 1];
    const bool has_diag = lo < hi && rows[lo] == j;
    b.pattern.col_ptr[j + 1] = b.pattern.col_ptr[j] + (hi - lo) + (has_diag ? 0 : 1);
  }
  b.pattern.row_ind.reserve(b.pattern.col_ptr[m_]);
  b.values.reserve(b.pattern.col_ptr[m_]);
  for (int j = 0; j < m_; ++j) {
    const int lo = a.pattern.col_ptr[j], hi = a.pattern.col_ptr[j + 1];
    if (lo >= hi || rows[lo] != j) {
      b.pattern.row_ind.push_back(j);
      b.values.push_back(0.0);
    }
    for (int p = lo; p < hi; ++p) {
      b.pattern.row_ind.push_back(rows[p]);
      b.values.push_back(vals[p]);
    }
  }
  b.pattern.check();
  return b;
}

SparseSymPattern TripletBuilder::build_pattern() const { return build().pattern; }

void write_matrix_market(std::ostream& os, const SparseSym& a) {
  os << "%%MatrixMarket matrix coordinate real symmetric\n";
  os << a.pattern.m << " " << a.pattern.m << " " << a.pattern.nnz() << "\n";
  os.precision(17);
  for (int j = 0; j < a.pattern.m; ++j)
    for (int p = a.pattern.col_ptr[j]; p < a.pattern.col_ptr[j + 1]; ++p)
      os << a.pattern.row_ind[p] + 1 << " " << j + 1 << " " << a.values[p] << "\n";
}

void write_matrix_market(const std::string& path, const SparseSym& a) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  write_matrix_market(os, a);
}

SparseSym read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("%%MatrixMarket", 0) != 0)
    throw std::runtime_error("matrix market: missing header");
  if (line.find("symmetric") == std::string::npos)
    throw std::runtime_error("matrix market: expected symmetric qualifier");
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream hdr(line);
  int m = 0, n = 0;
  long nnz = 0;
  if (!(hdr >> m >> n >> nnz) || m != n)
    throw std::runtime_error("matrix market: bad size line");
  TripletBuilder tb(m);
  for (long k = 0; k < nnz; ++k) {
    int i, j;
    double v;
    if (!(is >> i >> j >> v)) throw std::runtime_error("matrix market: truncated data");
    tb.add(i - 1, j - 1, v);
  }
  return tb.build();
}

SparseSym read_matrix_market(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return read_matrix_market(is);
}

}  // namespace remlkit
