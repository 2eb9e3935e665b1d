#include "remlkit/model.hpp"

#include <Eigen/QR>
#include <stdexcept>
#include <unordered_map>

namespace remlkit {

void RandomFactor::accumulate_zt(const Eigen::VectorXd& v, double* w) const {
  for (std::size_t r = 0; r < level_of_row.size(); ++r) {
    const int l = level_of_row[r];
    if (l >= 0) w[l] += v[(Eigen::Index)r];
  }
}

void RandomFactor::scatter_z(const double* w, Eigen::VectorXd& v) const {
  for (std::size_t r = 0; r < level_of_row.size(); ++r) {
    const int l = level_of_row[r];
    if (l >= 0) v[(Eigen::Index)r] += w[l];
  }
}

std::vector<int> RandomFactor::level_counts() const {
  std::vector<int> c(levels, 0);
  for (int l : level_of_row)
    if (l >= 0) c[l]++;
  return c;
}

int ModelSpec::total_levels() const {
  int b = 0;
  for (const auto& f : factors) b += f.levels;
  return b;
}

int ModelSpec::level_offset(int k) const {
  int off = p;
  for (int j = 0; j < k; ++j) off += factors[j].levels;
  return off;
}

void Theta::check(double kappa_min) const {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("theta: sigma2 must be positive");
  for (double k : kappa)
    if (!(k >= kappa_min))
      throw std::invalid_argument("theta: boundary variance ratio");
}

namespace {

RandomFactor code_factor(const DataTable& table, const std::string& term) {
  RandomFactor f;
  f.name = term;
  const auto dot = term.find('.');
  std::vector<int> cols;
  if (dot == std::string::npos) {
    const int c = table.column_index(term);
    if (c < 0) throw std::runtime_error("unknown factor column '" + term + "'");
    cols = {c};
  } else {
    const std::string a = term.substr(0, dot), b = term.substr(dot + 1);
    const int ca = table.column_index(a), cb = table.column_index(b);
    if (ca < 0 || cb < 0)
      throw std::runtime_error("unknown factor column in interaction '" + term + "'");
    cols = {ca, cb};
  }
  const int n = table.rows();
  f.level_of_row.resize(n);
  std::unordered_map<std::string, int> codes;
  for (int r = 0; r < n; ++r) {
    std::string key = table.columns[cols[0]][r];
    for (std::size_t c = 1; c < cols.size(); ++c)
      key += "." + table.columns[cols[c]][r];
    if (key.empty() || key == ".") {
      f.level_of_row[r] = -1;  // factor unobserved on this record
      continue;
    }
    auto [it, inserted] = codes.emplace(key, (int)f.level_names.size());
    if (inserted) f.level_names.push_back(key);
    f.level_of_row[r] = it->second;
  }
  f.levels = (int)f.level_names.size();
  if (f.levels <= 1)
    throw std::runtime_error("factor '" + term + "' has a single level everywhere");
  return f;
}

}  // namespace

ModelSpec build_model(const DataTable& table, const ModelDescriptor& desc) {
  const int n = table.rows();
  if (n == 0) throw std::runtime_error("empty data");

  ModelSpec m;
  m.n = n;
  m.p = 1 + (int)desc.fixed.size();
  m.X.resize(n, m.p);
  m.X.col(0).setOnes();
  for (std::size_t c = 0; c < desc.fixed.size(); ++c) {
    const int ci = table.column_index(desc.fixed[c]);
    if (ci < 0) throw std::runtime_error("unknown fixed column '" + desc.fixed[c] + "'");
    for (int r = 0; r < n; ++r) {
      try {
        m.X(r, (Eigen::Index)c + 1) = std::stod(table.columns[ci][r]);
      } catch (const std::exception&) {
        throw std::runtime_error("non-numeric value in fixed column '" +
                                 desc.fixed[c] + "'");
      }
    }
  }
  if (n <= m.p) throw std::runtime_error("need more observations than fixed effects");
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m.X);
    if (qr.rank() < m.p) throw std::runtime_error("design matrix X is rank deficient");
  }

  const int yc = table.column_index(desc.response);
  if (yc < 0) throw std::runtime_error("unknown response column '" + desc.response + "'");
  m.y.resize(n);
  for (int r = 0; r < n; ++r) {
    try {
      m.y[r] = std::stod(table.columns[yc][r]);
    } catch (const std::exception&) {
      throw std::runtime_error("non-numeric response at record " + std::to_string(r + 1));
    }
  }

  for (const auto& term : desc.random_terms)
    m.factors.push_back(code_factor(table, term));
  return m;
}

Eigen::VectorXd h_matvec(const ModelSpec& model, const Theta& theta,
                         const Eigen::VectorXd& v) {
  if (v.size() != model.n) throw std::invalid_argument("h_matvec: length mismatch");
  if ((int)theta.kappa.size() != model.q())
    throw std::invalid_argument("h_matvec: kappa size mismatch");
  Eigen::VectorXd out = v;
  std::vector<double> w;
  for (int k = 0; k < model.q(); ++k) {
    const auto& f = model.factors[k];
    w.assign(f.levels, 0.0);
    f.accumulate_zt(v, w.data());
    for (double& x : w) x *= theta.kappa[k];
    f.scatter_z(w.data(), out);
  }
  return out;
}

Eigen::VectorXd hdot_matvec(const ModelSpec& model, int k,
                            const Eigen::VectorXd& v) {
  if (k < 0 || k >= model.q()) throw std::invalid_argument("hdot_matvec: k out of range");
  if (v.size() != model.n) throw std::invalid_argument("hdot_matvec: length mismatch");
  const auto& f = model.factors[k];
  std::vector<double> w(f.levels, 0.0);
  f.accumulate_zt(v, w.data());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(model.n);
  f.scatter_z(w.data(), out);
  return out;
}

}  // namespace remlkit
