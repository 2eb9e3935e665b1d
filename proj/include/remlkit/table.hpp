#ifndef REMLKIT_TABLE_HPP
#define REMLKIT_TABLE_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace remlkit {

/// Columnar string table read from CSV (header row required).
struct DataTable {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> columns;  // one vector per name

  int rows() const { return columns.empty() ? 0 : (int)columns[0].size(); }
  int column_index(const std::string& name) const;  // -1 if absent

  static DataTable read_csv(std::istream& is);
  static DataTable read_csv(const std::string& path);
  void write_csv(std::ostream& os) const;
  void write_csv(const std::string& path) const;
};

/// Key-value model descriptor:
///   response = yield
///   fixed = dose rainfall        (numeric covariates; intercept implicit)
///   random = year centre year.centre
/// Interaction terms are written "a.b" and expand to the cross of the two
/// factor columns.
struct ModelDescriptor {
  std::string response;
  std::vector<std::string> fixed;
  std::vector<std::string> random_terms;

  static ModelDescriptor parse(std::istream& is);
  static ModelDescriptor parse_file(const std::string& path);
};

}  // namespace remlkit

#endif
