#include "remlkit/table.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace remlkit {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim whitespace
    const auto a = cell.find_first_not_of(" \t\r");
    const auto b = cell.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream ss(s);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

}  // namespace

int DataTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return (int)i;
  return -1;
}

DataTable DataTable::read_csv(std::istream& is) {
  DataTable t;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("csv: empty file");
  t.names = split_csv_line(line);
  t.columns.resize(t.names.size());
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.names.size())
      throw std::runtime_error("csv: field count mismatch at line " +
                               std::to_string(lineno));
    for (std::size_t i = 0; i < cells.size(); ++i)
      t.columns[i].push_back(std::move(cells[i]));
  }
  return t;
}

DataTable DataTable::read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return read_csv(is);
}

void DataTable::write_csv(std::ostream& os) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    os << (i ? "," : "") << names[i];
  os << "\n";
  for (int r = 0; r < rows(); ++r) {
    for (std::size_t i = 0; i < columns.size(); ++i)
      os << (i ? "," : "") << columns[i][r];
    os << "\n";
  }
}

void DataTable::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  write_csv(os);
}

ModelDescriptor ModelDescriptor::parse(std::istream& is) {
  ModelDescriptor d;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    auto keytok = split_ws(key);
    if (keytok.size() != 1) continue;
    if (keytok[0] == "response") {
      auto v = split_ws(val);
      if (v.size() != 1)
        throw std::runtime_error("descriptor: response must name one column");
      d.response = v[0];
    } else if (keytok[0] == "fixed") {
      d.fixed = split_ws(val);
    } else if (keytok[0] == "random") {
      d.random_terms = split_ws(val);
    } else {
      throw std::runtime_error("descriptor: unknown key '" + keytok[0] + "'");
    }
  }
  if (d.response.empty())
    throw std::runtime_error("descriptor: missing response");
  if (d.random_terms.empty())
    throw std::runtime_error("descriptor: no random terms declared");
  return d;
}

ModelDescriptor ModelDescriptor::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return parse(is);
}

}  // namespace remlkit
