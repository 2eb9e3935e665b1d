#include "remlkit/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace remlkit {

const std::array<const char*, kBenchTerms> kBenchTermNames = {
    "year", "centre", "variety", "year.centre", "year.variety", "variety.centre"};

void BenchParams::check() const {
  if (years < 1 || centres < 1 || varieties < 1)
    throw std::invalid_argument("bench: counts must be >= 1");
  if (!(poisson_mean > 0.0))
    throw std::invalid_argument("bench: poisson_mean must be positive");
  if (control_varieties < 0 || control_varieties > varieties)
    throw std::invalid_argument("bench: control_varieties out of range");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("bench: sigma2 must be positive");
  for (double g : gamma)
    if (!(g > 0.0)) throw std::invalid_argument("bench: gamma must be positive");
}

namespace {

// Independent streams so the trial structure is reproducible regardless of
// how many effect or residual draws happen.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{seed, salt};
  return std::mt19937_64(seq);
}

}  // namespace

BenchDataset generate(const BenchParams& params) {
  params.check();
  BenchDataset ds;
  ds.params = params;

  std::mt19937_64 rng_struct = stream(params.seed, 0x5452554354ULL);
  std::uniform_int_distribution<int> entry_dist(0, params.years - 1);
  std::poisson_distribution<int> life_dist(params.poisson_mean);
  std::bernoulli_distribution include(0.5);

  // Active year window per variety; controls span all years.
  std::vector<std::pair<int, int>> window(params.varieties);  // [first, last]
  for (int v = 0; v < params.varieties; ++v) {
    const int entry = entry_dist(rng_struct);
    const int life = 1 + life_dist(rng_struct);
    if (v < params.control_varieties)
      window[v] = {0, params.years - 1};
    else
      window[v] = {entry, std::min(entry + life - 1, params.years - 1)};
  }

  struct Cell {
    int year, centre, variety;
  };
  std::vector<Cell> cells;
  for (int y = 0; y < params.years; ++y)
    for (int v = 0; v < params.varieties; ++v) {
      if (y < window[v].first || y > window[v].second) continue;
      for (int c = 0; c < params.centres; ++c)
        if (include(rng_struct)) cells.push_back({y, c, v});
    }
  if (cells.empty()) throw std::runtime_error("bench: parameters produced no records");

  // Realized level sets for the interaction terms, in canonical order, so
  // effect draws are reproducible.
  std::set<std::pair<int, int>> yc, yv, vc;
  std::set<int> ys, cs, vs;
  for (const auto& cell : cells) {
    ys.insert(cell.year);
    cs.insert(cell.centre);
    vs.insert(cell.variety);
    yc.insert({cell.year, cell.centre});
    yv.insert({cell.year, cell.variety});
    vc.insert({cell.variety, cell.centre});
  }
  ds.realized = {(int)ys.size(), (int)cs.size(), (int)vs.size(),
                 (int)yc.size(), (int)yv.size(), (int)vc.size()};

  std::mt19937_64 rng_eff = stream(params.seed, 0x454646454354ULL);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  auto draw = [&](double gamma) {
    return std::sqrt(params.sigma2 * gamma) * unit_normal(rng_eff);
  };
  std::vector<double> ef_y(params.years), ef_c(params.centres), ef_v(params.varieties);
  for (double& e : ef_y) e = draw(params.gamma[0]);
  for (double& e : ef_c) e = draw(params.gamma[1]);
  for (double& e : ef_v) e = draw(params.gamma[2]);
  std::map<std::pair<int, int>, double> ef_yc, ef_yv, ef_vc;
  for (const auto& k : yc) ef_yc[k] = draw(params.gamma[3]);
  for (const auto& k : yv) ef_yv[k] = draw(params.gamma[4]);
  for (const auto& k : vc) ef_vc[k] = draw(params.gamma[5]);

  std::mt19937_64 rng_res = stream(params.seed, 0x524553ULL);
  ds.records.reserve(cells.size());
  for (const auto& cell : cells) {
    const double resp = params.grand_mean + ef_y[cell.year] + ef_c[cell.centre] +
                        ef_v[cell.variety] + ef_yc.at({cell.year, cell.centre}) +
                        ef_yv.at({cell.year, cell.variety}) +
                        ef_vc.at({cell.variety, cell.centre}) +
                        std::sqrt(params.sigma2) * unit_normal(rng_res);
    ds.records.push_back({cell.year, cell.centre, cell.variety, resp});
  }
  return ds;
}

DataTable BenchDataset::to_table() const {
  DataTable t;
  t.names = {"year", "centre", "variety", "response"};
  t.columns.resize(4);
  char buf[64];
  for (const auto& r : records) {
    t.columns[0].push_back("Y" + std::to_string(r.year + 1));
    t.columns[1].push_back("C" + std::to_string(r.centre + 1));
    t.columns[2].push_back("V" + std::to_string(r.variety + 1));
    std::snprintf(buf, sizeof buf, "%.17g", r.response);
    t.columns[3].push_back(buf);
  }
  return t;
}

ModelDescriptor BenchDataset::descriptor() const {
  ModelDescriptor d;
  d.response = "response";
  d.random_terms.assign(kBenchTermNames.begin(), kBenchTermNames.end());
  return d;
}

void BenchDataset::write_metadata(const std::string& path) const {
  nlohmann::json j;
  j["params"] = {{"years", params.years},
                 {"centres", params.centres},
                 {"varieties", params.varieties},
                 {"poisson_mean", params.poisson_mean},
                 {"control_varieties", params.control_varieties},
                 {"grand_mean", params.grand_mean},
                 {"sigma2", params.sigma2},
                 {"gamma", params.gamma},
                 {"seed", params.seed}};
  nlohmann::json counts;
  for (int k = 0; k < kBenchTerms; ++k) counts[kBenchTermNames[k]] = realized[k];
  j["realized_levels"] = counts;
  j["units"] = units();
  int order = 1;
  for (int k = 0; k < kBenchTerms; ++k) order += realized[k];
  j["system_order"] = order;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << j.dump(2) << "\n";
}

BenchSummary summarize(const BenchDataset& ds) {
  BenchSummary s;
  s.years = ds.realized[0];
  s.centres = ds.realized[1];
  s.varieties = ds.realized[2];
  s.yc = ds.realized[3];
  s.yv = ds.realized[4];
  s.vc = ds.realized[5];
  s.units = ds.units();
  s.varieties_per_year = s.years > 0 ? (double)s.yv / s.years : 0.0;
  s.years_per_variety = s.varieties > 0 ? (double)s.yv / s.varieties : 0.0;
  return s;
}

std::string BenchSummary::to_line() const {
  std::ostringstream os;
  os << years << " " << centres << " " << varieties << " " << yc << " " << yv
     << " " << vc << " " << units << " " << varieties_per_year << " "
     << years_per_variety;
  return os.str();
}

BenchParams preset(const std::string& name) {
  // years, centres, varieties, poisson_mean, controls; lifetimes tuned to
  // the reference years-per-variety averages.
  struct Row {
    const char* name;
    int y, c, v;
    double mean;
    int controls;
  };
  static const Row rows[] = {
      {"P1", 12, 22, 130, 4.2, 10}, {"P2", 15, 25, 160, 4.6, 10},
      {"P3", 22, 25, 188, 5.3, 12}, {"P4", 25, 25, 262, 5.2, 12},
      {"P5", 25, 25, 390, 5.0, 15}, {"P6", 25, 35, 390, 5.0, 15},
      {"P7", 30, 35, 470, 5.4, 20}, {"P8", 30, 35, 620, 5.2, 20},
      {"P9", 35, 40, 720, 5.3, 20}, {"P10", 40, 50, 820, 5.4, 20},
      {"P1-mini", 10, 12, 28, 1.4, 4},
  };
  for (const auto& r : rows) {
    if (name == r.name) {
      BenchParams p;
      p.years = r.y;
      p.centres = r.c;
      p.varieties = r.v;
      p.poisson_mean = r.mean;
      p.control_varieties = r.controls;
      return p;
    }
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

BenchParams parse_params_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  is >> j;
  BenchParams p;
  if (j.contains("preset")) p = preset(j["preset"].get<std::string>());
  if (j.contains("years")) p.years = j["years"].get<int>();
  if (j.contains("centres")) p.centres = j["centres"].get<int>();
  if (j.contains("varieties")) p.varieties = j["varieties"].get<int>();
  if (j.contains("poisson_mean")) p.poisson_mean = j["poisson_mean"].get<double>();
  if (j.contains("control_varieties"))
    p.control_varieties = j["control_varieties"].get<int>();
  if (j.contains("grand_mean")) p.grand_mean = j["grand_mean"].get<double>();
  if (j.contains("sigma2")) p.sigma2 = j["sigma2"].get<double>();
  if (j.contains("gamma")) {
    const auto g = j["gamma"];
    if (!g.is_array() || g.size() != kBenchTerms)
      throw std::runtime_error("params: gamma must be an array of 6 values");
    for (int k = 0; k < kBenchTerms; ++k) p.gamma[k] = g[k].get<double>();
  }
  if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
  p.check();
  return p;
}

}  // namespace remlkit
