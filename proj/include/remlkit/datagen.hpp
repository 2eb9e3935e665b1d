#ifndef REMLKIT_DATAGEN_HPP
#define REMLKIT_DATAGEN_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "remlkit/table.hpp"

namespace remlkit {

/// Term order used everywhere: year, centre, variety, year.centre,
/// year.variety, variety.centre.
constexpr int kBenchTerms = 6;
extern const std::array<const char*, kBenchTerms> kBenchTermNames;

/// Three-way crossed variety-trial generator. Each variety enters in a
/// uniform random year and lives a contiguous 1 + Poisson(poisson_mean)
/// years; control varieties run every year; every active (year, variety)
/// pair is observed at each centre independently with probability 1/2.
struct BenchParams {
  int years = 1;
  int centres = 1;
  int varieties = 1;
  double poisson_mean = 4.0;
  int control_varieties = 0;  // present in all years
  double grand_mean = 10.0;
  double sigma2 = 1.0;
  std::array<double, kBenchTerms> gamma{0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  std::uint64_t seed = 1;

  void check() const;
};

struct BenchRecord {
  int year, centre, variety;
  double response;
};

struct BenchDataset {
  BenchParams params;
  std::vector<BenchRecord> records;
  // realized level counts: year, centre, variety, y.c, y.v, v.c
  std::array<int, kBenchTerms> realized{};
  int units() const { return (int)records.size(); }

  DataTable to_table() const;
  ModelDescriptor descriptor() const;  // intercept-only fixed, six random terms
  void write_metadata(const std::string& path) const;  // params + realized, JSON
};

BenchDataset generate(const BenchParams& params);

/// Summary row: y, c, v, y.c, y.v, v.c, units, v/y, y/v.
struct BenchSummary {
  int years, centres, varieties;
  int yc, yv, vc, units;
  double varieties_per_year, years_per_variety;
  std::string to_line() const;
};
BenchSummary summarize(const BenchDataset& ds);

/// Benchmark presets P1..P10 plus P1-mini (nominal counts; realized
/// structure is seed-dependent).
BenchParams preset(const std::string& name);
BenchParams parse_params_json(const std::string& path);

}  // namespace remlkit

#endif
