#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lutloc/traces.hpp"

namespace lutloc {

/// Score-weighted aggregates behind the similarity coefficients.
/// f_a / p_a sum w(z,entry)*score(z) over failing / passing runs; f_u / p_u
/// sum the scores of runs the entry does not affect; f / p are the global
/// failing / passing score sums. Failing sums are <= 0, passing sums >= 0.
struct BuildingBlocks {
  double f_a = 0.0;
  double p_a = 0.0;
  double f_u = 0.0;
  double p_u = 0.0;
  double f = 0.0;
  double p = 0.0;
};

/// Constant shifts applied to scores before ranking; keeps each score's sign
/// class (neg_shift <= 0 moves failing scores away from zero, pos_shift >= 0
/// passing scores).
struct ScoreShift {
  double neg_shift = 0.0;
  double pos_shift = 0.0;
  void validate() const;
  double apply(double score) const {
    return score < 0 ? score + neg_shift : score + pos_shift;
  }
};

/// Aggregates for one entry over a scored run set. Weights are raffect in
/// basic/metric mode and fraffect in the freq modes; the unaffected sums
/// always cover the runs whose weight is exactly 0. In the freq modes the
/// totals are the per-entry splits f = f_a + f_u and p = p_a + p_u (the
/// fractional weights make them smaller than the raw score sums); the other
/// modes keep the global score sums.
BuildingBlocks building_blocks(const LookupMap& map,
                               std::span<const TraceRun> runs,
                               const EntryIndex& entry,
                               const AffectConfig& cfg,
                               const ScoreShift& shift = {});

/// r_f/(r_f+r_p) with r_f = f_a/f, r_p = p_a/p; degenerate denominators give
/// ratio 0, and an all-zero split scores 0.
double tarantula(const BuildingBlocks& bb);

/// |f_a| / (|f_u| + p_a); 0 numerator scores 0, a zero denominator with a
/// positive numerator scores +inf (ranked above every finite score).
double kulczynski(const BuildingBlocks& bb);

/// |f_a|^gamma / (|f_u| + p_a) with gamma >= 1; gamma == 1 reproduces
/// kulczynski exactly.
double dstar(const BuildingBlocks& bb, double gamma);

/// Extension point: any statistic over the aggregates can drive the ranking.
using Heuristic = std::function<double(const BuildingBlocks&)>;

/// Named heuristic: "tarantula", "kulczynski", or "dstar" (uses gamma).
Heuristic make_heuristic(const std::string& name, double gamma = 2.0);

/// Scores for every map entry plus the deterministic ranking order:
/// descending score, ties broken by ascending row-major entry index.
struct RankingResult {
  std::vector<double> scores;        // by flat entry index; +inf allowed
  std::vector<std::int64_t> order;   // flat indices, best first
  std::vector<int> shape;            // entries per axis
  std::string heuristic;
  double gamma = 2.0;
  AffectConfig config;
  ScoreShift shift;

  EntryIndex entry_of(std::int64_t flat) const;
};

RankingResult rank(const LookupMap& map, std::span<const TraceRun> runs,
                   const std::string& heuristic, const AffectConfig& cfg,
                   const ScoreShift& shift = {}, double gamma = 2.0);

}  // namespace lutloc
