#include "lutloc/traces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lutloc {

double TraceRun::score_value() const {
  if (!score.has_value())
    throw DataError("run '" + id + "' has no score");
  if (!std::isfinite(*score))
    throw DataError("run '" + id + "' has a non-finite score");
  return *score;
}

std::string to_string(AffectMode m) {
  switch (m) {
    case AffectMode::Basic: return "basic";
    case AffectMode::Metric: return "metric";
    case AffectMode::FreqBasic: return "freq-basic";
    case AffectMode::FreqMetric: return "freq-metric";
  }
  return "basic";
}

AffectMode affect_mode_from_string(const std::string& s) {
  if (s == "basic") return AffectMode::Basic;
  if (s == "metric") return AffectMode::Metric;
  if (s == "freq-basic") return AffectMode::FreqBasic;
  if (s == "freq-metric") return AffectMode::FreqMetric;
  throw DataError("unknown affect mode: '" + s + "'");
}

std::string to_string(Aggregation a) {
  return a == Aggregation::Max ? "max" : "sum";
}

Aggregation aggregation_from_string(const std::string& s) {
  if (s == "max") return Aggregation::Max;
  if (s == "sum") return Aggregation::Sum;
  throw DataError("unknown aggregation: '" + s + "'");
}

void AffectConfig::validate() const {
  if (uses_metric(mode) && !(lambda > 0.0 && lambda < 1.0))
    throw InputError("metric affect needs lambda strictly between 0 and 1");
  if (std::isnan(radius) || radius < 0.0)
    throw InputError("affect radius must be >= 0");
}

bool accesses(const TraceRun& run, const EntryIndex& entry) {
  for (const QueryRecord& q : run.queries)
    if (std::binary_search(q.depends.begin(), q.depends.end(), entry))
      return true;
  return false;
}

double maffect(const LookupMap& map, const VectorXd& query_point,
               const EntryIndex& entry, const AffectConfig& cfg) {
  cfg.validate();
  if (!uses_metric(cfg.mode)) {
    const auto dep = depends(map, query_point);
    return std::binary_search(dep.begin(), dep.end(), entry) ? 1.0 : 0.0;
  }
  const double d =
      point_entry_distance(map, query_point, entry, cfg.distance_mode);
  if (d > cfg.radius) return 0.0;
  return std::pow(cfg.lambda, d);
}

double raffect(const LookupMap& map, const TraceRun& run,
               const EntryIndex& entry, const AffectConfig& cfg) {
  cfg.validate();
  if (!uses_metric(cfg.mode)) return accesses(run, entry) ? 1.0 : 0.0;
  double acc = 0.0;
  for (const QueryRecord& q : run.queries) {
    const double m = maffect(map, q.point, entry, cfg);
    if (cfg.aggregation == Aggregation::Max)
      acc = std::max(acc, m);
    else
      acc += m;
  }
  return std::min(acc, 1.0);
}

double fraffect(const LookupMap& map, const TraceRun& run,
                const EntryIndex& entry, const AffectConfig& cfg) {
  cfg.validate();
  if (run.queries.empty()) return 0.0;
  // Uses the boolean point weight for freq-basic and the decaying weight for
  // freq-metric; records carry the depends sets, so the boolean test does not
  // re-run the interpolation.
  double sum = 0.0;
  if (!uses_metric(cfg.mode)) {
    for (const QueryRecord& q : run.queries)
      if (std::binary_search(q.depends.begin(), q.depends.end(), entry))
        sum += 1.0;
  } else {
    for (const QueryRecord& q : run.queries)
      sum += maffect(map, q.point, entry, cfg);
  }
  return sum / static_cast<double>(run.queries.size());
}

}  // namespace lutloc
