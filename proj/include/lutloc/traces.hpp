#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lutloc/lutmap.hpp"

namespace lutloc {

/// Sampled time series (one named output signal of a run).
struct TimeSeries {
  VectorXd t;
  VectorXd v;
};

/// One logged map query: ordinal within the run, the continuous query point,
/// and the stored entries the interpolation read.
struct QueryRecord {
  int seq = 0;  // 1-based
  VectorXd point;
  std::vector<EntryIndex> depends;
};

/// One scored execution: the ordered query log plus optional output signals.
/// Immutable once scored; all affect computations over it are pure.
struct TraceRun {
  std::string id;
  std::vector<QueryRecord> queries;
  std::optional<double> score;
  std::map<std::string, TimeSeries> signals;
  bool diverged = false;  // set by the simulator, not serialized

  double score_value() const;  // throws DataError naming the run if unset
};

enum class AffectMode { Basic, Metric, FreqBasic, FreqMetric };
enum class Aggregation { Max, Sum };

std::string to_string(AffectMode m);
AffectMode affect_mode_from_string(const std::string& s);
std::string to_string(Aggregation a);
Aggregation aggregation_from_string(const std::string& s);

inline bool uses_metric(AffectMode m) {
  return m == AffectMode::Metric || m == AffectMode::FreqMetric;
}
inline bool uses_frequency(AffectMode m) {
  return m == AffectMode::FreqBasic || m == AffectMode::FreqMetric;
}

/// How runs are connected to map entries.
///  - Basic:      an entry affects a run iff the run read it.
///  - Metric:     influence decays as lambda^dist within `radius` of the
///                continuous query point (radius may be infinite).
///  - Freq*:      the per-run weight is the (weighted) fraction of queries
///                affected, using the basic or metric point weight.
struct AffectConfig {
  AffectMode mode = AffectMode::Basic;
  double lambda = 0.5;
  double radius = 2.0;
  Aggregation aggregation = Aggregation::Max;
  DistanceMode distance_mode = DistanceMode::GridScaled;

  void validate() const;
};

/// True iff some query of the run read the entry (directly or through
/// interpolation).
bool accesses(const TraceRun& run, const EntryIndex& entry);

/// Influence of one query point on one entry, in [0, 1].
double maffect(const LookupMap& map, const VectorXd& query_point,
               const EntryIndex& entry, const AffectConfig& cfg);

/// Influence of a whole run on one entry, in [0, 1]. Boolean modes reduce to
/// accesses(); metric modes aggregate per-query maffect by max or by a sum
/// clamped to 1.
double raffect(const LookupMap& map, const TraceRun& run,
               const EntryIndex& entry, const AffectConfig& cfg);

/// Weighted fraction of the run's queries affected by the entry; 0 for an
/// empty query log.
double fraffect(const LookupMap& map, const TraceRun& run,
                const EntryIndex& entry, const AffectConfig& cfg);

}  // namespace lutloc
