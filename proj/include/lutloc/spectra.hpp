#pragma once

#include <span>
#include <utility>
#include <vector>

#include "lutloc/traces.hpp"

namespace lutloc {

/// Union-model output. sus_u holds the entries accessed by failing runs and
/// at least `radius` away from every passing-run access, ranked by
/// r_u = s_u * d_u (descending, ties by ascending entry index); sus_iu is the
/// stricter subset in which every failing run accesses some sus_u member
/// within `radius`.
struct SpectraResult {
  struct SuspiciousEntry {
    EntryIndex index;
    double s_u = 0.0;  // |score| of the mildest failing run accessing it
    double d_u = 0.0;  // separation from the passing-access set
    double r_u = 0.0;
    std::vector<EntryIndex> neighbors;  // surrounding grid entries to inspect
  };

  std::vector<EntryIndex> m_f, m_s;  // ascending entry order
  std::vector<SuspiciousEntry> sus_u;
  std::vector<EntryIndex> sus_iu;
  double radius = 0.0;
  DistanceMode distance_mode = DistanceMode::GridScaled;
};

/// Entries accessed by failing (score < 0) and by successful (score >= 0)
/// runs, each sorted ascending.
std::pair<std::vector<EntryIndex>, std::vector<EntryIndex>> accessed_sets(
    const LookupMap& map, std::span<const TraceRun> runs);

/// All entries within distance r of some member of X (X itself included).
std::vector<EntryIndex> ball(const LookupMap& map,
                             std::span<const EntryIndex> x, double r,
                             DistanceMode mode = DistanceMode::GridScaled);

/// Union model with the s_u/d_u/r_u ranking. When no passing run exists,
/// d_u falls back to the map diameter plus one.
SpectraResult union_suspicious(const LookupMap& map,
                               std::span<const TraceRun> runs, double r,
                               DistanceMode mode = DistanceMode::GridScaled);

/// Intersection-union refinement; also populated in the result of
/// union_suspicious via this same computation.
std::vector<EntryIndex> intersection_union_suspicious(
    const LookupMap& map, std::span<const TraceRun> runs, double r,
    DistanceMode mode = DistanceMode::GridScaled);

}  // namespace lutloc
