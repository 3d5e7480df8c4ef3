#include "lutloc/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lutloc {

namespace {

// Flags over flat indices for one access class.
std::vector<char> access_flags(const LookupMap& map,
                               std::span<const TraceRun> runs, bool failing) {
  std::vector<char> flags(static_cast<size_t>(map.size()), 0);
  for (const TraceRun& run : runs) {
    const double s = run.score_value();
    if ((s < 0) != failing) continue;
    for (const QueryRecord& q : run.queries)
      for (const EntryIndex& e : q.depends)
        flags[static_cast<size_t>(map.flat_index(e))] = 1;
  }
  return flags;
}

std::vector<EntryIndex> flags_to_entries(const LookupMap& map,
                                         const std::vector<char>& flags) {
  std::vector<EntryIndex> out;
  for (std::int64_t f = 0; f < map.size(); ++f)
    if (flags[static_cast<size_t>(f)]) out.push_back(map.entry_at(f));
  return out;
}

std::vector<char> ball_flags(const LookupMap& map,
                             std::span<const EntryIndex> x, double r,
                             DistanceMode mode) {
  if (r < 0.0) throw InputError("ball radius must be >= 0");
  std::vector<char> flags(static_cast<size_t>(map.size()), 0);
  // Box search around each member keeps this near the r-ball output size.
  const int d = map.dims();
  for (const EntryIndex& e : x) {
    map.flat_index(e);  // validate
    std::vector<int> lo(static_cast<size_t>(d)), hi(static_cast<size_t>(d));
    for (int k = 0; k < d; ++k) {
      const GridAxis& ax = map.axis(k);
      int span;
      switch (mode) {
        case DistanceMode::IndexSpace:
          span = static_cast<int>(std::floor(r)) + 1;
          break;
        case DistanceMode::Physical: {
          double step_min = std::numeric_limits<double>::infinity();
          for (int i = 0; i + 1 < ax.size(); ++i)
            step_min = std::min(step_min, ax[i + 1] - ax[i]);
          span = static_cast<int>(std::floor(r / step_min)) + 1;
          break;
        }
        case DistanceMode::GridScaled:
        default: {
          double step_min = std::numeric_limits<double>::infinity();
          for (int i = 0; i + 1 < ax.size(); ++i)
            step_min = std::min(step_min, ax[i + 1] - ax[i]);
          span = static_cast<int>(std::floor(r * ax.mean_step() / step_min)) + 1;
          break;
        }
      }
      lo[static_cast<size_t>(k)] = std::max(0, e.coords[static_cast<size_t>(k)] - span);
      hi[static_cast<size_t>(k)] =
          std::min(ax.size() - 1, e.coords[static_cast<size_t>(k)] + span);
    }
    std::vector<int> c = lo;
    while (true) {
      EntryIndex cand(c);
      if (entry_distance(map, e, cand, mode) <= r)
        flags[static_cast<size_t>(map.flat_index(cand))] = 1;
      int k = d - 1;
      while (k >= 0) {
        if (++c[static_cast<size_t>(k)] <= hi[static_cast<size_t>(k)]) break;
        c[static_cast<size_t>(k)] = lo[static_cast<size_t>(k)];
        --k;
      }
      if (k < 0) break;
    }
  }
  return flags;
}

}  // namespace

std::pair<std::vector<EntryIndex>, std::vector<EntryIndex>> accessed_sets(
    const LookupMap& map, std::span<const TraceRun> runs) {
  return {flags_to_entries(map, access_flags(map, runs, true)),
          flags_to_entries(map, access_flags(map, runs, false))};
}

std::vector<EntryIndex> ball(const LookupMap& map,
                             std::span<const EntryIndex> x, double r,
                             DistanceMode mode) {
  return flags_to_entries(map, ball_flags(map, x, r, mode));
}

SpectraResult union_suspicious(const LookupMap& map,
                               std::span<const TraceRun> runs, double r,
                               DistanceMode mode) {
  if (r < 0.0) throw InputError("spectra radius must be >= 0");
  SpectraResult out;
  out.radius = r;
  out.distance_mode = mode;

  const std::vector<char> fail_flags = access_flags(map, runs, true);
  const std::vector<char> pass_flags = access_flags(map, runs, false);
  out.m_f = flags_to_entries(map, fail_flags);
  out.m_s = flags_to_entries(map, pass_flags);
  const std::vector<char> banned = ball_flags(map, out.m_s, r, mode);

  // s_u: mildest |score| among failing accessors, collected in one sweep.
  std::vector<double> mildest(static_cast<size_t>(map.size()),
                              std::numeric_limits<double>::infinity());
  for (const TraceRun& run : runs) {
    const double s = run.score_value();
    if (s >= 0) continue;
    for (const QueryRecord& q : run.queries)
      for (const EntryIndex& e : q.depends) {
        const size_t f = static_cast<size_t>(map.flat_index(e));
        mildest[f] = std::min(mildest[f], std::fabs(s));
      }
  }

  const double fallback = map_diameter(map, mode) + 1.0;
  for (std::int64_t f = 0; f < map.size(); ++f) {
    if (!fail_flags[static_cast<size_t>(f)] || banned[static_cast<size_t>(f)])
      continue;
    SpectraResult::SuspiciousEntry se;
    se.index = map.entry_at(f);
    se.s_u = mildest[static_cast<size_t>(f)];
    se.d_u = fallback;
    for (const EntryIndex& ms : out.m_s)
      se.d_u = std::min(se.d_u, entry_distance(map, se.index, ms, mode));
    se.r_u = se.s_u * se.d_u;
    se.neighbors = grid_neighbors(map, se.index);
    out.sus_u.push_back(std::move(se));
  }
  std::sort(out.sus_u.begin(), out.sus_u.end(),
            [&](const SpectraResult::SuspiciousEntry& a,
                const SpectraResult::SuspiciousEntry& b) {
              if (a.r_u != b.r_u) return a.r_u > b.r_u;
              return map.flat_index(a.index) < map.flat_index(b.index);
            });

  out.sus_iu = intersection_union_suspicious(map, runs, r, mode);
  return out;
}

std::vector<EntryIndex> intersection_union_suspicious(
    const LookupMap& map, std::span<const TraceRun> runs, double r,
    DistanceMode mode) {
  if (r < 0.0) throw InputError("spectra radius must be >= 0");
  const std::vector<char> fail_flags = access_flags(map, runs, true);
  const std::vector<char> pass_flags = access_flags(map, runs, false);
  const std::vector<char> banned =
      ball_flags(map, flags_to_entries(map, pass_flags), r, mode);

  // Per failing run, the accessed entries that stay clear of the passing
  // ball; an entry qualifies iff each failing run has such an access within r.
  std::vector<std::vector<EntryIndex>> clear_accesses;
  for (const TraceRun& run : runs) {
    if (run.score_value() >= 0) continue;
    std::vector<char> seen(static_cast<size_t>(map.size()), 0);
    std::vector<EntryIndex> mine;
    for (const QueryRecord& q : run.queries)
      for (const EntryIndex& e : q.depends) {
        const size_t f = static_cast<size_t>(map.flat_index(e));
        if (seen[f] || banned[f]) continue;
        seen[f] = 1;
        mine.push_back(e);
      }
    clear_accesses.push_back(std::move(mine));
  }

  std::vector<EntryIndex> out;
  for (std::int64_t f = 0; f < map.size(); ++f) {
    if (!fail_flags[static_cast<size_t>(f)] || banned[static_cast<size_t>(f)])
      continue;
    const EntryIndex m = map.entry_at(f);
    bool all_runs_near = true;
    for (const auto& accesses : clear_accesses) {
      bool near = false;
      for (const EntryIndex& mz : accesses)
        if (entry_distance(map, m, mz, mode) <= r) {
          near = true;
          break;
        }
      if (!near) {
        all_runs_near = false;
        break;
      }
    }
    if (all_runs_near && !clear_accesses.empty()) out.push_back(m);
  }
  return out;
}

}  // namespace lutloc
