#include "lutloc/rankers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lutloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Per-run sparse weights over entries, flat-indexed. Metric modes search a
/// bounding box of candidate entries around each query point; radius == inf
/// scans the whole grid.
class WeightAccumulator {
 public:
  explicit WeightAccumulator(const LookupMap& map)
      : map_(map), dense_(static_cast<size_t>(map.size()), 0.0) {}

  // Returns (flat, weight) pairs with weight > 0, sorted by flat index.
  const std::vector<std::pair<std::int64_t, double>>& run_weights(
      const TraceRun& run, const AffectConfig& cfg) {
    clear();
    const bool freq = uses_frequency(cfg.mode);
    const bool metric = uses_metric(cfg.mode);
    if (!metric) {
      for (const QueryRecord& q : run.queries)
        for (const EntryIndex& e : q.depends) bump(map_.flat_index(e), 1.0, cfg, freq);
    } else {
      for (const QueryRecord& q : run.queries) metric_query(q.point, cfg, freq);
    }
    finish(run, cfg, freq);
    return out_;
  }

 private:
  void clear() {
    for (std::int64_t f : touched_) dense_[static_cast<size_t>(f)] = 0.0;
    touched_.clear();
    out_.clear();
  }

  void bump(std::int64_t flat, double w, const AffectConfig& cfg, bool freq) {
    double& slot = dense_[static_cast<size_t>(flat)];
    if (slot == 0.0) touched_.push_back(flat);
    if (freq || cfg.aggregation == Aggregation::Sum)
      slot += w;
    else
      slot = std::max(slot, w);
  }

  void metric_query(const VectorXd& point, const AffectConfig& cfg, bool freq) {
    const int d = map_.dims();
    // Candidate box per axis.
    std::vector<int> lo(static_cast<size_t>(d)), hi(static_cast<size_t>(d));
    for (int k = 0; k < d; ++k) {
      const GridAxis& ax = map_.axis(k);
      if (cfg.radius == kInf) {
        lo[static_cast<size_t>(k)] = 0;
        hi[static_cast<size_t>(k)] = ax.size() - 1;
        continue;
      }
      double reach;  // physical half-width that can be within the radius
      switch (cfg.distance_mode) {
        case DistanceMode::Physical: reach = cfg.radius; break;
        case DistanceMode::GridScaled: reach = cfg.radius * ax.mean_step(); break;
        case DistanceMode::IndexSpace:
        default: {
          // Bound fractional-index reach by the widest cell.
          double wmax = 0.0;
          for (int i = 0; i + 1 < ax.size(); ++i)
            wmax = std::max(wmax, ax[i + 1] - ax[i]);
          reach = cfg.radius * wmax;
          break;
        }
      }
      int a = ax.cell_of(point(static_cast<Eigen::Index>(k)) - reach);
      int b = ax.cell_of(point(static_cast<Eigen::Index>(k)) + reach) + 1;
      lo[static_cast<size_t>(k)] = std::max(0, a);
      hi[static_cast<size_t>(k)] = std::min(ax.size() - 1, b);
    }
    std::vector<int> c = lo;
    while (true) {
      EntryIndex e(c);
      const double dist = point_entry_distance(map_, point, e, cfg.distance_mode);
      if (dist <= cfg.radius) {
        const double m = std::pow(cfg.lambda, dist);
        bump(map_.flat_index(e), m, cfg, freq);
      }
      int k = d - 1;
      while (k >= 0) {
        if (++c[static_cast<size_t>(k)] <= hi[static_cast<size_t>(k)]) break;
        c[static_cast<size_t>(k)] = lo[static_cast<size_t>(k)];
        --k;
      }
      if (k < 0) break;
    }
  }

  void finish(const TraceRun& run, const AffectConfig& cfg, bool freq) {
    std::sort(touched_.begin(), touched_.end());
    const double denom = freq ? static_cast<double>(run.queries.size()) : 1.0;
    for (std::int64_t f : touched_) {
      double w = dense_[static_cast<size_t>(f)];
      if (freq) {
        w /= denom;
      } else if (cfg.aggregation == Aggregation::Sum) {
        w = std::min(w, 1.0);
      }
      if (w > 0.0) out_.emplace_back(f, w);
    }
  }

  const LookupMap& map_;
  std::vector<double> dense_;
  std::vector<std::int64_t> touched_;
  std::vector<std::pair<std::int64_t, double>> out_;
};

std::vector<size_t> run_order_by_id(std::span<const TraceRun> runs) {
  std::vector<size_t> idx(runs.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return runs[a].id < runs[b].id;
  });
  return idx;
}

struct Accumulated {
  std::vector<double> f_a, p_a, f_touch, p_touch;
  double f = 0.0, p = 0.0;
};

Accumulated accumulate(const LookupMap& map, std::span<const TraceRun> runs,
                       const AffectConfig& cfg, const ScoreShift& shift) {
  cfg.validate();
  shift.validate();
  if (runs.empty()) throw InputError("ranking needs at least one run");
  const size_t n = static_cast<size_t>(map.size());
  Accumulated acc;
  acc.f_a.assign(n, 0.0);
  acc.p_a.assign(n, 0.0);
  acc.f_touch.assign(n, 0.0);
  acc.p_touch.assign(n, 0.0);
  WeightAccumulator weights(map);
  for (size_t i : run_order_by_id(runs)) {
    const TraceRun& run = runs[i];
    const double s = shift.apply(run.score_value());
    const auto& w = weights.run_weights(run, cfg);
    if (s < 0) {
      acc.f += s;
      for (const auto& [flat, wt] : w) {
        acc.f_a[static_cast<size_t>(flat)] += wt * s;
        acc.f_touch[static_cast<size_t>(flat)] += s;
      }
    } else {
      acc.p += s;
      for (const auto& [flat, wt] : w) {
        acc.p_a[static_cast<size_t>(flat)] += wt * s;
        acc.p_touch[static_cast<size_t>(flat)] += s;
      }
    }
  }
  return acc;
}

BuildingBlocks blocks_for(const Accumulated& acc, size_t e, AffectMode mode) {
  BuildingBlocks bb;
  bb.f_a = acc.f_a[e];
  bb.p_a = acc.p_a[e];
  // The unaffected sums always cover the runs whose weight is exactly zero.
  bb.f_u = acc.f - acc.f_touch[e];
  bb.p_u = acc.p - acc.p_touch[e];
  if (uses_frequency(mode)) {
    // Frequency weights replace whole-run access, and the totals are the
    // per-entry splits f_a + f_u and p_a + p_u; fractional weights make these
    // smaller than the plain score sums.
    bb.f = bb.f_a + bb.f_u;
    bb.p = bb.p_a + bb.p_u;
  } else {
    bb.f = acc.f;
    bb.p = acc.p;
  }
  return bb;
}

}  // namespace

void ScoreShift::validate() const {
  if (neg_shift > 0.0) throw InputError("neg_shift must be <= 0");
  if (pos_shift < 0.0) throw InputError("pos_shift must be >= 0");
}

BuildingBlocks building_blocks(const LookupMap& map,
                               std::span<const TraceRun> runs,
                               const EntryIndex& entry,
                               const AffectConfig& cfg,
                               const ScoreShift& shift) {
  const std::int64_t flat = map.flat_index(entry);
  const Accumulated acc = accumulate(map, runs, cfg, shift);
  return blocks_for(acc, static_cast<size_t>(flat), cfg.mode);
}

double tarantula(const BuildingBlocks& bb) {
  const double rf = bb.f != 0.0 ? bb.f_a / bb.f : 0.0;
  const double rp = bb.p != 0.0 ? bb.p_a / bb.p : 0.0;
  const double denom = rf + rp;
  return denom > 0.0 ? rf / denom : 0.0;
}

double kulczynski(const BuildingBlocks& bb) {
  const double num = std::fabs(bb.f_a);
  if (num == 0.0) return 0.0;
  const double denom = std::fabs(bb.f_u) + bb.p_a;
  return denom == 0.0 ? kInf : num / denom;
}

double dstar(const BuildingBlocks& bb, double gamma) {
  if (!(gamma >= 1.0)) throw InputError("dstar needs gamma >= 1");
  const double base = std::fabs(bb.f_a);
  const double num = gamma == 1.0 ? base : std::pow(base, gamma);
  if (num == 0.0) return 0.0;
  const double denom = std::fabs(bb.f_u) + bb.p_a;
  return denom == 0.0 ? kInf : num / denom;
}

Heuristic make_heuristic(const std::string& name, double gamma) {
  if (name == "tarantula") return [](const BuildingBlocks& bb) { return tarantula(bb); };
  if (name == "kulczynski") return [](const BuildingBlocks& bb) { return kulczynski(bb); };
  if (name == "dstar")
    return [gamma](const BuildingBlocks& bb) { return dstar(bb, gamma); };
  throw InputError("unknown heuristic '" + name +
                   "' (expected tarantula, kulczynski, or dstar)");
}

EntryIndex RankingResult::entry_of(std::int64_t flat) const {
  std::vector<int> c(shape.size());
  for (size_t k = shape.size(); k-- > 0;) {
    c[k] = static_cast<int>(flat % shape[k]);
    flat /= shape[k];
  }
  return EntryIndex(std::move(c));
}

RankingResult rank(const LookupMap& map, std::span<const TraceRun> runs,
                   const std::string& heuristic, const AffectConfig& cfg,
                   const ScoreShift& shift, double gamma) {
  const Heuristic h = make_heuristic(heuristic, gamma);
  const Accumulated acc = accumulate(map, runs, cfg, shift);
  RankingResult out;
  out.heuristic = heuristic;
  out.gamma = gamma;
  out.config = cfg;
  out.shift = shift;
  for (int k = 0; k < map.dims(); ++k) out.shape.push_back(map.axis(k).size());
  const size_t n = static_cast<size_t>(map.size());
  out.scores.resize(n);
  for (size_t e = 0; e < n; ++e) out.scores[e] = h(blocks_for(acc, e, cfg.mode));
  out.order.resize(n);
  std::iota(out.order.begin(), out.order.end(), std::int64_t{0});
  std::sort(out.order.begin(), out.order.end(),
            [&](std::int64_t a, std::int64_t b) {
              const double sa = out.scores[static_cast<size_t>(a)];
              const double sb = out.scores[static_cast<size_t>(b)];
              if (sa != sb) return sa > sb;
              return a < b;
            });
  return out;
}

}  // namespace lutloc
