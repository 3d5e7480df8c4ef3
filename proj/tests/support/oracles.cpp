#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace oracles {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool run_accesses(const TraceRun& run, const EntryIndex& e) {
  for (const auto& q : run.queries)
    for (const auto& d : q.depends)
      if (d == e) return true;
  return false;
}

double point_weight(const LookupMap& map, const lutloc::VectorXd& point,
                    const EntryIndex& e, const AffectConfig& cfg) {
  if (!uses_metric(cfg.mode)) {
    for (const EntryIndex& d : lutloc::depends(map, point))
      if (d == e) return 1.0;
    return 0.0;
  }
  const double dist = lutloc::point_entry_distance(map, point, e, cfg.distance_mode);
  if (dist > cfg.radius) return 0.0;
  return std::pow(cfg.lambda, dist);
}

double run_weight(const LookupMap& map, const TraceRun& run,
                  const EntryIndex& e, const AffectConfig& cfg) {
  if (uses_frequency(cfg.mode)) {
    if (run.queries.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& q : run.queries) sum += point_weight(map, q.point, e, cfg);
    return sum / static_cast<double>(run.queries.size());
  }
  if (!uses_metric(cfg.mode)) return run_accesses(run, e) ? 1.0 : 0.0;
  double acc = 0.0;
  for (const auto& q : run.queries) {
    const double m = point_weight(map, q.point, e, cfg);
    if (cfg.aggregation == lutloc::Aggregation::Max)
      acc = std::max(acc, m);
    else
      acc += m;
  }
  return std::min(acc, 1.0);
}

}  // namespace

BuildingBlocks blocks(const LookupMap& map, const std::vector<TraceRun>& runs,
                      const EntryIndex& entry, const AffectConfig& cfg) {
  std::vector<size_t> order(runs.size());
  for (size_t i = 0; i < runs.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return runs[a].id < runs[b].id; });
  BuildingBlocks bb;
  for (size_t i : order) {
    const TraceRun& run = runs[i];
    const double s = run.score.value();
    const double w = run_weight(map, run, entry, cfg);
    if (s < 0) {
      bb.f += s;
      bb.f_a += w * s;
      if (w == 0.0) bb.f_u += s;
    } else {
      bb.p += s;
      bb.p_a += w * s;
      if (w == 0.0) bb.p_u += s;
    }
  }
  // Frequency weighting replaces run access by the query fraction; the totals
  // are then the per-entry splits rather than the raw score sums.
  if (uses_frequency(cfg.mode)) {
    bb.f = bb.f_a + bb.f_u;
    bb.p = bb.p_a + bb.p_u;
  }
  return bb;
}

double tarantula(const BuildingBlocks& bb) {
  const double rf = bb.f == 0.0 ? 0.0 : bb.f_a / bb.f;
  const double rp = bb.p == 0.0 ? 0.0 : bb.p_a / bb.p;
  if (rf + rp <= 0.0) return 0.0;
  return rf / (rf + rp);
}

double kulczynski(const BuildingBlocks& bb) {
  const double num = std::fabs(bb.f_a);
  if (num == 0.0) return 0.0;
  const double den = std::fabs(bb.f_u) + bb.p_a;
  return den == 0.0 ? kInf : num / den;
}

double dstar(const BuildingBlocks& bb, double gamma) {
  const double base = std::fabs(bb.f_a);
  const double num = gamma == 1.0 ? base : std::pow(base, gamma);
  if (num == 0.0) return 0.0;
  const double den = std::fabs(bb.f_u) + bb.p_a;
  return den == 0.0 ? kInf : num / den;
}

std::vector<EntryIndex> m_f(const LookupMap& map,
                            const std::vector<TraceRun>& runs) {
  std::vector<EntryIndex> out;
  for (std::int64_t f = 0; f < map.size(); ++f) {
    const EntryIndex e = map.entry_at(f);
    for (const TraceRun& run : runs)
      if (run.score.value() < 0 && run_accesses(run, e)) {
        out.push_back(e);
        break;
      }
  }
  return out;
}

std::vector<EntryIndex> m_s(const LookupMap& map,
                            const std::vector<TraceRun>& runs) {
  std::vector<EntryIndex> out;
  for (std::int64_t f = 0; f < map.size(); ++f) {
    const EntryIndex e = map.entry_at(f);
    for (const TraceRun& run : runs)
      if (run.score.value() >= 0 && run_accesses(run, e)) {
        out.push_back(e);
        break;
      }
  }
  return out;
}

std::vector<EntryIndex> ball(const LookupMap& map,
                             const std::vector<EntryIndex>& x, double r,
                             lutloc::DistanceMode mode) {
  std::vector<EntryIndex> out;
  for (std::int64_t f = 0; f < map.size(); ++f) {
    const EntryIndex e = map.entry_at(f);
    for (const EntryIndex& m : x)
      if (lutloc::entry_distance(map, e, m, mode) <= r) {
        out.push_back(e);
        break;
      }
  }
  return out;
}

std::vector<EntryIndex> sus_u(const LookupMap& map,
                              const std::vector<TraceRun>& runs, double r,
                              lutloc::DistanceMode mode) {
  const std::vector<EntryIndex> fail = m_f(map, runs);
  const std::vector<EntryIndex> banned = ball(map, m_s(map, runs), r, mode);
  std::vector<EntryIndex> out;
  for (const EntryIndex& e : fail)
    if (std::find(banned.begin(), banned.end(), e) == banned.end())
      out.push_back(e);
  return out;
}

std::vector<EntryIndex> sus_iu_phi_form(const LookupMap& map,
                                        const std::vector<TraceRun>& runs,
                                        double r, lutloc::DistanceMode mode) {
  const std::vector<EntryIndex> fail = m_f(map, runs);
  const std::vector<EntryIndex> banned = ball(map, m_s(map, runs), r, mode);
  auto is_banned = [&](const EntryIndex& e) {
    return std::find(banned.begin(), banned.end(), e) != banned.end();
  };
  std::vector<EntryIndex> out;
  for (const EntryIndex& m : fail) {
    bool every_run = true;
    for (const TraceRun& run : runs) {
      if (run.score.value() >= 0) continue;
      bool witnessed = false;
      for (const auto& q : run.queries) {
        for (const auto& mz : q.depends) {
          if (is_banned(mz)) continue;
          if (lutloc::entry_distance(map, m, mz, mode) <= r) {
            witnessed = true;
            break;
          }
        }
        if (witnessed) break;
      }
      if (!witnessed) {
        every_run = false;
        break;
      }
    }
    if (every_run && !is_banned(m)) out.push_back(m);
  }
  return out;
}

std::vector<EntryIndex> sus_iu_union_form(const LookupMap& map,
                                          const std::vector<TraceRun>& runs,
                                          double r, lutloc::DistanceMode mode) {
  const std::vector<EntryIndex> su = sus_u(map, runs, r, mode);
  auto in_su = [&](const EntryIndex& e) {
    return std::find(su.begin(), su.end(), e) != su.end();
  };
  std::vector<EntryIndex> out;
  for (const EntryIndex& m : su) {
    bool every_run = true;
    for (const TraceRun& run : runs) {
      if (run.score.value() >= 0) continue;
      bool witnessed = false;
      for (const auto& q : run.queries) {
        for (const auto& mz : q.depends) {
          if (!in_su(mz)) continue;
          if (lutloc::entry_distance(map, m, mz, mode) <= r) {
            witnessed = true;
            break;
          }
        }
        if (witnessed) break;
      }
      if (!witnessed) {
        every_run = false;
        break;
      }
    }
    if (every_run) out.push_back(m);
  }
  return out;
}

RandomInstance random_instance(SplitMix64& rng, int max_entries, int max_runs,
                               int max_queries) {
  using lutloc::GridAxis;
  using lutloc::VectorXd;
  const bool two_d = rng.uniform() < 0.4;
  int n0, n1 = 1;
  if (two_d) {
    n0 = 2 + static_cast<int>(rng.uniform() * 2.999);  // 2..4
    n1 = 2 + static_cast<int>(rng.uniform() * 2.999);
    while (n0 * n1 > max_entries) (n0 > n1 ? n0 : n1) -= 1;
  } else {
    n0 = 2 + static_cast<int>(rng.uniform() * (max_entries - 1.001));
  }
  auto make_axis = [&](int n) {
    VectorXd bp(n);
    double x = rng.uniform(-5.0, 0.0);
    for (int i = 0; i < n; ++i) {
      bp(i) = x;
      x += rng.uniform(0.3, 2.0);
    }
    return GridAxis(bp);
  };
  std::vector<GridAxis> axes;
  axes.push_back(make_axis(n0));
  if (two_d) axes.push_back(make_axis(n1));
  const std::int64_t total = two_d ? n0 * n1 : n0;
  VectorXd values(total);
  for (std::int64_t i = 0; i < total; ++i) values(i) = rng.uniform(-3.0, 3.0);
  const lutloc::Scheme scheme =
      rng.uniform() < 0.75 ? lutloc::Scheme::Multilinear : lutloc::Scheme::Nearest;
  LookupMap map(std::move(axes), std::move(values), scheme);

  const int n_runs = 1 + static_cast<int>(rng.uniform() * (max_runs - 0.001));
  std::vector<TraceRun> runs;
  for (int i = 0; i < n_runs; ++i) {
    TraceRun run;
    char buf[16];
    std::snprintf(buf, sizeof buf, "r%03d", i);
    run.id = buf;
    const int n_q = static_cast<int>(rng.uniform() * (max_queries + 0.999));
    for (int q = 0; q < n_q; ++q) {
      VectorXd point(map.dims());
      for (int k = 0; k < map.dims(); ++k) {
        const auto& ax = map.axis(k);
        const double span = ax[ax.size() - 1] - ax[0];
        point(k) = ax[0] + rng.uniform(-0.3, 1.3) * span;
        if (rng.uniform() < 0.25) {
          // Land exactly on a breakpoint now and then.
          point(k) = ax[static_cast<int>(rng.uniform() * (ax.size() - 0.001))];
        }
      }
      lutloc::QueryResult res = lutloc::interpolate(map, point);
      run.queries.push_back(lutloc::QueryRecord{q + 1, res.point, res.depends});
    }
    double s = rng.uniform(-4.0, 4.0);
    if (std::fabs(s) < 1e-3) s = 1e-3;  // keep clear of the class boundary
    run.score = s;
    runs.push_back(std::move(run));
  }
  return {std::move(map), std::move(runs)};
}

// ---------------------------------------------------------------------------
// STL test material.
// ---------------------------------------------------------------------------

lutloc::stl::Signal random_signal(SplitMix64& rng, int max_knots, double span) {
  using lutloc::VectorXd;
  lutloc::stl::Signal s;
  const int n = 3 + static_cast<int>(rng.uniform() * (max_knots - 2.001));
  VectorXd t(n), a(n), b(n);
  for (int i = 0; i < n; ++i) {
    t(i) = span * static_cast<double>(i) / (n - 1);
    a(i) = rng.uniform(-3.0, 3.0);
    b(i) = rng.uniform(-3.0, 3.0);
  }
  s.times = t;
  s.channels["u"] = a;
  s.channels["v"] = b;
  return s;
}

namespace {

using lutloc::stl::Expr;
using lutloc::stl::ExprPtr;
using lutloc::stl::FormulaNode;
using lutloc::stl::FormulaNodePtr;

ExprPtr expr_const(double c) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Constant;
  e->constant = c;
  return e;
}

ExprPtr expr_channel(const std::string& ch) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Channel;
  e->channel = ch;
  return e;
}

ExprPtr expr_bin(Expr::Kind k, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->lhs = std::move(a);
  e->rhs = std::move(b);
  return e;
}

ExprPtr expr_un(Expr::Kind k, ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->lhs = std::move(a);
  return e;
}

ExprPtr random_margin(SplitMix64& rng, const std::vector<std::string>& chans) {
  const std::string& ch = chans[static_cast<size_t>(rng.uniform() * (chans.size() - 0.001))];
  ExprPtr base = expr_channel(ch);
  if (rng.uniform() < 0.35)
    base = expr_bin(Expr::Kind::Sub, base, expr_const(rng.uniform(-2.0, 2.0)));
  if (rng.uniform() < 0.4) base = expr_un(Expr::Kind::Abs, base);
  if (rng.uniform() < 0.3) {
    const std::string& ch2 = chans[static_cast<size_t>(rng.uniform() * (chans.size() - 0.001))];
    base = expr_bin(rng.uniform() < 0.5 ? Expr::Kind::Add : Expr::Kind::Sub,
                    base, expr_channel(ch2));
  }
  // Normalized comparison margin: expr - threshold.
  return expr_bin(Expr::Kind::Sub, base, expr_const(rng.uniform(-2.0, 2.0)));
}

FormulaNodePtr random_node(SplitMix64& rng, int depth, double budget,
                           const std::vector<std::string>& chans,
                           bool allow_until) {
  const double pick = rng.uniform();
  if (depth <= 0 || pick < 0.3) {
    auto f = std::make_shared<FormulaNode>();
    f->kind = FormulaNode::Kind::Atom;
    f->atom = random_margin(rng, chans);
    return f;
  }
  if (pick < 0.42) {
    auto f = std::make_shared<FormulaNode>();
    f->kind = FormulaNode::Kind::Not;
    f->lhs = random_node(rng, depth - 1, budget, chans, allow_until);
    return f;
  }
  if (pick < 0.62) {
    auto f = std::make_shared<FormulaNode>();
    f->kind = rng.uniform() < 0.5 ? FormulaNode::Kind::And : FormulaNode::Kind::Or;
    f->lhs = random_node(rng, depth - 1, budget, chans, allow_until);
    f->rhs = random_node(rng, depth - 1, budget, chans, allow_until);
    return f;
  }
  const double hi = rng.uniform(0.0, 0.6) * budget;
  const double lo = rng.uniform(0.0, hi);
  auto f = std::make_shared<FormulaNode>();
  f->interval.lo = lo;
  f->interval.hi = hi;
  const double rest = budget - hi;
  if (allow_until && pick > 0.88) {
    f->kind = FormulaNode::Kind::Until;
    f->lhs = random_node(rng, depth - 1, rest, chans, allow_until);
    f->rhs = random_node(rng, depth - 1, rest, chans, allow_until);
  } else {
    f->kind = pick < 0.75 ? FormulaNode::Kind::Always
                          : FormulaNode::Kind::Eventually;
    f->lhs = random_node(rng, depth - 1, rest, chans, allow_until);
  }
  return f;
}

double oracle_expr_at(const Expr& e, const lutloc::stl::Signal& x, double t) {
  switch (e.kind) {
    case Expr::Kind::Constant: return e.constant;
    case Expr::Kind::Channel: return x.value(e.channel, t);
    case Expr::Kind::Add: return oracle_expr_at(*e.lhs, x, t) + oracle_expr_at(*e.rhs, x, t);
    case Expr::Kind::Sub: return oracle_expr_at(*e.lhs, x, t) - oracle_expr_at(*e.rhs, x, t);
    case Expr::Kind::Mul: return oracle_expr_at(*e.lhs, x, t) * oracle_expr_at(*e.rhs, x, t);
    case Expr::Kind::Div: return oracle_expr_at(*e.lhs, x, t) / oracle_expr_at(*e.rhs, x, t);
    case Expr::Kind::Neg: return -oracle_expr_at(*e.lhs, x, t);
    case Expr::Kind::Abs: return std::fabs(oracle_expr_at(*e.lhs, x, t));
  }
  return 0.0;
}

void collect_atom_times(const FormulaNode& f, const lutloc::stl::Signal& x,
                        std::set<double>& times) {
  if (f.kind == FormulaNode::Kind::Atom) {
    // Signal knots plus sampled zero crossings of the margin.
    std::vector<double> knots;
    for (Eigen::Index i = 0; i < x.times.size(); ++i) knots.push_back(x.times(i));
    for (double k : knots) times.insert(k);
    for (size_t i = 0; i + 1 < knots.size(); ++i) {
      const double a = knots[i], b = knots[i + 1];
      const int samples = 8;
      double prev_t = a, prev_v = oracle_expr_at(*f.atom, x, a);
      for (int s = 1; s <= samples; ++s) {
        const double t = a + (b - a) * s / samples;
        const double v = oracle_expr_at(*f.atom, x, t);
        if ((prev_v < 0 && v >= 0) || (prev_v >= 0 && v < 0)) {
          // Bisect the crossing.
          double lo = prev_t, hi = t, flo = prev_v;
          for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = oracle_expr_at(*f.atom, x, mid);
            if ((flo < 0) == (fm < 0)) {
              lo = mid;
              flo = fm;
            } else {
              hi = mid;
            }
          }
          times.insert(0.5 * (lo + hi));
        }
        prev_t = t;
        prev_v = v;
      }
    }
    return;
  }
  if (f.lhs) collect_atom_times(*f.lhs, x, times);
  if (f.rhs) collect_atom_times(*f.rhs, x, times);
}

void collect_intervals(const FormulaNode& f,
                       std::vector<std::pair<double, double>>& ivs) {
  if (f.kind == FormulaNode::Kind::Always ||
      f.kind == FormulaNode::Kind::Eventually ||
      f.kind == FormulaNode::Kind::Until)
    ivs.emplace_back(f.interval.lo, f.interval.hi);
  if (f.lhs) collect_intervals(*f.lhs, ivs);
  if (f.rhs) collect_intervals(*f.rhs, ivs);
}

struct GridOracle {
  const lutloc::stl::Signal& x;
  std::vector<double> grid;
  double t_end;
  std::map<std::pair<const FormulaNode*, double>, bool> memo;

  bool sat(const FormulaNode& f, double t) {
    const auto key = std::make_pair(&f, t);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    bool out = false;
    switch (f.kind) {
      case FormulaNode::Kind::Atom:
        out = oracle_expr_at(*f.atom, x, t) >= 0.0;
        break;
      case FormulaNode::Kind::Step:
        out = false;  // not generated
        break;
      case FormulaNode::Kind::Not:
        out = !sat(*f.lhs, t);
        break;
      case FormulaNode::Kind::And:
        out = sat(*f.lhs, t) && sat(*f.rhs, t);
        break;
      case FormulaNode::Kind::Or:
        out = sat(*f.lhs, t) || sat(*f.rhs, t);
        break;
      case FormulaNode::Kind::Always:
      case FormulaNode::Kind::Eventually: {
        const double wlo = t + f.interval.lo;
        const double whi = std::min(f.interval.hi == lutloc::stl::kInf
                                        ? t_end
                                        : t + f.interval.hi,
                                    t_end);
        const bool is_alw = f.kind == FormulaNode::Kind::Always;
        out = is_alw;
        for (double g : window_points(wlo, whi)) {
          const bool c = sat(*f.lhs, g);
          if (is_alw && !c) { out = false; break; }
          if (!is_alw && c) { out = true; break; }
        }
        break;
      }
      case FormulaNode::Kind::Until: {
        const double wlo = t + f.interval.lo;
        const double whi = std::min(f.interval.hi == lutloc::stl::kInf
                                        ? t_end
                                        : t + f.interval.hi,
                                    t_end);
        out = false;
        for (double t1 : window_points(wlo, whi)) {
          if (!sat(*f.rhs, t1)) continue;
          bool prefix = true;
          for (double t2 : window_points(t, t1)) {
            if (t2 <= t || t2 >= t1) continue;
            if (!sat(*f.lhs, t2)) { prefix = false; break; }
          }
          // Narrow prefixes can fall between grid points; sample them too.
          for (int s = 1; prefix && s <= 8; ++s) {
            const double t2 = t + (t1 - t) * s / 9.0;
            if (t2 > t && t2 < t1 && !sat(*f.lhs, t2)) prefix = false;
          }
          if (prefix) { out = true; break; }
        }
        break;
      }
    }
    memo.emplace(key, out);
    return out;
  }

  std::vector<double> window_points(double lo, double hi) const {
    std::vector<double> pts;
    if (hi < lo) return pts;
    pts.push_back(lo);
    for (double g : grid)
      if (g > lo && g < hi) pts.push_back(g);
    if (hi > lo) pts.push_back(hi);
    return pts;
  }
};

}  // namespace

lutloc::stl::Formula random_formula(SplitMix64& rng, int max_depth,
                                    double horizon_budget,
                                    const std::vector<std::string>& channels,
                                    bool allow_until) {
  return lutloc::stl::Formula(
      random_node(rng, max_depth, horizon_budget, channels, allow_until));
}

bool bool_on_grid(const lutloc::stl::Formula& f, const lutloc::stl::Signal& x,
                  double t) {
  std::set<double> base;
  collect_atom_times(f.root(), x, base);
  base.insert(t);
  std::vector<std::pair<double, double>> ivs;
  collect_intervals(f.root(), ivs);
  // One round of window-endpoint shifts so nested decisions land on the grid.
  std::set<double> grid = base;
  for (double g : base)
    for (auto& [a, b] : ivs) {
      grid.insert(g - a);
      grid.insert(g + a);
      if (b != lutloc::stl::kInf) {
        grid.insert(g - b);
        grid.insert(g + b);
      }
    }
  const double lo = x.t_begin(), hi = x.t_end();
  for (int i = 0; i <= 160; ++i) grid.insert(lo + (hi - lo) * i / 160.0);
  GridOracle oracle{x, {}, hi, {}};
  for (double g : grid)
    if (g >= lo && g <= hi) oracle.grid.push_back(g);
  std::sort(oracle.grid.begin(), oracle.grid.end());
  return oracle.sat(f.root(), t);
}

}  // namespace oracles
