#include "lutloc/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lutloc/rng.hpp"

namespace lutloc {

double PiecewiseLinearInput::at(double t) const {
  const Eigen::Index n = times.size();
  if (t <= times(0)) return values(0);
  if (t >= times(n - 1)) return values(n - 1);
  const double* begin = times.data();
  const double* seg = std::upper_bound(begin, begin + n, t);
  const Eigen::Index i = seg - begin - 1;
  const double w = (t - times(i)) / (times(i + 1) - times(i));
  return values(i) + w * (values(i + 1) - values(i));
}

PiecewiseLinearInput gen_input(std::uint64_t stream_seed, int n_ctrl, double lo,
                               double hi, double horizon, bool ramp) {
  if (!(lo < hi)) throw InputError("input range needs lo < hi");
  if (n_ctrl < 2) throw InputError("input needs at least 2 control points");
  SplitMix64 rng(stream_seed);
  PiecewiseLinearInput in;
  in.times.resize(n_ctrl);
  in.values.resize(n_ctrl);
  for (int i = 0; i < n_ctrl; ++i) {
    in.times(i) = horizon * static_cast<double>(i) / (n_ctrl - 1);
    in.values(i) = rng.uniform(lo, hi);
  }
  if (ramp) {
    in.values(0) = lo;
    in.values(1) = hi;
  }
  return in;
}

LookupMap build_toy1_map() {
  const int n = 90;
  VectorXd bp(n), values(n);
  for (int k = 1; k <= n; ++k) {
    const double e = static_cast<double>(k) / 10.0;
    bp(k - 1) = e;
    values(k - 1) = 0.01 * std::round(100.0 / e);
  }
  return LookupMap({GridAxis(bp)}, values, Scheme::Multilinear);
}

std::vector<FaultEdit> toy1_default_fault() {
  return {FaultEdit{EntryIndex::of({19}), FaultEdit::Kind::Set, 0.8}};
}

TraceRun simulate_toy1(const PiecewiseLinearInput& input, const LookupMap& map,
                       double dt, double horizon, std::string id) {
  if (map.dims() != 1) throw InputError("toy1 needs a 1D map");
  if (dt <= 0) throw InputError("dt must be positive");
  TraceRun run;
  run.id = std::move(id);
  if (horizon <= 0) return run;
  const int steps = static_cast<int>(std::llround(horizon / dt));
  VectorXd times(steps + 1), y1(steps + 1), y2(steps + 1);
  double acc = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double t = k * dt;
    const double u = input.at(t);
    VectorXd point(1);
    point(0) = u;
    QueryResult q = interpolate(map, point);
    run.queries.push_back(QueryRecord{k + 1, q.point, std::move(q.depends)});
    times(k) = t;
    y1(k) = u * q.value;
    if (k >= 1) acc += dt * y1(k);
    y2(k) = acc;
  }
  run.signals["y1"] = TimeSeries{times, y1};
  run.signals["y2"] = TimeSeries{times, y2};
  return run;
}

LookupMap build_toy2_map() {
  const int n = 41;
  VectorXd bp(n);
  for (int i = 0; i < n; ++i) bp(i) = -10.0 + 0.5 * i;
  VectorXd values(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      values(i * n + j) = -2.0 * bp(i) * bp(j) * bp(j);
  return LookupMap({GridAxis(bp), GridAxis(bp)}, values, Scheme::Multilinear);
}

std::vector<FaultEdit> toy2_default_fault() {
  std::vector<FaultEdit> edits;
  // x1 in [-10,-8] -> indices 0..4; x2 in [7.5,10] -> indices 35..40.
  for (int i = 0; i <= 4; ++i)
    for (int j = 35; j <= 40; ++j)
      edits.push_back(FaultEdit{EntryIndex::of({i, j}), FaultEdit::Kind::Scale, -2.0});
  return edits;
}

namespace {

// A state an order of magnitude beyond the table's calibrated envelope has
// left the regime the feedforward knows anything about; integrating further
// only walks the trajectory back through regions the controller never meant
// to visit. Treat it as diverged there.
constexpr double kDivergenceLimit = 100.0;

struct Deriv {
  double dx1, dx2;
};

Deriv toy2_rhs(double x1, double x2, double u) {
  return {-3.0 * x1 + 2.0 * x1 * x2 * x2 + u, -x2 * x2 * x2 - x2};
}

}  // namespace

TraceRun simulate_toy2(double x1_0, double x2_0, const LookupMap& map,
                       double dt, double horizon, std::string id) {
  if (map.dims() != 2) throw InputError("toy2 needs a 2D map");
  if (dt <= 0) throw InputError("dt must be positive");
  TraceRun run;
  run.id = std::move(id);
  if (horizon <= 0) return run;
  const int steps = static_cast<int>(std::llround(horizon / dt));
  VectorXd times(steps + 1), x1s(steps + 1), x2s(steps + 1);
  double x1 = x1_0, x2 = x2_0;
  times(0) = 0.0;
  x1s(0) = x1;
  x2s(0) = x2;
  const GridAxis& ax1 = map.axis(0);
  const GridAxis& ax2 = map.axis(1);
  int k = 0;
  for (; k < steps; ++k) {
    VectorXd point(2);
    point(0) = x1;
    point(1) = x2;
    QueryResult q = interpolate(map, point);
    // The controller clamps the table input to the calibrated envelope, as
    // embedded lookup blocks do by default; the log keeps the raw requested
    // point, whose read set matches the boundary cell either way.
    double u = q.value;
    if (x1 < ax1[0] || x1 > ax1[ax1.size() - 1] || x2 < ax2[0] ||
        x2 > ax2[ax2.size() - 1]) {
      VectorXd clamped(2);
      clamped(0) = std::clamp(x1, ax1[0], ax1[ax1.size() - 1]);
      clamped(1) = std::clamp(x2, ax2[0], ax2[ax2.size() - 1]);
      u = interpolate(map, clamped).value;
    }
    run.queries.push_back(QueryRecord{k + 1, q.point, std::move(q.depends)});

    const Deriv k1 = toy2_rhs(x1, x2, u);
    const Deriv k2 = toy2_rhs(x1 + 0.5 * dt * k1.dx1, x2 + 0.5 * dt * k1.dx2, u);
    const Deriv k3 = toy2_rhs(x1 + 0.5 * dt * k2.dx1, x2 + 0.5 * dt * k2.dx2, u);
    const Deriv k4 = toy2_rhs(x1 + dt * k3.dx1, x2 + dt * k3.dx2, u);
    x1 += dt / 6.0 * (k1.dx1 + 2.0 * k2.dx1 + 2.0 * k3.dx1 + k4.dx1);
    x2 += dt / 6.0 * (k1.dx2 + 2.0 * k2.dx2 + 2.0 * k3.dx2 + k4.dx2);
    times(k + 1) = (k + 1) * dt;
    if (!std::isfinite(x1) || !std::isfinite(x2) ||
        std::fabs(x1) > kDivergenceLimit || std::fabs(x2) > kDivergenceLimit) {
      run.diverged = true;
      x1 = std::isfinite(x1) ? std::clamp(x1, -kDivergenceLimit, kDivergenceLimit)
                             : (x1 > 0 || std::isnan(x1) ? kDivergenceLimit
                                                         : -kDivergenceLimit);
      x2 = std::isfinite(x2) ? std::clamp(x2, -kDivergenceLimit, kDivergenceLimit)
                             : (x2 > 0 || std::isnan(x2) ? kDivergenceLimit
                                                         : -kDivergenceLimit);
      x1s(k + 1) = x1;
      x2s(k + 1) = x2;
      ++k;
      break;
    }
    x1s(k + 1) = x1;
    x2s(k + 1) = x2;
  }
  // A diverged run holds the clamped state to the horizon without further
  // table queries.
  for (; k < steps; ++k) {
    times(k + 1) = (k + 1) * dt;
    x1s(k + 1) = x1;
    x2s(k + 1) = x2;
  }
  run.signals["x1"] = TimeSeries{times, x1s};
  run.signals["x2"] = TimeSeries{times, x2s};
  return run;
}

void score_runs(std::vector<TraceRun>& runs, const stl::Formula& formula,
                const stl::EvalOptions& opts) {
  const std::vector<std::string> needed = formula.channels();
  for (TraceRun& run : runs) {
    stl::Signal sig;
    for (const std::string& ch : needed)
      if (!run.signals.count(ch))
        throw DataError("run '" + run.id + "' is missing channel '" + ch + "'");
    if (run.signals.empty())
      throw DataError("run '" + run.id + "' has no signals to score");
    // Shared time base when all series agree; otherwise merge the knots and
    // interpolate each channel onto the union.
    bool shared = true;
    const TimeSeries& first = run.signals.begin()->second;
    for (const auto& [name, ts] : run.signals)
      if (ts.t.size() != first.t.size() || (ts.t.array() != first.t.array()).any())
        shared = false;
    if (shared) {
      sig.times = first.t;
      for (const auto& [name, ts] : run.signals) sig.channels[name] = ts.v;
    } else {
      std::vector<double> knots;
      for (const auto& [name, ts] : run.signals)
        for (Eigen::Index i = 0; i < ts.t.size(); ++i) knots.push_back(ts.t(i));
      std::sort(knots.begin(), knots.end());
      knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
      sig.times = Eigen::Map<const VectorXd>(knots.data(),
                                             static_cast<Eigen::Index>(knots.size()));
      for (const auto& [name, ts] : run.signals) {
        stl::Signal single;
        single.times = ts.t;
        single.channels[name] = ts.v;
        VectorXd v(sig.times.size());
        for (Eigen::Index i = 0; i < sig.times.size(); ++i)
          v(i) = single.value(name, sig.times(i));
        sig.channels[name] = v;
      }
    }
    run.score = stl::robustness(formula, sig, 0.0, opts);
  }
}

ExperimentConfig toy1_config() { return ExperimentConfig{}; }

ExperimentConfig toy2_config() {
  ExperimentConfig cfg;
  cfg.model = "toy2";
  cfg.dt = 0.01;
  cfg.horizon = 2.0;
  cfg.ramp = RampPolicy::None;
  return cfg;
}

namespace {

std::string run_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run-%05d", i);
  return buf;
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  if (cfg.n_runs <= 0) throw InputError("experiment needs n_runs >= 1");
  if (cfg.model == "toy1") {
    LookupMap base = build_toy1_map();
    LookupMap map = cfg.fault.empty() ? base : seed_fault(base, cfg.fault);
    std::vector<TraceRun> runs;
    runs.reserve(static_cast<size_t>(cfg.n_runs));
    for (int i = 0; i < cfg.n_runs; ++i) {
      const bool ramp = cfg.ramp == RampPolicy::All ||
                        (cfg.ramp == RampPolicy::First && i == 0);
      SplitMix64 stream = run_stream(cfg.seed, static_cast<std::uint64_t>(i));
      PiecewiseLinearInput in = gen_input(stream.next(), cfg.n_ctrl,
                                          cfg.input_lo, cfg.input_hi,
                                          cfg.horizon, ramp);
      runs.push_back(simulate_toy1(in, map, cfg.dt, cfg.horizon, run_name(i)));
    }
    return {std::move(map), std::move(runs)};
  }
  if (cfg.model == "toy2") {
    LookupMap base = build_toy2_map();
    LookupMap map = cfg.fault.empty() ? base : seed_fault(base, cfg.fault);
    std::vector<TraceRun> runs;
    runs.reserve(static_cast<size_t>(cfg.n_runs));
    for (int i = 0; i < cfg.n_runs; ++i) {
      SplitMix64 stream = run_stream(cfg.seed, static_cast<std::uint64_t>(i));
      const double x1_0 = stream.uniform(-10.0, 0.0);
      const double x2_0 = stream.uniform(0.0, 10.0);
      runs.push_back(simulate_toy2(x1_0, x2_0, map, cfg.dt, cfg.horizon, run_name(i)));
    }
    return {std::move(map), std::move(runs)};
  }
  throw InputError("run_experiment handles models toy1 and toy2; load "
                   "external traces through the trace reader instead");
}

LookupMap param_grid_map(const ParamGridSpec& spec) {
  if (spec.intervals.empty() || spec.intervals.size() != spec.counts.size())
    throw InputError("parameter grid needs matching intervals and counts");
  std::vector<GridAxis> axes;
  std::int64_t total = 1;
  for (size_t k = 0; k < spec.intervals.size(); ++k) {
    const auto [lo, hi] = spec.intervals[k];
    const int n = spec.counts[k];
    if (n < 2) throw InputError("parameter grid counts must be >= 2");
    if (!(lo < hi)) throw InputError("parameter grid interval needs lo < hi");
    VectorXd bp(n);
    for (int i = 0; i < n; ++i)
      bp(i) = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    axes.emplace_back(bp);
    total *= n;
  }
  return LookupMap(std::move(axes), VectorXd::Zero(total), Scheme::Multilinear);
}

RankingResult param_grid_rank(const ParamGridSpec& spec,
                              const std::string& heuristic,
                              const AffectConfig& cfg, double gamma,
                              bool negate_scores) {
  if (spec.samples.empty()) throw InputError("parameter grid needs samples");
  LookupMap map = param_grid_map(spec);
  std::vector<TraceRun> runs;
  runs.reserve(spec.samples.size());
  int i = 0;
  for (const auto& [params, score] : spec.samples) {
    if (static_cast<int>(params.size()) != map.dims())
      throw InputError("parameter sample dimension does not match the grid");
    for (int k = 0; k < map.dims(); ++k) {
      const auto [lo, hi] = spec.intervals[static_cast<size_t>(k)];
      if (params(k) < lo || params(k) > hi)
        throw InputError("parameter sample " + std::to_string(i) +
                         " lies outside the grid box");
    }
    TraceRun run;
    run.id = run_name(i++);
    QueryResult q = interpolate(map, params);
    run.queries.push_back(QueryRecord{1, q.point, std::move(q.depends)});
    run.score = negate_scores ? -score : score;
    runs.push_back(std::move(run));
  }
  return rank(map, runs, heuristic, cfg, {}, gamma);
}

ParamGridSpec refine_box(const ParamGridSpec& spec, const EntryIndex& top) {
  if (top.dims() != static_cast<int>(spec.intervals.size()))
    throw InputError("refinement point dimension does not match the grid");
  ParamGridSpec out;
  out.counts = spec.counts;
  for (size_t k = 0; k < spec.intervals.size(); ++k) {
    const auto [lo, hi] = spec.intervals[k];
    const int n = spec.counts[k];
    const double step = (hi - lo) / (n - 1);
    const double center = lo + step * top.coords[k];
    out.intervals.emplace_back(std::max(lo, center - step),
                               std::min(hi, center + step));
  }
  return out;
}

}  // namespace lutloc
