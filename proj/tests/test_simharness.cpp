#include <doctest.h>

#include <cmath>

#include "lutloc/json_io.hpp"
#include "lutloc/rng.hpp"
#include "lutloc/simharness.hpp"

using namespace lutloc;

namespace {

PiecewiseLinearInput constant_input(double value, double horizon) {
  PiecewiseLinearInput in;
  in.times.resize(2);
  in.times << 0.0, horizon;
  in.values.resize(2);
  in.values << value, value;
  return in;
}

}  // namespace

TEST_CASE("input generation is deterministic and respects the ramp variant") {
  const PiecewiseLinearInput a = gen_input(12345, 11, 0.09, 9.01, 30.0, false);
  const PiecewiseLinearInput b = gen_input(12345, 11, 0.09, 9.01, 30.0, false);
  CHECK((a.values.array() == b.values.array()).all());
  CHECK(a.times.size() == 11);
  CHECK(a.times(1) == doctest::Approx(3.0));
  for (int i = 0; i < 11; ++i) {
    CHECK(a.values(i) >= 0.09);
    CHECK(a.values(i) <= 9.01);
  }
  const PiecewiseLinearInput ramp = gen_input(12345, 11, 0.09, 9.01, 30.0, true);
  CHECK(ramp.values(0) == 0.09);
  CHECK(ramp.values(1) == 9.01);
  CHECK(ramp.at(0.0) == 0.09);
  CHECK(ramp.at(3.0) == 9.01);
  CHECK(ramp.at(1.5) == doctest::Approx(0.5 * (0.09 + 9.01)));
  CHECK_THROWS_AS(gen_input(1, 11, 2.0, 1.0, 30.0), InputError);
}

TEST_CASE("toy1 simulation: query log matches the step grid") {
  const LookupMap map = build_toy1_map();
  const PiecewiseLinearInput in = gen_input(7, 11, 0.09, 9.01, 30.0, false);
  const TraceRun run = simulate_toy1(in, map, 0.1, 30.0, "r0");
  CHECK(run.queries.size() == 301);
  CHECK(run.signals.at("y1").t.size() == 301);
  for (size_t k = 0; k < run.queries.size(); k += 29) {
    const QueryRecord& q = run.queries[k];
    CHECK(q.seq == static_cast<int>(k) + 1);
    CHECK(q.point(0) == in.at(static_cast<double>(k) * 0.1));
    CHECK(q.depends == depends(map, q.point));
  }
  // y2 is the running rectangle sum of y1.
  const auto& y1 = run.signals.at("y1").v;
  const auto& y2 = run.signals.at("y2").v;
  CHECK(y2(0) == 0.0);
  double acc = 0.0;
  for (int k = 1; k <= 300; ++k) acc += 0.1 * y1(k);
  CHECK(y2(300) == doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("toy1 soundness: unfaulted plant satisfies the stock requirement") {
  const LookupMap map = build_toy1_map();
  const stl::Formula f1 = stl::parse_formula("alw[10,30](abs(y1 - 1) < 0.4)");
  for (int i = 0; i < 20; ++i) {
    SplitMix64 stream = run_stream(99, static_cast<std::uint64_t>(i));
    const PiecewiseLinearInput in =
        gen_input(stream.next(), 11, 0.09, 9.01, 30.0, i == 0);
    std::vector<TraceRun> runs = {simulate_toy1(in, map, 0.1, 30.0, "r")};
    const auto& y1 = runs[0].signals.at("y1").v;
    CHECK(y1.maxCoeff() < 1.4);
    score_runs(runs, f1);
    CHECK(runs[0].score.value() > 0.0);
  }
}

TEST_CASE("toy1 with the seeded defect: constant u=2 drives y1 to 1.6") {
  const LookupMap faulted = seed_fault(build_toy1_map(), toy1_default_fault());
  std::vector<TraceRun> runs = {
      simulate_toy1(constant_input(2.0, 30.0), faulted, 0.1, 30.0, "r")};
  const auto& y1 = runs[0].signals.at("y1").v;
  for (int k = 0; k < y1.size(); k += 37)
    CHECK(y1(k) == doctest::Approx(1.6).epsilon(1e-12));
  score_runs(runs, stl::parse_formula("alw[10,30](abs(y1 - 1) < 0.4)"));
  CHECK(runs[0].score.value() == doctest::Approx(-0.2).epsilon(1e-9));
}

TEST_CASE("zero-length horizon produces an empty run") {
  const LookupMap map = build_toy1_map();
  const TraceRun run = simulate_toy1(constant_input(1.0, 1.0), map, 0.1, 0.0);
  CHECK(run.queries.empty());
  CHECK(run.signals.empty());
}

TEST_CASE("toy2: the x1=0 axis is invariant under the unfaulted map") {
  const LookupMap map = build_toy2_map();
  const TraceRun run = simulate_toy2(0.0, 7.5, map, 0.01, 2.0, "r");
  const auto& x1 = run.signals.at("x1").v;
  for (int k = 0; k < x1.size(); k += 17) CHECK(x1(k) == 0.0);
  const auto& x2 = run.signals.at("x2").v;
  CHECK(std::fabs(x2(x2.size() - 1)) < 7.5);
}

TEST_CASE("toy2 energy decays along unfaulted trajectories") {
  const LookupMap map = build_toy2_map();
  SplitMix64 rng(31337);
  std::vector<std::pair<double, double>> inits = {
      {-10.0, 10.0}, {-9.5, 9.9}, {-5.0, 5.0}, {-1.0, 0.5}, {-8.0, 2.0}, {0.0, 10.0}};
  for (int i = 0; i < 4; ++i)
    inits.emplace_back(rng.uniform(-10.0, 0.0), rng.uniform(0.0, 10.0));
  for (const auto& [x1_0, x2_0] : inits) {
    const TraceRun run = simulate_toy2(x1_0, x2_0, map, 1e-3, 2.0, "r");
    CHECK_FALSE(run.diverged);
    const auto& x1 = run.signals.at("x1").v;
    const auto& x2 = run.signals.at("x2").v;
    for (int k = 1; k < x1.size(); ++k) {
      const double v_prev = x1(k - 1) * x1(k - 1) + x2(k - 1) * x2(k - 1);
      const double v_now = x1(k) * x1(k) + x2(k) * x2(k);
      CHECK(v_now <= v_prev + 1e-6);
    }
  }
}

TEST_CASE("toy2 divergence guard truncates, clamps, and stops logging") {
  // A constant huge feedforward value makes the first state run away.
  const LookupMap base = build_toy2_map();
  const LookupMap runaway(base.axes(), VectorXd::Constant(base.size(), 1e7),
                          Scheme::Multilinear);
  const TraceRun run = simulate_toy2(-5.0, 3.0, runaway, 0.01, 2.0, "r");
  CHECK(run.diverged);
  CHECK(run.queries.size() < 200);
  const auto& x1 = run.signals.at("x1").v;
  CHECK(x1.size() == 201);  // clamped and held to the horizon
  CHECK(std::fabs(x1(x1.size() - 1)) == 100.0);
  std::vector<TraceRun> runs = {run};
  score_runs(runs, stl::parse_formula("alw[0.8,2](abs(x1) < 0.8)"));
  CHECK(runs[0].score.value() < -90.0);
}

TEST_CASE("toy2 with the seeded bug region: affected starts fail the spec") {
  const LookupMap faulted = seed_fault(build_toy2_map(), toy2_default_fault());
  const stl::Formula spec = stl::parse_formula("alw[0.8,2](abs(x1) < 0.8)");
  std::vector<TraceRun> runs = {simulate_toy2(-9.0, 9.0, faulted, 0.01, 2.0, "bug"),
                                simulate_toy2(-4.0, 3.0, faulted, 0.01, 2.0, "ok")};
  score_runs(runs, spec);
  CHECK(runs[0].score.value() < 0.0);
  CHECK(runs[1].score.value() > 0.0);
}

TEST_CASE("scoring matches the sign of boolean satisfaction") {
  const LookupMap map = build_toy1_map();
  const stl::Formula f = stl::parse_formula("alw[0,30](y2 <= 30)");
  SplitMix64 stream = run_stream(5, 0);
  std::vector<TraceRun> runs = {simulate_toy1(
      gen_input(stream.next(), 11, 0.09, 9.01, 30.0, false), map, 0.1, 30.0, "r")};
  score_runs(runs, f);
  stl::Signal sig;
  sig.times = runs[0].signals.at("y2").t;
  sig.channels["y2"] = runs[0].signals.at("y2").v;
  CHECK((runs[0].score.value() >= 0) == stl::eval_bool(f, sig, 0.0));
}

TEST_CASE("missing channels are reported with run and channel names") {
  std::vector<TraceRun> runs(1);
  runs[0].id = "run-00003";
  VectorXd t(2), v(2);
  t << 0.0, 1.0;
  v << 0.0, 0.0;
  runs[0].signals["other"] = TimeSeries{t, v};
  try {
    score_runs(runs, stl::parse_formula("alw[0,1](y1 > 0)"));
    CHECK(false);
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("run-00003") != std::string::npos);
    CHECK(msg.find("y1") != std::string::npos);
  }
}

TEST_CASE("identical experiment configs replay to identical traces") {
  ExperimentConfig cfg;
  cfg.n_runs = 5;
  cfg.seed = 2024;
  cfg.fault = toy1_default_fault();
  const ExperimentOutput a = run_experiment(cfg);
  const ExperimentOutput b = run_experiment(cfg);
  CHECK(traces_to_jsonl(a.runs) == traces_to_jsonl(b.runs));
  ExperimentConfig other = cfg;
  other.seed = 2025;
  CHECK(traces_to_jsonl(run_experiment(other).runs) != traces_to_jsonl(a.runs));

  ExperimentConfig toy2 = toy2_config();
  toy2.n_runs = 3;
  toy2.seed = 11;
  toy2.fault = toy2_default_fault();
  CHECK(traces_to_jsonl(run_experiment(toy2).runs) ==
        traces_to_jsonl(run_experiment(toy2).runs));
}

TEST_CASE("parameter grid: concentrated failures rank their cell first") {
  ParamGridSpec spec;
  spec.intervals = {{0.0, 10.0}, {0.0, 10.0}};
  spec.counts = {6, 6};
  // All samples cluster around grid point (2,3) = (4,6); all failing.
  SplitMix64 rng(64);
  for (int i = 0; i < 12; ++i) {
    VectorXd p(2);
    p << 4.0 + rng.uniform(-0.4, 0.4), 6.0 + rng.uniform(-0.4, 0.4);
    spec.samples.emplace_back(p, -1.0 - rng.uniform());
  }
  AffectConfig cfg;
  const RankingResult r = param_grid_rank(spec, "dstar", cfg);
  const EntryIndex top = r.entry_of(r.order.front());
  CHECK(top == EntryIndex::of({2, 3}));
}

TEST_CASE("parameter grid: negated scores localize the best region") {
  // Smooth positive score peaking at (4.1, 5.9, 2.2); exhaustive evaluation
  // over the grid puts the best grid point at (4, 6, 2).
  ParamGridSpec spec;
  spec.intervals = {{0.0, 10.0}, {0.0, 10.0}, {0.0, 4.0}};
  spec.counts = {6, 6, 5};
  auto score = [](const VectorXd& p) {
    const double dx = p(0) - 4.1, dy = p(1) - 5.9, dz = p(2) - 2.2;
    return 10.0 - (dx * dx + dy * dy + dz * dz);
  };
  SplitMix64 rng(99);
  for (int i = 0; i < 600; ++i) {
    VectorXd p(3);
    p << rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0), rng.uniform(0.0, 4.0);
    spec.samples.emplace_back(p, score(p));
  }
  AffectConfig cfg;
  cfg.mode = AffectMode::Metric;
  cfg.lambda = 0.5;
  cfg.radius = 2.0;
  const RankingResult r = param_grid_rank(spec, "dstar", cfg, 2.0, true);
  const EntryIndex top = r.entry_of(r.order.front());
  // Exhaustive evaluation of the score over the grid gives the optimum cell.
  const LookupMap grid = param_grid_map(spec);
  EntryIndex best;
  double best_score = -1e300;
  for (std::int64_t f = 0; f < grid.size(); ++f) {
    const EntryIndex e = grid.entry_at(f);
    const double s = score(grid.entry_point(e));
    if (s > best_score) {
      best_score = s;
      best = e;
    }
  }
  CHECK(top == best);
}

TEST_CASE("parameter grid rejects samples outside the box") {
  ParamGridSpec spec;
  spec.intervals = {{0.0, 1.0}};
  spec.counts = {3};
  VectorXd p(1);
  p << 2.0;
  spec.samples.emplace_back(p, -1.0);
  CHECK_THROWS_AS(param_grid_rank(spec, "dstar", {}), InputError);
}

TEST_CASE("box refinement tightens one spacing around the top point") {
  ParamGridSpec spec;
  spec.intervals = {{100.0, 500.0}, {8.0, 600.0}, {0.0, 3.0}};
  spec.counts = {21, 21, 21};
  const ParamGridSpec next = refine_box(spec, EntryIndex::of({15, 17, 1}));
  CHECK(next.intervals[0].first == doctest::Approx(380.0));
  CHECK(next.intervals[0].second == doctest::Approx(420.0));
  CHECK(next.intervals[1].first == doctest::Approx(481.6));
  CHECK(next.intervals[1].second == doctest::Approx(540.8));
  CHECK(next.intervals[2].first == doctest::Approx(0.0));
  CHECK(next.intervals[2].second == doctest::Approx(0.3));
  CHECK(next.samples.empty());
}
