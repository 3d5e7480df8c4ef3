#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lutloc/rankers.hpp"
#include "lutloc/stl.hpp"
#include "lutloc/traces.hpp"

namespace lutloc {

/// Piecewise-linear excitation: equally spaced control points over [0, T],
/// linearly interpolated in between.
struct PiecewiseLinearInput {
  VectorXd times;
  VectorXd values;
  double at(double t) const;
};

/// Deterministic input generation from a SplitMix64 stream; the ramp variant
/// pins the first segment to rise lo -> hi (full-range sweep) before the
/// remaining random controls.
PiecewiseLinearInput gen_input(std::uint64_t stream_seed, int n_ctrl, double lo,
                               double hi, double horizon, bool ramp = false);

/// 1D demo plant "toy1": a feedforward gain table approximating 1/u on the
/// axis {0.1, 0.2, ..., 9.0} with two-decimal rounding, multilinear scheme.
LookupMap build_toy1_map();

/// The stock seeded defect for toy1: the entry at u=2.0 set to 0.8.
std::vector<FaultEdit> toy1_default_fault();

/// Fixed-step simulation of toy1: at each step t=k*dt the table is queried at
/// u(t) (and logged), y1 = u * table(u), y2 accumulates dt * y1. A horizon
/// <= 0 produces an empty run.
TraceRun simulate_toy1(const PiecewiseLinearInput& input, const LookupMap& map,
                       double dt = 0.1, double horizon = 30.0,
                       std::string id = "run");

/// 2D demo plant "toy2": feedforward table u = -2*x1*x2^2 on the grid
/// {-10, -9.5, ..., 10}^2, multilinear scheme.
LookupMap build_toy2_map();

/// The stock seeded defect for toy2: the 30 entries with x1 in [-10,-8] and
/// x2 in [7.5,10] multiplied by -2.
std::vector<FaultEdit> toy2_default_fault();

/// Classical fixed-step RK4 integration of
///   x1' = -3 x1 + 2 x1 x2^2 + u,  x2' = -x2^3 - x2,
/// with u looked up (and logged) once per step at the step-start state and
/// held constant within the step. A state an order of magnitude beyond the
/// table envelope (|x| > 100) counts as diverged: the run is truncated,
/// marked, and the signals hold the clamped state to the horizon.
TraceRun simulate_toy2(double x1_0, double x2_0, const LookupMap& map,
                       double dt = 0.01, double horizon = 2.0,
                       std::string id = "run");

/// Score every run with the robustness of the formula at t=0 over the run's
/// signals. Missing channels raise an error naming the run and channel.
void score_runs(std::vector<TraceRun>& runs, const stl::Formula& formula,
                const stl::EvalOptions& opts = {});

enum class RampPolicy { None, First, All };

/// One reproducible experiment. Identical configs (seed included) replay to
/// bit-identical traces.
struct ExperimentConfig {
  std::string model = "toy1";  // toy1 | toy2 | external-trace
  int n_runs = 100;
  std::uint64_t seed = 1;
  double dt = 0.1;
  double horizon = 30.0;
  std::vector<FaultEdit> fault;
  std::string formula_file;  // optional; scoring is a separate step
  RampPolicy ramp = RampPolicy::First;
  int n_ctrl = 11;
  double input_lo = 0.09;
  double input_hi = 9.01;
  std::string traces_file;  // external-trace source
};

ExperimentConfig toy1_config();
ExperimentConfig toy2_config();

struct ExperimentOutput {
  LookupMap map;
  std::vector<TraceRun> runs;
};

ExperimentOutput run_experiment(const ExperimentConfig& cfg);

/// Parameter-space localization: a box with per-dimension grid counts and
/// scored samples. Every sample becomes a single-query run at its parameter
/// vector against a virtual map over the grid.
struct ParamGridSpec {
  std::vector<std::pair<double, double>> intervals;
  std::vector<int> counts;
  std::vector<std::pair<VectorXd, double>> samples;  // (parameters, score)
};

/// Virtual map over the grid (values are zero placeholders).
LookupMap param_grid_map(const ParamGridSpec& spec);

/// Rank the grid points. With negate_scores the sign of every sample score is
/// flipped, turning a search for desirable behavior into localization.
RankingResult param_grid_rank(const ParamGridSpec& spec,
                              const std::string& heuristic,
                              const AffectConfig& cfg, double gamma = 2.0,
                              bool negate_scores = false);

/// Sub-box around a top-ranked grid point (one grid spacing each way,
/// clipped to the original box); samples are cleared for the next round.
ParamGridSpec refine_box(const ParamGridSpec& spec, const EntryIndex& top);

}  // namespace lutloc
