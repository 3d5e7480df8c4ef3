#include "lutloc/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <limits>
#include <optional>

#include "lutloc/evalmetrics.hpp"
#include "lutloc/json_io.hpp"

namespace lutloc {

namespace {

struct AffectFlags {
  std::string mode = "basic";
  double lambda = 0.5;
  double radius = 2.0;
  bool radius_inf = false;
  std::string agg = "max";
  std::string distance = "grid-scaled";

  void attach(CLI::App* cmd) {
    cmd->add_option("--mode", mode, "Affect mode")
        ->check(CLI::IsMember({"basic", "metric", "freq-basic", "freq-metric"}));
    cmd->add_option("--lambda", lambda, "Metric decay constant in (0,1)");
    cmd->add_option("--radius", radius, "Influence radius (distance units)");
    cmd->add_flag("--radius-inf", radius_inf, "Unbounded influence radius");
    cmd->add_option("--agg", agg, "Metric aggregation over queries")
        ->check(CLI::IsMember({"max", "sum"}));
    cmd->add_option("--distance", distance, "Distance mode")
        ->check(CLI::IsMember({"index", "physical", "grid-scaled"}));
  }

  AffectConfig config() const {
    AffectConfig cfg;
    cfg.mode = affect_mode_from_string(mode);
    cfg.lambda = lambda;
    cfg.radius = radius_inf ? std::numeric_limits<double>::infinity() : radius;
    cfg.aggregation = aggregation_from_string(agg);
    cfg.distance_mode = distance_mode_from_string(distance);
    cfg.validate();
    return cfg;
  }
};

stl::Formula load_formula(const std::string& path) {
  return stl::parse_formula(read_text(path));
}

struct SimulateArgs {
  std::string config, model, fault, ramp, out = "traces.jsonl", map_out;
  int runs = 0;
  std::uint64_t seed = 0;
  double dt = 0, horizon = 0;
  bool has_runs = false, has_seed = false, has_dt = false, has_horizon = false;
};

int cmd_simulate(const SimulateArgs& a) {
  const std::string& config_path = a.config;
  const std::string& model = a.model;
  const std::string& fault_path = a.fault;
  const std::string& ramp = a.ramp;
  const std::string& out = a.out;
  const std::string& map_out = a.map_out;
  ExperimentConfig cfg;
  if (!config_path.empty()) cfg = load_experiment_config(config_path);
  else if (model == "toy2") cfg = toy2_config();
  if (!model.empty()) cfg.model = model;
  if (a.has_runs) cfg.n_runs = a.runs;
  if (a.has_seed) cfg.seed = a.seed;
  if (a.has_dt) cfg.dt = a.dt;
  if (a.has_horizon) cfg.horizon = a.horizon;
  if (!fault_path.empty()) cfg.fault = load_fault_edits(fault_path);
  if (!ramp.empty()) {
    if (ramp == "none") cfg.ramp = RampPolicy::None;
    else if (ramp == "first") cfg.ramp = RampPolicy::First;
    else if (ramp == "all") cfg.ramp = RampPolicy::All;
    else throw InputError("--ramp must be none, first, or all");
  }
  ExperimentOutput result = run_experiment(cfg);
  save_traces(result.runs, out);
  if (!map_out.empty()) save_map(result.map, map_out);
  std::cout << "simulated " << result.runs.size() << " runs -> " << out << "\n";
  return 0;
}

int cmd_score(const std::string& traces_path, const std::string& spec_path,
              bool truncate, const std::string& out) {
  std::vector<TraceRun> runs = load_traces(traces_path);
  const stl::Formula formula = load_formula(spec_path);
  stl::EvalOptions opts;
  opts.truncate = truncate;
  score_runs(runs, formula, opts);
  save_traces(runs, out);
  int failing = 0;
  for (const TraceRun& r : runs)
    if (r.score_value() < 0) ++failing;
  std::cout << "scored " << runs.size() << " runs (" << failing
            << " failing) -> " << out << "\n";
  return 0;
}

int cmd_rank(const std::string& map_path, const std::string& traces_path,
             const std::string& heuristic, double gamma,
             const AffectFlags& affect, double neg_shift, double pos_shift,
             const std::string& out) {
  const LookupMap map = load_map(map_path);
  const std::vector<TraceRun> runs = load_traces(traces_path);
  ScoreShift shift{neg_shift, pos_shift};
  const RankingResult ranking =
      rank(map, runs, heuristic, affect.config(), shift, gamma);
  save_ranking(ranking, out);
  std::cout << "ranked " << map.size() << " entries -> " << out << "\n";
  return 0;
}

int cmd_spectra(const std::string& map_path, const std::string& traces_path,
                double radius, const std::string& distance,
                const std::string& out) {
  const LookupMap map = load_map(map_path);
  const std::vector<TraceRun> runs = load_traces(traces_path);
  const SpectraResult result = union_suspicious(
      map, runs, radius, distance_mode_from_string(distance));
  save_spectra(result, out);
  std::cout << "suspicious entries: " << result.sus_u.size()
            << " (union), " << result.sus_iu.size()
            << " (intersection-union) -> " << out << "\n";
  return 0;
}

int cmd_exam(const std::string& ranking_path, const std::string& buggy_path,
             const std::string& tie) {
  const LoadedRanking loaded = load_ranking(ranking_path);
  const BuggySet buggy = load_buggy(buggy_path);
  if (loaded.entries.empty()) throw DataError("ranking file has no entries");
  // Rebuild a minimal RankingResult view for the scoring helpers.
  RankingResult ranking;
  const int d = loaded.entries.front().first.dims();
  std::vector<int> shape(static_cast<size_t>(d), 0);
  for (const auto& [e, s] : loaded.entries)
    for (int k = 0; k < d; ++k)
      shape[static_cast<size_t>(k)] =
          std::max(shape[static_cast<size_t>(k)], e.coords[static_cast<size_t>(k)] + 1);
  ranking.shape = shape;
  std::int64_t total = 1;
  for (int s : shape) total *= s;
  if (total != static_cast<std::int64_t>(loaded.entries.size()))
    throw DataError("ranking file does not cover a full grid");
  ranking.scores.assign(static_cast<size_t>(total), 0.0);
  for (const auto& [e, s] : loaded.entries) {
    std::int64_t f = 0;
    for (int k = 0; k < d; ++k) f = f * shape[static_cast<size_t>(k)] + e.coords[static_cast<size_t>(k)];
    ranking.order.push_back(f);
    ranking.scores[static_cast<size_t>(f)] = s;
  }
  TieRule rule = TieRule::AsRanked;
  if (tie == "worst") rule = TieRule::Worst;
  else if (tie == "best") rule = TieRule::Best;
  const int abs = abs_exam_score(ranking, buggy, rule);
  const double pct = exam_score(ranking, buggy, rule);
  std::cout << "absEXAM=" << abs << " EXAM=" << pct << "%\n";
  return 0;
}

int cmd_heatmap(const std::string& ranking_path, const std::string& map_path,
                const std::string& traces_path, const std::string& out,
                const std::string& svg) {
  const LookupMap map = load_map(map_path);
  const std::vector<TraceRun> runs = load_traces(traces_path);
  const LoadedRanking loaded = load_ranking(ranking_path);
  RankingResult ranking;
  for (int k = 0; k < map.dims(); ++k) ranking.shape.push_back(map.axis(k).size());
  ranking.scores.assign(static_cast<size_t>(map.size()), 0.0);
  for (const auto& [e, s] : loaded.entries) {
    ranking.order.push_back(map.flat_index(e));
    ranking.scores[static_cast<size_t>(map.flat_index(e))] = s;
  }
  if (static_cast<std::int64_t>(ranking.order.size()) != map.size())
    throw DataError("ranking file does not cover the map");
  std::optional<std::string> svg_out;
  if (!svg.empty()) svg_out = svg;
  emit_heatmap(ranking, runs, map, out, svg_out);
  std::cout << "heat-map -> " << out << "\n";
  return 0;
}

int cmd_paramgrid(const std::string& samples_path, const std::string& heuristic,
                  double gamma, const AffectFlags& affect, bool negate,
                  bool refine, const std::string& out) {
  const ParamGridSpec spec = load_param_grid(samples_path);
  const RankingResult ranking =
      param_grid_rank(spec, heuristic, affect.config(), gamma, negate);
  save_ranking(ranking, out);
  std::cout << "ranked " << ranking.order.size() << " grid points -> " << out
            << "\n";
  if (refine && !ranking.order.empty()) {
    const EntryIndex top = ranking.entry_of(ranking.order.front());
    const ParamGridSpec next = refine_box(spec, top);
    std::cout << "top point " << top.to_string() << "; refined box:";
    for (const auto& [lo, hi] : next.intervals)
      std::cout << " [" << lo << "," << hi << "]";
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Statistical fault localization for look-up-table-parameterized "
               "control software"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a demo plant and emit traces");
  SimulateArgs sim_args;
  sim->add_option("--config", sim_args.config, "Experiment config JSON");
  sim->add_option("--model", sim_args.model, "toy1 or toy2")
      ->check(CLI::IsMember({"toy1", "toy2"}));
  auto* opt_runs = sim->add_option("--runs", sim_args.runs, "Number of runs");
  auto* opt_seed = sim->add_option("--seed", sim_args.seed, "Experiment seed");
  auto* opt_dt = sim->add_option("--dt", sim_args.dt, "Simulation step (s)");
  auto* opt_horizon =
      sim->add_option("--horizon", sim_args.horizon, "Simulation horizon (s)");
  sim->add_option("--fault", sim_args.fault, "Fault edits JSON file");
  sim->add_option("--ramp", sim_args.ramp, "Ramp policy: none|first|all")
      ->check(CLI::IsMember({"none", "first", "all"}));
  sim->add_option("--out", sim_args.out, "Output trace file (JSON lines)");
  sim->add_option("--map-out", sim_args.map_out, "Also write the (faulted) map");

  // score
  auto* score = app.add_subcommand("score", "Score traces with a formula");
  std::string score_traces, score_spec, score_out = "scored.jsonl";
  bool score_truncate = false;
  score->add_option("--traces", score_traces, "Trace file")->required();
  score->add_option("--spec", score_spec, "Formula text file")->required();
  score->add_flag("--truncate", score_truncate,
                  "Clip bounded windows to the available signal suffix");
  score->add_option("--out", score_out, "Output trace file");

  // rank
  auto* rankc = app.add_subcommand("rank", "Rank map entries by suspiciousness");
  std::string rank_map, rank_traces, rank_heuristic = "dstar",
              rank_out = "ranking.json";
  double rank_gamma = 2.0, rank_neg = 0.0, rank_pos = 0.0;
  AffectFlags rank_affect;
  rankc->add_option("--map", rank_map, "Map JSON file")->required();
  rankc->add_option("--traces", rank_traces, "Scored trace file")->required();
  rankc->add_option("--heuristic", rank_heuristic, "Similarity coefficient")
      ->check(CLI::IsMember({"tarantula", "kulczynski", "dstar"}));
  rankc->add_option("--gamma", rank_gamma, "dstar exponent (>= 1)");
  rank_affect.attach(rankc);
  rankc->add_option("--shift-neg", rank_neg, "Shift added to negative scores");
  rankc->add_option("--shift-pos", rank_pos, "Shift added to non-negative scores");
  rankc->add_option("--out", rank_out, "Output ranking JSON");

  // spectra
  auto* spec = app.add_subcommand("spectra", "Union / intersection-union sets");
  std::string spectra_map, spectra_traces, spectra_distance = "grid-scaled",
              spectra_out = "spectra.json";
  double spectra_radius = 2.0;
  spec->add_option("--map", spectra_map, "Map JSON file")->required();
  spec->add_option("--traces", spectra_traces, "Scored trace file")->required();
  spec->add_option("--radius", spectra_radius, "Separation radius");
  spec->add_option("--distance", spectra_distance, "Distance mode")
      ->check(CLI::IsMember({"index", "physical", "grid-scaled"}));
  spec->add_option("--out", spectra_out, "Output report JSON");

  // exam
  auto* exam = app.add_subcommand("exam", "Examination effort of a ranking");
  std::string exam_ranking, exam_buggy, exam_tie = "ranked";
  exam->add_option("--ranking", exam_ranking, "Ranking JSON file")->required();
  exam->add_option("--buggy", exam_buggy, "Buggy set JSON file")->required();
  exam->add_option("--tie", exam_tie, "Tie handling: ranked|worst|best")
      ->check(CLI::IsMember({"ranked", "worst", "best"}));

  // heatmap
  auto* heat = app.add_subcommand("heatmap", "Emit heat-map CSV (and SVG)");
  std::string heat_ranking, heat_map, heat_traces, heat_out = "heatmap.csv",
              heat_svg;
  heat->add_option("--ranking", heat_ranking, "Ranking JSON file")->required();
  heat->add_option("--map", heat_map, "Map JSON file")->required();
  heat->add_option("--traces", heat_traces, "Trace file (for coverage)")
      ->required();
  heat->add_option("--out", heat_out, "Output CSV path");
  heat->add_option("--svg", heat_svg, "Optional SVG path");

  // paramgrid
  auto* pg = app.add_subcommand("paramgrid", "Rank parameter-grid cells");
  std::string pg_samples, pg_heuristic = "dstar", pg_out = "paramgrid.json";
  double pg_gamma = 2.0;
  bool pg_negate = false, pg_refine = false;
  AffectFlags pg_affect;
  pg->add_option("--samples", pg_samples, "Grid spec + samples JSON")->required();
  pg->add_option("--heuristic", pg_heuristic, "Similarity coefficient")
      ->check(CLI::IsMember({"tarantula", "kulczynski", "dstar"}));
  pg->add_option("--gamma", pg_gamma, "dstar exponent");
  pg_affect.attach(pg);
  pg->add_flag("--negate", pg_negate,
               "Negate sample scores (search for desirable behavior)");
  pg->add_flag("--refine", pg_refine, "Print the refined sub-box");
  pg->add_option("--out", pg_out, "Output ranking JSON");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help();
      return 0;
    }
    std::cerr << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (sim->parsed()) {
      sim_args.has_runs = opt_runs->count() > 0;
      sim_args.has_seed = opt_seed->count() > 0;
      sim_args.has_dt = opt_dt->count() > 0;
      sim_args.has_horizon = opt_horizon->count() > 0;
      return cmd_simulate(sim_args);
    }
    if (score->parsed())
      return cmd_score(score_traces, score_spec, score_truncate, score_out);
    if (rankc->parsed())
      return cmd_rank(rank_map, rank_traces, rank_heuristic, rank_gamma,
                      rank_affect, rank_neg, rank_pos, rank_out);
    if (spec->parsed())
      return cmd_spectra(spectra_map, spectra_traces, spectra_radius,
                         spectra_distance, spectra_out);
    if (exam->parsed()) return cmd_exam(exam_ranking, exam_buggy, exam_tie);
    if (heat->parsed())
      return cmd_heatmap(heat_ranking, heat_map, heat_traces, heat_out, heat_svg);
    if (pg->parsed())
      return cmd_paramgrid(pg_samples, pg_heuristic, pg_gamma, pg_affect,
                           pg_negate, pg_refine, pg_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cerr << app.help();
  return 1;
}

}  // namespace lutloc
