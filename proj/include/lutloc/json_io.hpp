#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lutloc/evalmetrics.hpp"
#include "lutloc/rankers.hpp"
#include "lutloc/simharness.hpp"
#include "lutloc/spectra.hpp"
#include "lutloc/traces.hpp"

namespace lutloc {

/// Write-temp-then-rename, so readers never observe partial files.
void atomic_write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

/// Map file: {"axes": [[breakpoints...], ...], "values": row-major flat
/// array (last axis fastest), "scheme": "multilinear"|"nearest"}.
LookupMap load_map(const std::string& path);
void save_map(const LookupMap& map, const std::string& path);

/// Trace file: JSON lines, one run per line:
/// {"id", "score"?, "queries": [{"seq", "point": [...],
///  "depends": [[i,...],...]}], "signals": {name: {"t": [...], "v": [...]}}?}
std::vector<TraceRun> load_traces(const std::string& path);
void save_traces(const std::vector<TraceRun>& runs, const std::string& path);
std::string traces_to_jsonl(const std::vector<TraceRun>& runs);

/// Ranking file: {"heuristic", "config", "entries": [{"index": [...],
/// "score": number|"inf"}, ...]} sorted best first.
void save_ranking(const RankingResult& ranking, const std::string& path);
struct LoadedRanking {
  std::string heuristic;
  std::vector<std::pair<EntryIndex, double>> entries;  // ranked order
};
LoadedRanking load_ranking(const std::string& path);

/// Spectra report: {"sus_u": [{"index", "s_u", "d_u", "r_u", "neighbors"}...],
/// "sus_iu": [...], "m_f": [...], "m_s": [...], "radius", "distance"}.
void save_spectra(const SpectraResult& result, const std::string& path);

/// Buggy set file: JSON array of index tuples.
BuggySet load_buggy(const std::string& path);

/// Fault edits: JSON array of {"index": [...], "set": v} or
/// {"index": [...], "scale": v}.
std::vector<FaultEdit> load_fault_edits(const std::string& path);

/// Experiment config: JSON object mirroring ExperimentConfig (keys: model,
/// n_runs, seed, dt, horizon, fault, formula, ramp, n_ctrl, input_lo,
/// input_hi, traces).
ExperimentConfig load_experiment_config(const std::string& path);

/// Parameter grid file: {"intervals": [[lo,hi]...], "counts": [...],
/// "samples": [{"k": [...], "score": s}...]}.
ParamGridSpec load_param_grid(const std::string& path);

}  // namespace lutloc
