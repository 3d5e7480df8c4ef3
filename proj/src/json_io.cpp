#include "lutloc/json_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace lutloc {

using nlohmann::json;

void atomic_write_text(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file '" + tmp.string() + "'");
    out << content;
  }
  fs::rename(tmp, target);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataError("malformed JSON in " + what);
  return j;
}

VectorXd to_vector(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw DataError(what + " must be an array");
  VectorXd v(arr.size());
  Eigen::Index i = 0;
  for (const auto& x : arr) {
    if (!x.is_number()) throw DataError(what + " must hold numbers");
    v(i++) = x.get<double>();
  }
  return v;
}

json from_vector(const VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

EntryIndex to_entry(const json& arr, const std::string& what) {
  if (!arr.is_array() || arr.empty())
    throw DataError(what + " must be a non-empty index tuple");
  std::vector<int> c;
  for (const auto& x : arr) {
    if (!x.is_number_integer()) throw DataError(what + " must hold integers");
    c.push_back(x.get<int>());
  }
  return EntryIndex(std::move(c));
}

json from_entry(const EntryIndex& e) {
  json arr = json::array();
  for (int c : e.coords) arr.push_back(c);
  return arr;
}

}  // namespace

LookupMap load_map(const std::string& path) {
  const json j = parse_json(read_text(path), "map file '" + path + "'");
  if (!j.contains("axes") || !j.contains("values") || !j.contains("scheme"))
    throw DataError("map file needs axes, values, and scheme");
  std::vector<GridAxis> axes;
  for (const auto& ax : j.at("axes")) axes.emplace_back(to_vector(ax, "axis"));
  VectorXd values = to_vector(j.at("values"), "values");
  return LookupMap(std::move(axes), std::move(values),
                   scheme_from_string(j.at("scheme").get<std::string>()));
}

void save_map(const LookupMap& map, const std::string& path) {
  json j;
  j["axes"] = json::array();
  for (int k = 0; k < map.dims(); ++k)
    j["axes"].push_back(from_vector(map.axis(k).breakpoints()));
  j["values"] = from_vector(map.values());
  j["scheme"] = to_string(map.scheme());
  atomic_write_text(path, j.dump() + "\n");
}

namespace {

json run_to_json(const TraceRun& run) {
  json j;
  j["id"] = run.id;
  if (run.score.has_value()) j["score"] = *run.score;
  json queries = json::array();
  for (const QueryRecord& q : run.queries) {
    json jq;
    jq["seq"] = q.seq;
    jq["point"] = from_vector(q.point);
    json dep = json::array();
    for (const EntryIndex& e : q.depends) dep.push_back(from_entry(e));
    jq["depends"] = dep;
    queries.push_back(std::move(jq));
  }
  j["queries"] = std::move(queries);
  if (!run.signals.empty()) {
    json sig;
    for (const auto& [name, ts] : run.signals) {
      sig[name] = json{{"t", from_vector(ts.t)}, {"v", from_vector(ts.v)}};
    }
    j["signals"] = std::move(sig);
  }
  return j;
}

TraceRun run_from_json(const json& j) {
  TraceRun run;
  if (!j.contains("id")) throw DataError("trace run needs an id");
  run.id = j.at("id").get<std::string>();
  if (j.contains("score")) run.score = j.at("score").get<double>();
  if (j.contains("queries")) {
    for (const auto& jq : j.at("queries")) {
      QueryRecord q;
      q.seq = jq.at("seq").get<int>();
      q.point = to_vector(jq.at("point"), "query point");
      for (const auto& d : jq.at("depends"))
        q.depends.push_back(to_entry(d, "depends"));
      std::sort(q.depends.begin(), q.depends.end());
      run.queries.push_back(std::move(q));
    }
  }
  if (j.contains("signals")) {
    for (const auto& [name, js] : j.at("signals").items()) {
      TimeSeries ts;
      ts.t = to_vector(js.at("t"), "signal times");
      ts.v = to_vector(js.at("v"), "signal values");
      if (ts.t.size() != ts.v.size())
        throw DataError("signal '" + name + "' has mismatched t/v lengths");
      run.signals[name] = std::move(ts);
    }
  }
  return run;
}

}  // namespace

std::string traces_to_jsonl(const std::vector<TraceRun>& runs) {
  std::ostringstream out;
  for (const TraceRun& run : runs) out << run_to_json(run).dump() << "\n";
  return out.str();
}

std::vector<TraceRun> load_traces(const std::string& path) {
  std::istringstream in(read_text(path));
  std::vector<TraceRun> runs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    runs.push_back(run_from_json(
        parse_json(line, "trace line " + std::to_string(line_no))));
  }
  return runs;
}

void save_traces(const std::vector<TraceRun>& runs, const std::string& path) {
  atomic_write_text(path, traces_to_jsonl(runs));
}

void save_ranking(const RankingResult& ranking, const std::string& path) {
  json j;
  j["heuristic"] = ranking.heuristic;
  json cfg;
  cfg["mode"] = to_string(ranking.config.mode);
  cfg["lambda"] = ranking.config.lambda;
  if (ranking.config.radius == std::numeric_limits<double>::infinity())
    cfg["radius"] = "inf";
  else
    cfg["radius"] = ranking.config.radius;
  cfg["agg"] = to_string(ranking.config.aggregation);
  cfg["distance"] = to_string(ranking.config.distance_mode);
  cfg["gamma"] = ranking.gamma;
  cfg["neg_shift"] = ranking.shift.neg_shift;
  cfg["pos_shift"] = ranking.shift.pos_shift;
  j["config"] = std::move(cfg);
  json entries = json::array();
  for (std::int64_t flat : ranking.order) {
    json e;
    e["index"] = from_entry(ranking.entry_of(flat));
    const double s = ranking.scores[static_cast<size_t>(flat)];
    if (s == std::numeric_limits<double>::infinity())
      e["score"] = "inf";
    else
      e["score"] = s;
    entries.push_back(std::move(e));
  }
  j["entries"] = std::move(entries);
  atomic_write_text(path, j.dump() + "\n");
}

LoadedRanking load_ranking(const std::string& path) {
  const json j = parse_json(read_text(path), "ranking file '" + path + "'");
  LoadedRanking out;
  out.heuristic = j.value("heuristic", "");
  if (!j.contains("entries")) throw DataError("ranking file needs entries");
  for (const auto& e : j.at("entries")) {
    const double s = e.at("score").is_string()
                         ? std::numeric_limits<double>::infinity()
                         : e.at("score").get<double>();
    out.entries.emplace_back(to_entry(e.at("index"), "ranking index"), s);
  }
  return out;
}

void save_spectra(const SpectraResult& result, const std::string& path) {
  json j;
  json sus = json::array();
  for (const auto& se : result.sus_u) {
    json e;
    e["index"] = from_entry(se.index);
    e["s_u"] = se.s_u;
    e["d_u"] = se.d_u;
    e["r_u"] = se.r_u;
    json nb = json::array();
    for (const EntryIndex& n : se.neighbors) nb.push_back(from_entry(n));
    e["neighbors"] = std::move(nb);
    sus.push_back(std::move(e));
  }
  j["sus_u"] = std::move(sus);
  json iu = json::array();
  for (const EntryIndex& e : result.sus_iu) iu.push_back(from_entry(e));
  j["sus_iu"] = std::move(iu);
  json mf = json::array();
  for (const EntryIndex& e : result.m_f) mf.push_back(from_entry(e));
  j["m_f"] = std::move(mf);
  json ms = json::array();
  for (const EntryIndex& e : result.m_s) ms.push_back(from_entry(e));
  j["m_s"] = std::move(ms);
  j["radius"] = result.radius;
  j["distance"] = to_string(result.distance_mode);
  atomic_write_text(path, j.dump() + "\n");
}

BuggySet load_buggy(const std::string& path) {
  const json j = parse_json(read_text(path), "buggy set file '" + path + "'");
  if (!j.is_array()) throw DataError("buggy set file must be a JSON array");
  BuggySet out;
  for (const auto& e : j) out.entries.push_back(to_entry(e, "buggy entry"));
  return out;
}

std::vector<FaultEdit> load_fault_edits(const std::string& path) {
  const json j = parse_json(read_text(path), "fault file '" + path + "'");
  if (!j.is_array()) throw DataError("fault file must be a JSON array");
  std::vector<FaultEdit> out;
  for (const auto& e : j) {
    FaultEdit ed;
    ed.index = to_entry(e.at("index"), "fault index");
    if (e.contains("set")) {
      ed.kind = FaultEdit::Kind::Set;
      ed.amount = e.at("set").get<double>();
    } else if (e.contains("scale")) {
      ed.kind = FaultEdit::Kind::Scale;
      ed.amount = e.at("scale").get<double>();
    } else {
      throw DataError("fault edit needs a 'set' or 'scale' amount");
    }
    out.push_back(std::move(ed));
  }
  return out;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  const json j = parse_json(read_text(path), "experiment config '" + path + "'");
  ExperimentConfig cfg;
  cfg.model = j.value("model", cfg.model);
  if (cfg.model == "toy2") cfg = toy2_config();
  cfg.model = j.value("model", cfg.model);
  cfg.n_runs = j.value("n_runs", cfg.n_runs);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.dt = j.value("dt", cfg.dt);
  cfg.horizon = j.value("horizon", cfg.horizon);
  cfg.formula_file = j.value("formula", cfg.formula_file);
  cfg.n_ctrl = j.value("n_ctrl", cfg.n_ctrl);
  cfg.input_lo = j.value("input_lo", cfg.input_lo);
  cfg.input_hi = j.value("input_hi", cfg.input_hi);
  cfg.traces_file = j.value("traces", cfg.traces_file);
  if (j.contains("ramp")) {
    const std::string r = j.at("ramp").get<std::string>();
    if (r == "none") cfg.ramp = RampPolicy::None;
    else if (r == "first") cfg.ramp = RampPolicy::First;
    else if (r == "all") cfg.ramp = RampPolicy::All;
    else throw DataError("ramp must be none, first, or all");
  }
  if (j.contains("fault")) {
    for (const auto& e : j.at("fault")) {
      FaultEdit ed;
      ed.index = to_entry(e.at("index"), "fault index");
      if (e.contains("set")) {
        ed.kind = FaultEdit::Kind::Set;
        ed.amount = e.at("set").get<double>();
      } else if (e.contains("scale")) {
        ed.kind = FaultEdit::Kind::Scale;
        ed.amount = e.at("scale").get<double>();
      } else {
        throw DataError("fault edit needs a 'set' or 'scale' amount");
      }
      cfg.fault.push_back(std::move(ed));
    }
  }
  return cfg;
}

ParamGridSpec load_param_grid(const std::string& path) {
  const json j = parse_json(read_text(path), "parameter grid '" + path + "'");
  ParamGridSpec out;
  for (const auto& iv : j.at("intervals")) {
    if (!iv.is_array() || iv.size() != 2)
      throw DataError("parameter intervals must be [lo, hi] pairs");
    out.intervals.emplace_back(iv[0].get<double>(), iv[1].get<double>());
  }
  for (const auto& c : j.at("counts")) out.counts.push_back(c.get<int>());
  if (j.contains("samples")) {
    for (const auto& s : j.at("samples")) {
      out.samples.emplace_back(to_vector(s.at("k"), "sample parameters"),
                               s.at("score").get<double>());
    }
  }
  return out;
}

}  // namespace lutloc

namespace lutloc::stl {

Signal read_signal_csv(const std::string& path) {
  std::istringstream in(lutloc::read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty signal CSV");
  std::vector<std::string> names;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) names.push_back(cell);
  }
  if (names.size() < 2 || names[0] != "time")
    throw DataError("signal CSV header must start with 'time'");
  std::vector<std::vector<double>> cols(names.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    size_t i = 0;
    while (std::getline(ls, cell, ',')) {
      if (i >= cols.size()) throw DataError("signal CSV row has extra cells");
      cols[i++].push_back(std::stod(cell));
    }
    if (i != cols.size()) throw DataError("signal CSV row has missing cells");
  }
  Signal s;
  s.times = Eigen::Map<const VectorXd>(cols[0].data(),
                                       static_cast<Eigen::Index>(cols[0].size()));
  for (size_t c = 1; c < names.size(); ++c)
    s.channels[names[c]] = Eigen::Map<const VectorXd>(
        cols[c].data(), static_cast<Eigen::Index>(cols[c].size()));
  s.validate();
  return s;
}

void write_signal_csv(const Signal& s, const std::string& path) {
  s.validate();
  std::ostringstream out;
  out << "time";
  for (const auto& [name, v] : s.channels) out << "," << name;
  out << "\n";
  for (Eigen::Index i = 0; i < s.times.size(); ++i) {
    out << s.times(i);
    for (const auto& [name, v] : s.channels) out << "," << v(i);
    out << "\n";
  }
  lutloc::atomic_write_text(path, out.str());
}

}  // namespace lutloc::stl
