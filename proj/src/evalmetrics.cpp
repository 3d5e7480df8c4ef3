#include "lutloc/evalmetrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace lutloc {

namespace {

std::string fmt_double(double v) {
  if (v == std::numeric_limits<double>::infinity()) return "inf";
  if (v == -std::numeric_limits<double>::infinity()) return "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void atomic_write(const std::string& path, const std::string& content) {
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

std::int64_t flat_of(const RankingResult& ranking, const EntryIndex& e) {
  if (e.dims() != static_cast<int>(ranking.shape.size()))
    throw InputError("buggy entry " + e.to_string() +
                     " does not match the ranked grid");
  std::int64_t f = 0;
  for (size_t k = 0; k < ranking.shape.size(); ++k) {
    if (e.coords[k] < 0 || e.coords[k] >= ranking.shape[k])
      throw InputError("buggy entry " + e.to_string() +
                       " is outside the ranked grid");
    f = f * ranking.shape[k] + e.coords[k];
  }
  return f;
}

}  // namespace

int abs_exam_score(const RankingResult& ranking, const BuggySet& buggy,
                   TieRule tie) {
  if (buggy.entries.empty())
    throw InputError("abs_exam_score needs a non-empty buggy set");
  std::set<std::int64_t> bug_flats;
  for (const EntryIndex& e : buggy.entries) bug_flats.insert(flat_of(ranking, e));
  size_t first_pos = ranking.order.size();
  for (size_t pos = 0; pos < ranking.order.size(); ++pos) {
    if (bug_flats.count(ranking.order[pos])) {
      first_pos = pos;
      break;
    }
  }
  if (first_pos == ranking.order.size())
    throw InputError("no buggy entry appears in the ranking");
  if (tie == TieRule::AsRanked) return static_cast<int>(first_pos) + 1;
  const double s = ranking.scores[static_cast<size_t>(ranking.order[first_pos])];
  int greater = 0, tied = 0;
  for (double v : ranking.scores) {
    if (v > s) ++greater;
    else if (v == s) ++tied;
  }
  return tie == TieRule::Best ? greater + 1 : greater + tied;
}

double exam_score(const RankingResult& ranking, const BuggySet& buggy,
                  TieRule tie) {
  return 100.0 * abs_exam_score(ranking, buggy, tie) /
         static_cast<double>(ranking.order.size());
}

namespace {

struct Rgb {
  int r, g, b;
};

// Light green (low) to dark red (high).
Rgb ramp_color(double w) {
  w = std::clamp(w, 0.0, 1.0);
  const Rgb lo{144, 238, 144};
  const Rgb hi{139, 0, 0};
  return Rgb{static_cast<int>(std::lround(lo.r + w * (hi.r - lo.r))),
             static_cast<int>(std::lround(lo.g + w * (hi.g - lo.g))),
             static_cast<int>(std::lround(lo.b + w * (hi.b - lo.b)))};
}

std::string rgb_str(Rgb c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rgb(%d,%d,%d)", c.r, c.g, c.b);
  return buf;
}

}  // namespace

void emit_heatmap(const RankingResult& ranking, std::span<const TraceRun> runs,
                  const LookupMap& map, const std::string& out_csv,
                  const std::optional<std::string>& out_svg) {
  if (map.dims() > 2)
    throw InputError(
        "heat-map output supports 1D and 2D maps; select a 2D slice of the "
        "table first");
  if (static_cast<std::int64_t>(ranking.scores.size()) != map.size())
    throw InputError("ranking does not match the map");

  std::vector<char> accessed(static_cast<size_t>(map.size()), 0);
  for (const TraceRun& run : runs)
    for (const QueryRecord& q : run.queries)
      for (const EntryIndex& e : q.depends)
        accessed[static_cast<size_t>(map.flat_index(e))] = 1;

  const int rows = map.dims() == 2 ? map.axis(0).size() : 1;
  const int cols = map.dims() == 2 ? map.axis(1).size() : map.axis(0).size();
  auto score_at = [&](int r, int c) {
    return ranking.scores[static_cast<size_t>(r) * cols + c];
  };
  auto accessed_at = [&](int r, int c) {
    return accessed[static_cast<size_t>(r) * cols + c] != 0;
  };

  std::ostringstream csv;
  if (map.dims() == 1) {
    for (int c = 0; c < cols; ++c)
      csv << (c ? "," : "") << fmt_double(map.axis(0)[c]);
    csv << "\n";
    for (int c = 0; c < cols; ++c) {
      if (c) csv << ",";
      if (accessed_at(0, c)) csv << fmt_double(score_at(0, c));
    }
    csv << "\n";
  } else {
    for (int c = 0; c < cols; ++c) csv << "," << fmt_double(map.axis(1)[c]);
    csv << "\n";
    for (int r = 0; r < rows; ++r) {
      csv << fmt_double(map.axis(0)[r]);
      for (int c = 0; c < cols; ++c) {
        csv << ",";
        if (accessed_at(r, c)) csv << fmt_double(score_at(r, c));
      }
      csv << "\n";
    }
  }
  atomic_write(out_csv, csv.str());

  if (!out_svg) return;

  // Color scale over the finite accessed scores.
  double mn = std::numeric_limits<double>::infinity();
  double mx = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!accessed_at(r, c)) continue;
      const double v = score_at(r, c);
      if (!std::isfinite(v)) continue;
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
  const bool degenerate = !(mn < mx);
  auto weight = [&](double v) {
    if (!std::isfinite(v)) return 1.0;  // +inf renders as the hottest color
    if (degenerate) return 0.5;
    return (v - mn) / (mx - mn);
  };

  const int cell = std::max(4, std::min(24, 760 / std::max(rows, cols)));
  const int grid_w = cols * cell, grid_h = rows * cell;
  const int bar_w = 18, margin = 10, label_w = 80;
  const int width = grid_w + margin * 3 + bar_w + label_w;
  const int height = grid_h + margin * 2;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      std::string fill =
          accessed_at(r, c) ? rgb_str(ramp_color(weight(score_at(r, c))))
                            : std::string("rgb(70,110,180)");
      svg << "<rect x=\"" << margin + c * cell << "\" y=\""
          << margin + (rows - 1 - r) * cell << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"" << fill
          << "\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
    }
  }
  // Color bar with numeric labels.
  const int bar_x = grid_w + margin * 2;
  const int nseg = 64;
  for (int i = 0; i < nseg; ++i) {
    const double w = 1.0 - static_cast<double>(i) / (nseg - 1);
    svg << "<rect x=\"" << bar_x << "\" y=\""
        << margin + i * grid_h / nseg << "\" width=\"" << bar_w
        << "\" height=\"" << (grid_h + nseg - 1) / nseg << "\" fill=\""
        << rgb_str(ramp_color(w)) << "\"/>\n";
  }
  auto label = [&](int y, double v) {
    svg << "<text x=\"" << bar_x + bar_w + 4 << "\" y=\"" << y
        << "\" font-size=\"10\" font-family=\"sans-serif\">" << fmt_double(v)
        << "</text>\n";
  };
  if (degenerate) {
    if (std::isfinite(mn)) label(margin + grid_h / 2, mn);
  } else {
    label(margin + 10, mx);
    label(margin + grid_h / 2, 0.5 * (mn + mx));
    label(margin + grid_h, mn);
  }
  svg << "<rect x=\"" << bar_x << "\" y=\"" << margin << "\" width=\"" << bar_w
      << "\" height=\"" << grid_h
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
  svg << "</svg>\n";
  atomic_write(*out_svg, svg.str());
}

}  // namespace lutloc
