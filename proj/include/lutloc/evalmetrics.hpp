#pragma once

#include <optional>
#include <span>
#include <string>

#include "lutloc/rankers.hpp"

namespace lutloc {

/// Ground-truth defective entries.
struct BuggySet {
  std::vector<EntryIndex> entries;
};

/// How entries with tied scores are counted when locating the first buggy
/// entry: as ranked (deterministic index tie-break), or pessimistically /
/// optimistically within the tie block.
enum class TieRule { AsRanked, Worst, Best };

/// 1-based position of the first buggy entry when examining entries in
/// decreasing score order.
int abs_exam_score(const RankingResult& ranking, const BuggySet& buggy,
                   TieRule tie = TieRule::AsRanked);

/// abs_exam_score as a percentage of the table size.
double exam_score(const RankingResult& ranking, const BuggySet& buggy,
                  TieRule tie = TieRule::AsRanked);

/// Heat-map CSV: breakpoint header row (and column for 2D maps) with per-cell
/// ranking scores; entries never accessed by any run are left empty. The
/// optional SVG renders a light-green to dark-red ramp with a numeric color
/// bar and a distinct color for never-accessed cells. 1D and 2D maps only.
void emit_heatmap(const RankingResult& ranking, std::span<const TraceRun> runs,
                  const LookupMap& map, const std::string& out_csv,
                  const std::optional<std::string>& out_svg = std::nullopt);

}  // namespace lutloc
