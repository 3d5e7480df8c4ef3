#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "lutloc/common.hpp"

namespace lutloc {

using Eigen::VectorXd;

/// Scheme used to complete a finite grid of samples to a function on R^d.
enum class Scheme { Nearest, Multilinear };

/// Metric used for distances between grid entries and query points.
///  - Physical:   raw axis units.
///  - IndexSpace: fractional grid-index coordinates (each cell has width 1,
///                affine extension beyond the ends).
///  - GridScaled: physical difference divided per axis by the axis mean step.
/// IndexSpace and GridScaled coincide on uniformly spaced axes; they differ
/// only on non-uniform grids, where IndexSpace warps locally per cell while
/// GridScaled preserves physical proportions within an axis.
enum class DistanceMode { IndexSpace, Physical, GridScaled };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);
std::string to_string(DistanceMode m);
DistanceMode distance_mode_from_string(const std::string& s);

/// One axis of breakpoints, strictly increasing, at least two.
class GridAxis {
 public:
  explicit GridAxis(VectorXd breakpoints);

  int size() const { return static_cast<int>(breakpoints_.size()); }
  double operator[](int i) const { return breakpoints_(i); }
  const VectorXd& breakpoints() const { return breakpoints_; }

  double mean_step() const {
    return (breakpoints_(size() - 1) - breakpoints_(0)) / (size() - 1);
  }

  /// Index of the cell [b_i, b_{i+1}] used for x, clamped to [0, size-2].
  /// A query exactly on an interior breakpoint resolves to the lower cell.
  int cell_of(double x) const;

  /// Fractional index coordinate of x: i + (x-b_i)/(b_{i+1}-b_i) on cell i,
  /// extended affinely beyond the first/last cell.
  double index_coord(double x) const;

 private:
  VectorXd breakpoints_;
};

/// Grid coordinates of one stored entry.
struct EntryIndex {
  std::vector<int> coords;

  EntryIndex() = default;
  explicit EntryIndex(std::vector<int> c) : coords(std::move(c)) {}
  static EntryIndex of(std::initializer_list<int> c) {
    return EntryIndex(std::vector<int>(c));
  }

  int dims() const { return static_cast<int>(coords.size()); }
  auto operator<=>(const EntryIndex&) const = default;
  std::string to_string() const;
};

/// An N-dimensional table of scalar values over a breakpoint grid, completed
/// to a function by the interpolation scheme. Immutable after construction.
class LookupMap {
 public:
  LookupMap(std::vector<GridAxis> axes, VectorXd values, Scheme scheme);

  int dims() const { return static_cast<int>(axes_.size()); }
  std::int64_t size() const { return values_.size(); }
  const GridAxis& axis(int k) const { return axes_[static_cast<size_t>(k)]; }
  const std::vector<GridAxis>& axes() const { return axes_; }
  Scheme scheme() const { return scheme_; }
  const VectorXd& values() const { return values_; }

  bool valid(const EntryIndex& e) const;
  /// Row-major flat index (last axis varies fastest). Throws on bad index.
  std::int64_t flat_index(const EntryIndex& e) const;
  EntryIndex entry_at(std::int64_t flat) const;
  double value_at(const EntryIndex& e) const { return values_(flat_index(e)); }
  double value_flat(std::int64_t flat) const { return values_(flat); }
  /// Physical coordinates of a stored entry.
  VectorXd entry_point(const EntryIndex& e) const;

 private:
  std::vector<GridAxis> axes_;
  VectorXd values_;
  Scheme scheme_;
  std::vector<std::int64_t> strides_;
};

/// Result of one interpolated query: the value, the query point, and the set
/// of stored entries the scheme read to produce the value.
struct QueryResult {
  double value = 0.0;
  VectorXd point;
  std::vector<EntryIndex> depends;  // sorted ascending
};

/// One table edit: replace the entry value or scale it.
struct FaultEdit {
  EntryIndex index;
  enum class Kind { Set, Scale } kind = Kind::Set;
  double amount = 0.0;
};

/// Evaluate the map at an arbitrary point. Multilinear queries outside the
/// breakpoint hull extend the boundary cell's affine segment; nearest clamps.
QueryResult interpolate(const LookupMap& map, const VectorXd& point);

/// The stored entries a query at `point` reads. Singleton on exact grid hits.
std::vector<EntryIndex> depends(const LookupMap& map, const VectorXd& point);

/// Copy of the map with the listed entries replaced or scaled; every other
/// entry is bit-identical. Later edits win on repeated indices.
LookupMap seed_fault(const LookupMap& map, std::span<const FaultEdit> edits);

double entry_distance(const LookupMap& map, const EntryIndex& a,
                      const EntryIndex& b, DistanceMode mode);

/// Distance from a continuous query point to a stored entry.
double point_entry_distance(const LookupMap& map, const VectorXd& point,
                            const EntryIndex& e, DistanceMode mode);

/// Distance between the two extreme grid corners.
double map_diameter(const LookupMap& map, DistanceMode mode);

/// Face-adjacent grid neighbours (+-1 along each axis, in-range only).
std::vector<EntryIndex> grid_neighbors(const LookupMap& map,
                                       const EntryIndex& e);

}  // namespace lutloc
