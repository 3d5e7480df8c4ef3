#include "lutloc/lutmap.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lutloc {

std::string to_string(Scheme s) {
  return s == Scheme::Nearest ? "nearest" : "multilinear";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "nearest") return Scheme::Nearest;
  if (s == "multilinear") return Scheme::Multilinear;
  throw DataError("unknown interpolation scheme: '" + s + "'");
}

std::string to_string(DistanceMode m) {
  switch (m) {
    case DistanceMode::IndexSpace: return "index";
    case DistanceMode::Physical: return "physical";
    case DistanceMode::GridScaled: return "grid-scaled";
  }
  return "grid-scaled";
}

DistanceMode distance_mode_from_string(const std::string& s) {
  if (s == "index" || s == "index-space") return DistanceMode::IndexSpace;
  if (s == "physical") return DistanceMode::Physical;
  if (s == "grid-scaled") return DistanceMode::GridScaled;
  throw DataError("unknown distance mode: '" + s + "'");
}

GridAxis::GridAxis(VectorXd breakpoints) : breakpoints_(std::move(breakpoints)) {
  if (breakpoints_.size() < 2)
    throw InputError("grid axis needs at least 2 breakpoints");
  for (Eigen::Index i = 0; i < breakpoints_.size(); ++i) {
    if (!std::isfinite(breakpoints_(i)))
      throw InputError("grid axis breakpoints must be finite");
    if (i > 0 && !(breakpoints_(i - 1) < breakpoints_(i)))
      throw InputError("grid axis breakpoints must be strictly increasing");
  }
}

int GridAxis::cell_of(double x) const {
  const int n = size();
  if (x <= breakpoints_(0)) return 0;
  if (x >= breakpoints_(n - 1)) return n - 2;
  // First i with b_i >= x, minus one; exact interior hits land in the lower cell.
  const double* begin = breakpoints_.data();
  const double* it = std::lower_bound(begin, begin + n, x);
  return static_cast<int>(it - begin) - 1;
}

double GridAxis::index_coord(double x) const {
  const int c = cell_of(x);
  return c + (x - breakpoints_(c)) / (breakpoints_(c + 1) - breakpoints_(c));
}

std::string EntryIndex::to_string() const {
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < coords.size(); ++i) {
    if (i) os << ',';
    os << coords[i];
  }
  os << ')';
  return os.str();
}

LookupMap::LookupMap(std::vector<GridAxis> axes, VectorXd values, Scheme scheme)
    : axes_(std::move(axes)), values_(std::move(values)), scheme_(scheme) {
  if (axes_.empty()) throw InputError("lookup map needs at least one axis");
  std::int64_t n = 1;
  for (const auto& ax : axes_) n *= ax.size();
  if (values_.size() != n)
    throw InputError("lookup map values size does not match the grid shape");
  for (Eigen::Index i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_(i)))
      throw InputError("lookup map values must be finite");
  strides_.assign(axes_.size(), 1);
  for (size_t k = axes_.size() - 1; k-- > 0;)
    strides_[k] = strides_[k + 1] * axes_[k + 1].size();
}

bool LookupMap::valid(const EntryIndex& e) const {
  if (e.dims() != dims()) return false;
  for (int k = 0; k < dims(); ++k)
    if (e.coords[static_cast<size_t>(k)] < 0 ||
        e.coords[static_cast<size_t>(k)] >= axis(k).size())
      return false;
  return true;
}

std::int64_t LookupMap::flat_index(const EntryIndex& e) const {
  if (!valid(e))
    throw InputError("entry index " + e.to_string() + " is outside the map grid");
  std::int64_t f = 0;
  for (int k = 0; k < dims(); ++k)
    f += strides_[static_cast<size_t>(k)] * e.coords[static_cast<size_t>(k)];
  return f;
}

EntryIndex LookupMap::entry_at(std::int64_t flat) const {
  if (flat < 0 || flat >= size())
    throw InputError("flat entry index out of range");
  std::vector<int> c(static_cast<size_t>(dims()));
  for (int k = 0; k < dims(); ++k) {
    c[static_cast<size_t>(k)] =
        static_cast<int>(flat / strides_[static_cast<size_t>(k)]);
    flat %= strides_[static_cast<size_t>(k)];
  }
  return EntryIndex(std::move(c));
}

VectorXd LookupMap::entry_point(const EntryIndex& e) const {
  flat_index(e);  // validate
  VectorXd p(dims());
  for (int k = 0; k < dims(); ++k)
    p(k) = axis(k)[e.coords[static_cast<size_t>(k)]];
  return p;
}

namespace {

struct AxisLoc {
  int lo = 0;        // lower corner index of the active cell
  double t = 0.0;    // offset within the cell; outside [0,1] when extrapolating
  bool degenerate = false;  // exact breakpoint hit: single index lo
};

AxisLoc locate(const GridAxis& ax, double x) {
  const int n = ax.size();
  // Exact hits collapse the axis to a single index.
  const double* begin = ax.breakpoints().data();
  const double* it = std::lower_bound(begin, begin + n, x);
  if (it != begin + n && *it == x)
    return {static_cast<int>(it - begin), 0.0, true};
  int c;
  if (x < ax[0]) c = 0;
  else if (x > ax[n - 1]) c = n - 2;
  else c = static_cast<int>(it - begin) - 1;
  const double t = (x - ax[c]) / (ax[c + 1] - ax[c]);
  return {c, t, false};
}

void check_point(const LookupMap& map, const VectorXd& point) {
  if (point.size() != map.dims())
    throw InputError("query point dimension does not match the map");
  for (Eigen::Index k = 0; k < point.size(); ++k)
    if (!std::isfinite(point(k)))
      throw InputError("query point must be finite");
}

}  // namespace

QueryResult interpolate(const LookupMap& map, const VectorXd& point) {
  check_point(map, point);
  const int d = map.dims();
  QueryResult out;
  out.point = point;

  if (map.scheme() == Scheme::Nearest) {
    std::vector<int> c(static_cast<size_t>(d));
    for (int k = 0; k < d; ++k) {
      const GridAxis& ax = map.axis(k);
      const int n = ax.size();
      int i;
      if (point(k) <= ax[0]) i = 0;
      else if (point(k) >= ax[n - 1]) i = n - 1;
      else {
        const int cell = ax.cell_of(point(k));
        // Midpoint ties resolve to the lower breakpoint.
        i = (point(k) - ax[cell] <= ax[cell + 1] - point(k)) ? cell : cell + 1;
      }
      c[static_cast<size_t>(k)] = i;
    }
    EntryIndex e(std::move(c));
    out.value = map.value_at(e);
    out.depends.push_back(std::move(e));
    return out;
  }

  // Multilinear: per axis either a single exact index or the bracketing pair
  // with affine weights (weights leave [0,1] beyond the hull).
  std::vector<AxisLoc> loc(static_cast<size_t>(d));
  std::vector<int> free_axes;
  for (int k = 0; k < d; ++k) {
    loc[static_cast<size_t>(k)] = locate(map.axis(k), point(k));
    if (!loc[static_cast<size_t>(k)].degenerate) free_axes.push_back(k);
  }
  const int nf = static_cast<int>(free_axes.size());
  double value = 0.0;
  std::vector<int> coords(static_cast<size_t>(d));
  for (int k = 0; k < d; ++k) coords[static_cast<size_t>(k)] = loc[static_cast<size_t>(k)].lo;
  for (unsigned mask = 0; mask < (1u << nf); ++mask) {
    double w = 1.0;
    for (int j = 0; j < nf; ++j) {
      const AxisLoc& l = loc[static_cast<size_t>(free_axes[static_cast<size_t>(j)])];
      const bool hi = (mask >> j) & 1u;
      w *= hi ? l.t : (1.0 - l.t);
      coords[static_cast<size_t>(free_axes[static_cast<size_t>(j)])] = l.lo + (hi ? 1 : 0);
    }
    EntryIndex e(coords);
    value += w * map.value_at(e);
    out.depends.push_back(std::move(e));
  }
  std::sort(out.depends.begin(), out.depends.end());
  out.value = value;
  return out;
}

std::vector<EntryIndex> depends(const LookupMap& map, const VectorXd& point) {
  return interpolate(map, point).depends;
}

LookupMap seed_fault(const LookupMap& map, std::span<const FaultEdit> edits) {
  VectorXd values = map.values();
  for (const FaultEdit& ed : edits) {
    const std::int64_t f = map.flat_index(ed.index);
    if (ed.kind == FaultEdit::Kind::Set)
      values(f) = ed.amount;
    else
      values(f) *= ed.amount;
  }
  return LookupMap(map.axes(), std::move(values), map.scheme());
}

namespace {

double scaled_sq_norm(const LookupMap& map, const VectorXd& a, const VectorXd& b,
                      DistanceMode mode) {
  double s = 0.0;
  for (int k = 0; k < map.dims(); ++k) {
    double diff;
    switch (mode) {
      case DistanceMode::Physical:
        diff = a(k) - b(k);
        break;
      case DistanceMode::IndexSpace:
        diff = map.axis(k).index_coord(a(k)) - map.axis(k).index_coord(b(k));
        break;
      case DistanceMode::GridScaled:
      default:
        diff = (a(k) - b(k)) / map.axis(k).mean_step();
        break;
    }
    s += diff * diff;
  }
  return s;
}

}  // namespace

double entry_distance(const LookupMap& map, const EntryIndex& a,
                      const EntryIndex& b, DistanceMode mode) {
  if (mode == DistanceMode::IndexSpace) {
    map.flat_index(a);
    map.flat_index(b);
    double s = 0.0;
    for (int k = 0; k < map.dims(); ++k) {
      const double diff = a.coords[static_cast<size_t>(k)] - b.coords[static_cast<size_t>(k)];
      s += diff * diff;
    }
    return std::sqrt(s);
  }
  return std::sqrt(
      scaled_sq_norm(map, map.entry_point(a), map.entry_point(b), mode));
}

double point_entry_distance(const LookupMap& map, const VectorXd& point,
                            const EntryIndex& e, DistanceMode mode) {
  check_point(map, point);
  return std::sqrt(scaled_sq_norm(map, point, map.entry_point(e), mode));
}

double map_diameter(const LookupMap& map, DistanceMode mode) {
  std::vector<int> lo(static_cast<size_t>(map.dims()), 0), hi(static_cast<size_t>(map.dims()));
  for (int k = 0; k < map.dims(); ++k) hi[static_cast<size_t>(k)] = map.axis(k).size() - 1;
  return entry_distance(map, EntryIndex(lo), EntryIndex(hi), mode);
}

std::vector<EntryIndex> grid_neighbors(const LookupMap& map, const EntryIndex& e) {
  map.flat_index(e);
  std::vector<EntryIndex> out;
  for (int k = 0; k < map.dims(); ++k) {
    for (int step : {-1, +1}) {
      EntryIndex n = e;
      n.coords[static_cast<size_t>(k)] += step;
      if (map.valid(n)) out.push_back(std::move(n));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace lutloc
