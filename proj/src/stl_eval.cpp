#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lutloc/stl.hpp"

namespace lutloc::stl {

void Signal::validate() const {
  if (times.size() == 0) throw DataError("signal has no samples");
  for (Eigen::Index i = 1; i < times.size(); ++i)
    if (times(i) < times(i - 1))
      throw DataError("signal times must be non-decreasing");
  for (const auto& [name, v] : channels)
    if (v.size() != times.size())
      throw DataError("signal channel '" + name +
                      "' length does not match the time base");
}

double Signal::value(const std::string& channel, double t) const {
  auto it = channels.find(channel);
  if (it == channels.end())
    throw DataError("signal has no channel '" + channel + "'");
  const VectorXd& v = it->second;
  const Eigen::Index n = times.size();
  if (t <= times(0)) return v(0);
  if (t >= times(n - 1)) return v(n - 1);
  const double* begin = times.data();
  const double* seg = std::upper_bound(begin, begin + n, t);
  Eigen::Index i = seg - begin - 1;
  const double t0 = times(i), t1 = times(i + 1);
  if (t1 == t0) return v(i + 1);
  const double w = (t - t0) / (t1 - t0);
  return v(i) + w * (v(i + 1) - v(i));
}

namespace {

// ---------------------------------------------------------------------------
// Piecewise-linear curves.
// ---------------------------------------------------------------------------

struct Curve {
  std::vector<double> t, v;

  double lo() const { return t.front(); }
  double hi() const { return t.back(); }

  double at(double x) const {
    const size_t n = t.size();
    if (n == 1) return v[0];
    if (x <= t.front()) return v.front();
    if (x >= t.back()) return v.back();
    const auto seg = std::upper_bound(t.begin(), t.end(), x);
    size_t i = static_cast<size_t>(seg - t.begin()) - 1;
    const double t0 = t[i], t1 = t[i + 1];
    if (t1 == t0) return v[i + 1];
    const double w = (x - t0) / (t1 - t0);
    return v[i] + w * (v[i + 1] - v[i]);
  }
};

Curve constant_curve(double lo, double hi, double value) {
  if (lo == hi) return Curve{{lo}, {value}};
  return Curve{{lo, hi}, {value, value}};
}

// Drop interior knots that lie exactly on the segment through their
// neighbours, and exact duplicates.
Curve compress(Curve c) {
  if (c.t.size() <= 2) return c;
  Curve out;
  out.t.reserve(c.t.size());
  out.v.reserve(c.v.size());
  out.t.push_back(c.t[0]);
  out.v.push_back(c.v[0]);
  for (size_t i = 1; i + 1 < c.t.size(); ++i) {
    const double t0 = out.t.back(), v0 = out.v.back();
    const double t1 = c.t[i], v1 = c.v[i];
    const double t2 = c.t[i + 1], v2 = c.v[i + 1];
    if (t1 == t0 && v1 == v0) continue;
    if (t2 > t0 && t1 > t0 && t1 < t2) {
      const double lerp = v0 + (v2 - v0) * ((t1 - t0) / (t2 - t0));
      if (lerp == v1) continue;
    }
    out.t.push_back(t1);
    out.v.push_back(v1);
  }
  out.t.push_back(c.t.back());
  out.v.push_back(c.v.back());
  return out;
}

Curve negate(Curve c) {
  for (double& x : c.v) x = -x;
  return c;
}

std::vector<double> merged_knots(const Curve& a, const Curve& b, double lo,
                                 double hi) {
  std::vector<double> k;
  k.push_back(lo);
  for (double x : a.t)
    if (x > lo && x < hi) k.push_back(x);
  for (double x : b.t)
    if (x > lo && x < hi) k.push_back(x);
  k.push_back(hi);
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return k;
}

// Pointwise min or max of two curves over their common span, with kinks
// inserted at segment intersections so the result is exact.
Curve envelope(const Curve& a, const Curve& b, bool minimum) {
  const double lo = std::max(a.lo(), b.lo());
  const double hi = std::min(a.hi(), b.hi());
  if (lo > hi) throw DataError("formula horizon exceeds the signal span");
  const std::vector<double> knots = merged_knots(a, b, lo, hi);
  Curve out;
  auto push = [&](double x) {
    const double va = a.at(x), vb = b.at(x);
    const double val = minimum ? std::min(va, vb) : std::max(va, vb);
    if (!out.t.empty() && out.t.back() == x && out.v.back() == val) return;
    out.t.push_back(x);
    out.v.push_back(val);
  };
  push(knots[0]);
  for (size_t i = 0; i + 1 < knots.size(); ++i) {
    const double t0 = knots[i], t1 = knots[i + 1];
    if (t1 <= t0) continue;
    const double a0 = a.at(t0), a1 = a.at(t1);
    const double b0 = b.at(t0), b1 = b.at(t1);
    const double d0 = a0 - b0, d1 = a1 - b1;
    if ((d0 < 0 && d1 > 0) || (d0 > 0 && d1 < 0)) {
      const double r = t0 + (t1 - t0) * (d0 / (d0 - d1));
      if (r > t0 && r < t1) push(r);
    }
    push(t1);
  }
  return compress(std::move(out));
}

Curve combine_linear(const Curve& a, const Curve& b, bool add) {
  const double lo = std::max(a.lo(), b.lo());
  const double hi = std::min(a.hi(), b.hi());
  if (lo > hi) throw DataError("formula horizon exceeds the signal span");
  const std::vector<double> knots = merged_knots(a, b, lo, hi);
  Curve out;
  for (double x : knots) {
    out.t.push_back(x);
    out.v.push_back(add ? a.at(x) + b.at(x) : a.at(x) - b.at(x));
  }
  return out;
}

// Insert exact zero crossings, then take absolute values.
Curve abs_curve(const Curve& c) {
  Curve out;
  out.t.push_back(c.t[0]);
  out.v.push_back(std::fabs(c.v[0]));
  for (size_t i = 0; i + 1 < c.t.size(); ++i) {
    const double t0 = c.t[i], t1 = c.t[i + 1];
    const double v0 = c.v[i], v1 = c.v[i + 1];
    if (t1 > t0 && ((v0 < 0 && v1 > 0) || (v0 > 0 && v1 < 0))) {
      const double r = t0 + (t1 - t0) * (v0 / (v0 - v1));
      if (r > t0 && r < t1) {
        out.t.push_back(r);
        out.v.push_back(0.0);
      }
    }
    out.t.push_back(t1);
    out.v.push_back(std::fabs(v1));
  }
  return out;
}

// Extremum of a curve over a closed window (clamped to the curve span).
double window_extremum(const Curve& g, double wlo, double whi, bool minimum) {
  wlo = std::max(wlo, g.lo());
  whi = std::min(whi, g.hi());
  double best = g.at(wlo);
  const double other = g.at(whi);
  best = minimum ? std::min(best, other) : std::max(best, other);
  auto first = std::upper_bound(g.t.begin(), g.t.end(), wlo);
  for (auto it = first; it != g.t.end() && *it < whi; ++it) {
    const double val = g.v[static_cast<size_t>(it - g.t.begin())];
    best = minimum ? std::min(best, val) : std::max(best, val);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Expression evaluation.
// ---------------------------------------------------------------------------

double expr_at(const Expr& e, const Signal& x, double t) {
  switch (e.kind) {
    case Expr::Kind::Constant: return e.constant;
    case Expr::Kind::Channel: return x.value(e.channel, t);
    case Expr::Kind::Add: return expr_at(*e.lhs, x, t) + expr_at(*e.rhs, x, t);
    case Expr::Kind::Sub: return expr_at(*e.lhs, x, t) - expr_at(*e.rhs, x, t);
    case Expr::Kind::Mul: return expr_at(*e.lhs, x, t) * expr_at(*e.rhs, x, t);
    case Expr::Kind::Div: return expr_at(*e.lhs, x, t) / expr_at(*e.rhs, x, t);
    case Expr::Kind::Neg: return -expr_at(*e.lhs, x, t);
    case Expr::Kind::Abs: return std::fabs(expr_at(*e.lhs, x, t));
  }
  return 0.0;
}

bool expr_is_linear(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Constant:
    case Expr::Kind::Channel:
      return true;
    case Expr::Kind::Add:
    case Expr::Kind::Sub:
      return expr_is_linear(*e.lhs) && expr_is_linear(*e.rhs);
    case Expr::Kind::Mul:
    case Expr::Kind::Div:
      return false;
    case Expr::Kind::Neg:
      return expr_is_linear(*e.lhs);
    case Expr::Kind::Abs:
      return false;  // handled separately so crossings get inserted
  }
  return false;
}

// Builds the margin curve of an atom expression over the signal span.
// Affine combinations of channels stay exact piecewise-linear; abs() inserts
// its zero crossings; products/quotients are refined adaptively until the
// piecewise-linear interpolant matches the expression to tolerance.
Curve build_expr_curve(const Expr& e, const Signal& x);

Curve refine_against(const Expr& e, const Signal& x, std::vector<double> knots) {
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  std::vector<double> vals;
  vals.reserve(knots.size());
  double scale = 1.0;
  for (double k : knots) {
    const double val = expr_at(e, x, k);
    if (!std::isfinite(val))
      throw DataError("atom expression is not finite over the signal span");
    scale = std::max(scale, std::fabs(val));
    vals.push_back(val);
  }
  const double tol = 1e-12 * scale;
  struct Seg { double a, b, va, vb; int depth; };
  std::vector<Seg> work;
  for (size_t i = 0; i + 1 < knots.size(); ++i)
    work.push_back({knots[i], knots[i + 1], vals[i], vals[i + 1], 0});
  std::vector<std::pair<double, double>> pts;
  for (size_t i = 0; i < knots.size(); ++i) pts.emplace_back(knots[i], vals[i]);
  while (!work.empty()) {
    Seg s = work.back();
    work.pop_back();
    if (s.b - s.a < 1e-12 || s.depth >= 40) continue;
    const double m = 0.5 * (s.a + s.b);
    if (m <= s.a || m >= s.b) continue;
    const double vm = expr_at(e, x, m);
    if (!std::isfinite(vm))
      throw DataError("atom expression is not finite over the signal span");
    if (std::fabs(vm - 0.5 * (s.va + s.vb)) > tol) {
      pts.emplace_back(m, vm);
      work.push_back({s.a, m, s.va, vm, s.depth + 1});
      work.push_back({m, s.b, vm, s.vb, s.depth + 1});
    }
  }
  std::sort(pts.begin(), pts.end());
  Curve out;
  for (auto& [k, val] : pts) {
    if (!out.t.empty() && out.t.back() == k) continue;
    out.t.push_back(k);
    out.v.push_back(val);
  }
  return out;
}

Curve build_expr_curve(const Expr& e, const Signal& x) {
  const double lo = x.t_begin(), hi = x.t_end();
  switch (e.kind) {
    case Expr::Kind::Constant:
      return constant_curve(lo, hi, e.constant);
    case Expr::Kind::Channel: {
      auto it = x.channels.find(e.channel);
      if (it == x.channels.end())
        throw DataError("signal has no channel '" + e.channel + "'");
      Curve c;
      for (Eigen::Index i = 0; i < x.times.size(); ++i) {
        c.t.push_back(x.times(i));
        c.v.push_back(it->second(i));
      }
      if (c.t.size() == 1) return Curve{{lo}, {c.v[0]}};
      return c;
    }
    case Expr::Kind::Add:
    case Expr::Kind::Sub: {
      if (expr_is_linear(*e.lhs) && expr_is_linear(*e.rhs))
        return combine_linear(build_expr_curve(*e.lhs, x),
                              build_expr_curve(*e.rhs, x),
                              e.kind == Expr::Kind::Add);
      Curve a = build_expr_curve(*e.lhs, x);
      Curve b = build_expr_curve(*e.rhs, x);
      std::vector<double> knots = a.t;
      knots.insert(knots.end(), b.t.begin(), b.t.end());
      return refine_against(e, x, std::move(knots));
    }
    case Expr::Kind::Neg:
      return negate(build_expr_curve(*e.lhs, x));
    case Expr::Kind::Abs:
      return abs_curve(build_expr_curve(*e.lhs, x));
    case Expr::Kind::Mul:
    case Expr::Kind::Div: {
      Curve a = build_expr_curve(*e.lhs, x);
      Curve b = build_expr_curve(*e.rhs, x);
      std::vector<double> knots = a.t;
      knots.insert(knots.end(), b.t.begin(), b.t.end());
      return refine_against(e, x, std::move(knots));
    }
  }
  return constant_curve(lo, hi, 0.0);
}

// step(ch, theta): margin |x(t) - x(t-d)| - theta, where d is the sample step
// of the segment containing t. Knots are inserted where t-d crosses samples,
// so both terms are linear on every refined piece.
Curve step_curve(const FormulaNode& f, const Signal& x) {
  auto it = x.channels.find(f.channel);
  if (it == x.channels.end())
    throw DataError("signal has no channel '" + f.channel + "'");
  const VectorXd& times = x.times;
  const Eigen::Index n = times.size();
  if (n == 1) return constant_curve(times(0), times(0), -f.threshold);
  std::vector<double> knots;
  for (Eigen::Index i = 0; i < n; ++i) knots.push_back(times(i));
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double d = times(k + 1) - times(k);
    if (d <= 0) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double cand = times(j) + d;
      if (cand > times(k) && cand < times(k + 1)) knots.push_back(cand);
    }
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  auto local_step = [&](double t) {
    Eigen::Index i;
    if (t <= times(0)) i = 0;
    else {
      const double* b = times.data();
      i = std::upper_bound(b, b + n, t) - b - 1;
      if (i >= n - 1) i = n - 2;
      if (times(i) == t && i > 0) i -= 1;  // segment ending at t
    }
    return times(i + 1) - times(i);
  };
  Curve diff;
  for (double k : knots) {
    const double d = local_step(k);
    const double prev = x.value(f.channel, k - d);
    diff.t.push_back(k);
    diff.v.push_back(x.value(f.channel, k) - prev);
  }
  Curve absd = abs_curve(diff);
  for (double& val : absd.v) val -= f.threshold;
  return absd;
}

// ---------------------------------------------------------------------------
// Temporal operators on curves.
// ---------------------------------------------------------------------------

// Exact sliding-window extremum of g over [t+a, min(t+b, end)]. The result
// is piecewise-linear: between consecutive candidate times the interior knot
// set is constant, so the result is the envelope of at most two moving
// endpoint lines and one constant.
Curve sliding_extremum(const Curve& g, double a, double b, bool minimum,
                       bool truncate) {
  const double c0 = g.lo(), c1 = g.hi();
  const bool clip_always = (b == kInf);
  const double dlo = c0 - a;
  const double dhi = (clip_always || truncate) ? c1 - a : c1 - b;
  if (dlo > dhi) throw DataError("formula horizon exceeds the signal span");
  if (dlo == dhi) {
    const double w = window_extremum(g, dlo + a, clip_always ? c1 : std::min(dlo + b, c1), minimum);
    return Curve{{dlo}, {w}};
  }
  std::vector<double> cand{dlo, dhi};
  for (double k : g.t) {
    const double ka = k - a;
    if (ka > dlo && ka < dhi) cand.push_back(ka);
    if (!clip_always) {
      const double kb = k - b;
      if (kb > dlo && kb < dhi) cand.push_back(kb);
    }
  }
  if (!clip_always && truncate) {
    const double sw = c1 - b;
    if (sw > dlo && sw < dhi) cand.push_back(sw);
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  Curve out;
  auto push = [&](double x, double val) {
    if (!out.t.empty() && out.t.back() == x && out.v.back() == val) return;
    out.t.push_back(x);
    out.v.push_back(val);
  };
  auto pick = [&](double p, double q) { return minimum ? std::min(p, q) : std::max(p, q); };

  for (size_t i = 0; i + 1 < cand.size(); ++i) {
    const double s0 = cand[i], s1 = cand[i + 1];
    if (s1 <= s0) continue;
    const double mid = 0.5 * (s0 + s1);
    const bool clipped = clip_always || (mid + b >= c1);
    const double whi_mid = clipped ? c1 : mid + b;

    // Candidate pieces on [s0,s1]: the lower window endpoint line, the upper
    // endpoint (line or clipped constant), and the interior-knot constant.
    struct Line { double v0, v1; };
    std::vector<Line> lines;
    lines.push_back({g.at(s0 + a), g.at(s1 + a)});
    if (clipped)
      lines.push_back({g.at(c1), g.at(c1)});
    else
      lines.push_back({g.at(s0 + b), g.at(s1 + b)});
    bool have_const = false;
    double cval = 0.0;
    for (size_t j = 0; j < g.t.size(); ++j) {
      if (g.t[j] > mid + a && g.t[j] < whi_mid) {
        cval = have_const ? pick(cval, g.v[j]) : g.v[j];
        have_const = true;
      }
    }
    if (have_const) lines.push_back({cval, cval});

    // Envelope breakpoints: endpoints plus pairwise crossings.
    std::vector<double> bps{s0, s1};
    for (size_t p = 0; p < lines.size(); ++p)
      for (size_t q = p + 1; q < lines.size(); ++q) {
        const double d0 = lines[p].v0 - lines[q].v0;
        const double d1 = lines[p].v1 - lines[q].v1;
        if ((d0 < 0 && d1 > 0) || (d0 > 0 && d1 < 0)) {
          const double r = s0 + (s1 - s0) * (d0 / (d0 - d1));
          if (r > s0 && r < s1) bps.push_back(r);
        }
      }
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    for (double xp : bps) {
      const double w = (s1 == s0) ? 0.0 : (xp - s0) / (s1 - s0);
      double best = lines[0].v0 + w * (lines[0].v1 - lines[0].v0);
      for (size_t j = 1; j < lines.size(); ++j)
        best = pick(best, lines[j].v0 + w * (lines[j].v1 - lines[j].v0));
      push(xp, best);
    }
  }
  return compress(std::move(out));
}

// sup over t' in [s+a, min(s+b, E)] of min(rho2(t'), inf over [s,t'] of rho1),
// with the inf over an empty range treated as +inf (so t'=s contributes
// rho2(s) alone). On each knot-free piece [u0,u1] the prefix inf is
// min(M0, rho1(t')) for the accumulated constant M0, so the objective is
// piecewise-linear with breakpoints at the pairwise crossings; evaluating at
// those breakpoints gives the exact sup.
double until_at(const Curve& r1, const Curve& r2, double s, double a, double b,
                double window_end) {
  const double wlo = s + a;
  const double whi = (b == kInf) ? window_end : std::min(s + b, window_end);
  if (whi < wlo) return -kInf;
  double best = -kInf;
  if (wlo == s) best = r2.at(s);
  std::vector<double> pts{s, wlo, whi};
  for (double k : r1.t)
    if (k > s && k < whi) pts.push_back(k);
  for (double k : r2.t)
    if (k > s && k < whi) pts.push_back(k);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double runmin = kInf;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const double u0 = pts[i], u1 = pts[i + 1];
    if (u1 <= u0) continue;
    const double p10 = r1.at(u0), p11 = r1.at(u1);
    const double eval_lo = std::max(u0, wlo);
    if (u1 >= eval_lo && u1 > s) {
      const double M0 = std::min(runmin, p10);
      const double q0 = r2.at(u0), q1 = r2.at(u1);
      const double span = u1 - u0;
      double cand[5];
      int nc = 0;
      cand[nc++] = eval_lo;
      cand[nc++] = u1;
      // rho1 crossing the accumulated constant.
      if (p11 != p10) {
        const double tc = u0 + (M0 - p10) * span / (p11 - p10);
        if (tc > eval_lo && tc < u1) cand[nc++] = tc;
      }
      // rho2 crossing the accumulated constant.
      if (q1 != q0) {
        const double tc = u0 + (M0 - q0) * span / (q1 - q0);
        if (tc > eval_lo && tc < u1) cand[nc++] = tc;
      }
      // rho2 crossing rho1.
      const double d0 = q0 - p10, d1 = q1 - p11;
      if ((d0 < 0 && d1 > 0) || (d0 > 0 && d1 < 0)) {
        const double tc = u0 + span * (d0 / (d0 - d1));
        if (tc > eval_lo && tc < u1) cand[nc++] = tc;
      }
      for (int c = 0; c < nc; ++c) {
        const double tp = cand[c];
        if (tp <= s) continue;
        const double h = std::min(r2.at(tp), std::min(M0, r1.at(tp)));
        best = std::max(best, h);
      }
    }
    runmin = std::min(runmin, std::min(p10, p11));
  }
  return best;
}

Curve until_curve(const Curve& r1, const Curve& r2, double a, double b,
                  bool truncate) {
  const double window_end = std::min(r1.hi(), r2.hi());
  const double dlo = std::max(r1.lo(), r2.lo() - a);
  const double dhi = (b == kInf || truncate) ? window_end - a : window_end - b;
  if (dlo > dhi) throw DataError("formula horizon exceeds the signal span");
  std::vector<double> cand{dlo, dhi};
  auto add_shifted = [&](const std::vector<double>& ks) {
    for (double k : ks) {
      for (double sft : {k - a, b == kInf ? dlo - 1 : k - b, k}) {
        if (sft > dlo && sft < dhi) cand.push_back(sft);
      }
    }
  };
  add_shifted(r1.t);
  add_shifted(r2.t);
  if (b != kInf && truncate) {
    const double sw = window_end - b;
    if (sw > dlo && sw < dhi) cand.push_back(sw);
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  std::vector<std::pair<double, double>> pts;
  double scale = 1.0;
  for (double s : cand) {
    const double val = until_at(r1, r2, s, a, b, window_end);
    scale = std::max(scale, std::fabs(val));
    pts.emplace_back(s, val);
  }
  // The value between candidates is piecewise-linear with kinks where the
  // active sup switches; locate them by adaptive bisection.
  const double tol = 1e-12 * scale;
  struct Seg { double a2, b2, va, vb; int depth; };
  std::vector<Seg> work;
  for (size_t i = 0; i + 1 < pts.size(); ++i)
    work.push_back({pts[i].first, pts[i + 1].first, pts[i].second,
                    pts[i + 1].second, 0});
  while (!work.empty()) {
    Seg s = work.back();
    work.pop_back();
    if (s.b2 - s.a2 < 1e-12 || s.depth >= 48) continue;
    const double m = 0.5 * (s.a2 + s.b2);
    if (m <= s.a2 || m >= s.b2) continue;
    const double vm = until_at(r1, r2, m, a, b, window_end);
    if (std::fabs(vm - 0.5 * (s.va + s.vb)) > tol) {
      pts.emplace_back(m, vm);
      work.push_back({s.a2, m, s.va, vm, s.depth + 1});
      work.push_back({m, s.b2, vm, s.vb, s.depth + 1});
    }
  }
  std::sort(pts.begin(), pts.end());
  Curve out;
  for (auto& [k, val] : pts) {
    if (!out.t.empty() && out.t.back() == k) continue;
    out.t.push_back(k);
    out.v.push_back(val);
  }
  return compress(std::move(out));
}

Curve robust_curve(const FormulaNode& f, const Signal& x,
                   const EvalOptions& opts) {
  switch (f.kind) {
    case FormulaNode::Kind::Atom:
      return build_expr_curve(*f.atom, x);
    case FormulaNode::Kind::Step:
      return step_curve(f, x);
    case FormulaNode::Kind::Not:
      return negate(robust_curve(*f.lhs, x, opts));
    case FormulaNode::Kind::And:
      return envelope(robust_curve(*f.lhs, x, opts),
                      robust_curve(*f.rhs, x, opts), true);
    case FormulaNode::Kind::Or:
      return envelope(robust_curve(*f.lhs, x, opts),
                      robust_curve(*f.rhs, x, opts), false);
    case FormulaNode::Kind::Always:
      return sliding_extremum(robust_curve(*f.lhs, x, opts), f.interval.lo,
                              f.interval.hi, true, opts.truncate);
    case FormulaNode::Kind::Eventually:
      return sliding_extremum(robust_curve(*f.lhs, x, opts), f.interval.lo,
                              f.interval.hi, false, opts.truncate);
    case FormulaNode::Kind::Until:
      return until_curve(robust_curve(*f.lhs, x, opts),
                         robust_curve(*f.rhs, x, opts), f.interval.lo,
                         f.interval.hi, opts.truncate);
  }
  throw DataError("unknown formula node");
}

double robustness_at(const FormulaNode& f, const Signal& x, double t,
                     const EvalOptions& opts) {
  // Top-level boolean connectives are applied pointwise so negation is an
  // exact sign flip and conjunction an exact min of the operand values.
  switch (f.kind) {
    case FormulaNode::Kind::Not:
      return -robustness_at(*f.lhs, x, t, opts);
    case FormulaNode::Kind::And:
      return std::min(robustness_at(*f.lhs, x, t, opts),
                      robustness_at(*f.rhs, x, t, opts));
    case FormulaNode::Kind::Or:
      return std::max(robustness_at(*f.lhs, x, t, opts),
                      robustness_at(*f.rhs, x, t, opts));
    case FormulaNode::Kind::Atom:
      if (t < x.t_begin() - 1e-9 || t > x.t_end() + 1e-9)
        throw DataError("evaluation time is outside the signal span");
      return expr_at(*f.atom, x, t);
    default: {
      const Curve c = robust_curve(f, x, opts);
      if (t < c.lo() - 1e-9 || t > c.hi() + 1e-9)
        throw DataError(
            "formula horizon exceeds the signal span at the evaluation time; "
            "enable truncation or extend the signal");
      return c.at(t);
    }
  }
}

// ---------------------------------------------------------------------------
// Boolean semantics over satisfaction interval sets (closed intervals).
// ---------------------------------------------------------------------------

struct IntervalSet {
  // Sorted, disjoint, non-touching closed intervals within [dom_lo, dom_hi].
  std::vector<std::pair<double, double>> iv;
  double dom_lo = 0.0, dom_hi = 0.0;

  void normalize() {
    std::sort(iv.begin(), iv.end());
    std::vector<std::pair<double, double>> out;
    for (auto& p : iv) {
      double l = std::max(p.first, dom_lo), u = std::min(p.second, dom_hi);
      if (l > u) continue;
      if (!out.empty() && l <= out.back().second)
        out.back().second = std::max(out.back().second, u);
      else
        out.emplace_back(l, u);
    }
    iv = std::move(out);
  }

  bool contains(double t) const {
    for (auto& p : iv)
      if (t >= p.first && t <= p.second) return true;
    return false;
  }
};

IntervalSet sat_from_curve(const Curve& c) {
  IntervalSet s;
  s.dom_lo = c.lo();
  s.dom_hi = c.hi();
  bool open = false;
  double start = 0.0;
  const size_t n = c.t.size();
  if (n == 1) {
    if (c.v[0] >= 0) s.iv.emplace_back(c.t[0], c.t[0]);
    return s;
  }
  for (size_t i = 0; i < n; ++i) {
    const bool nonneg = c.v[i] >= 0;
    if (!open && nonneg) {
      if (i == 0 || c.t[i] == c.t[i - 1]) {
        start = c.t[i];
      } else {
        const double v0 = c.v[i - 1], v1 = c.v[i];
        start = (v1 == v0) ? c.t[i]
                           : c.t[i - 1] + (c.t[i] - c.t[i - 1]) * (v0 / (v0 - v1));
      }
      open = true;
    } else if (open && !nonneg) {
      double end;
      if (i == 0 || c.t[i] == c.t[i - 1]) {
        end = c.t[i];
      } else {
        const double v0 = c.v[i - 1], v1 = c.v[i];
        end = (v1 == v0) ? c.t[i]
                         : c.t[i - 1] + (c.t[i] - c.t[i - 1]) * (v0 / (v0 - v1));
      }
      s.iv.emplace_back(start, end);
      open = false;
    }
  }
  if (open) s.iv.emplace_back(start, c.hi());
  s.normalize();
  return s;
}

IntervalSet complement_closure(const IntervalSet& s) {
  IntervalSet out;
  out.dom_lo = s.dom_lo;
  out.dom_hi = s.dom_hi;
  double cursor = s.dom_lo;
  for (auto& p : s.iv) {
    // A gap collapses to nothing when the set starts at the cursor itself;
    // closure points around degenerate members come from the neighbouring
    // gaps, which have positive length in a normalized set.
    if (p.first > cursor) out.iv.emplace_back(cursor, p.first);
    cursor = p.second;
  }
  if (cursor < s.dom_hi || s.iv.empty()) out.iv.emplace_back(cursor, s.dom_hi);
  out.normalize();
  return out;
}

IntervalSet intersect(const IntervalSet& a, const IntervalSet& b) {
  IntervalSet out;
  out.dom_lo = std::max(a.dom_lo, b.dom_lo);
  out.dom_hi = std::min(a.dom_hi, b.dom_hi);
  if (out.dom_lo > out.dom_hi)
    throw DataError("formula horizon exceeds the signal span");
  size_t i = 0, j = 0;
  while (i < a.iv.size() && j < b.iv.size()) {
    const double l = std::max(a.iv[i].first, b.iv[j].first);
    const double u = std::min(a.iv[i].second, b.iv[j].second);
    if (l <= u) out.iv.emplace_back(l, u);
    if (a.iv[i].second < b.iv[j].second) ++i;
    else ++j;
  }
  out.normalize();
  return out;
}

IntervalSet unite(const IntervalSet& a, const IntervalSet& b) {
  IntervalSet out;
  out.dom_lo = std::max(a.dom_lo, b.dom_lo);
  out.dom_hi = std::min(a.dom_hi, b.dom_hi);
  if (out.dom_lo > out.dom_hi)
    throw DataError("formula horizon exceeds the signal span");
  out.iv = a.iv;
  out.iv.insert(out.iv.end(), b.iv.begin(), b.iv.end());
  out.normalize();
  return out;
}

IntervalSet bool_always(const IntervalSet& s, double a, double b,
                        bool truncate) {
  IntervalSet out;
  out.dom_lo = s.dom_lo - a;
  out.dom_hi = (b == kInf || truncate) ? s.dom_hi - a : s.dom_hi - b;
  if (out.dom_lo > out.dom_hi)
    throw DataError("formula horizon exceeds the signal span");
  for (auto& p : s.iv) {
    const double l = p.first - a;
    double u;
    if (p.second == s.dom_hi)
      u = out.dom_hi;  // clipped windows stay inside a set reaching the end
    else if (b == kInf)
      continue;
    else
      u = p.second - b;
    if (l <= u) out.iv.emplace_back(l, u);
  }
  out.normalize();
  return out;
}

IntervalSet bool_eventually(const IntervalSet& s, double a, double b,
                            bool truncate) {
  IntervalSet out;
  out.dom_lo = s.dom_lo - a;
  out.dom_hi = (b == kInf || truncate) ? s.dom_hi - a : s.dom_hi - b;
  if (out.dom_lo > out.dom_hi)
    throw DataError("formula horizon exceeds the signal span");
  for (auto& p : s.iv) {
    const double l = (b == kInf) ? out.dom_lo : p.first - b;
    const double u = p.second - a;
    if (l <= u) out.iv.emplace_back(l, u);
  }
  out.normalize();
  return out;
}

IntervalSet bool_until(const IntervalSet& sp, const IntervalSet& sq, double a,
                       double b, bool truncate) {
  IntervalSet out;
  const double window_end = std::min(sp.dom_hi, sq.dom_hi);
  out.dom_lo = std::max(sp.dom_lo, sq.dom_lo - a);
  out.dom_hi = (b == kInf || truncate) ? window_end - a : window_end - b;
  if (out.dom_lo > out.dom_hi)
    throw DataError("formula horizon exceeds the signal span");
  if (a == 0.0) out.iv = sq.iv;  // t' = t witnesses with an empty prefix
  for (auto& p : sp.iv) {
    for (auto& q : sq.iv) {
      if (q.first > p.second) continue;
      const double t1_hi = std::min(q.second, p.second);
      const double lo = std::max(p.first, (b == kInf) ? -kInf : q.first - b);
      const double hi = t1_hi - a;
      if (lo <= hi) out.iv.emplace_back(std::max(lo, out.dom_lo), hi);
    }
  }
  out.normalize();
  return out;
}

// Satisfaction set of the node (negated=false) or of its negation
// (negated=true). Negations are pushed down to the atoms, where the
// non-strict complement {margin <= 0} is exact even on fat zero regions;
// and/or/alw/ev dualize. Only a negated until falls back to the closed
// complement, which can misreport points where its robustness is exactly
// zero over an interval.
IntervalSet bool_curve(const FormulaNode& f, const Signal& x,
                       const EvalOptions& opts, bool negated) {
  switch (f.kind) {
    case FormulaNode::Kind::Atom:
    case FormulaNode::Kind::Step: {
      Curve c = f.kind == FormulaNode::Kind::Atom ? build_expr_curve(*f.atom, x)
                                                  : step_curve(f, x);
      if (negated) c = negate(std::move(c));
      return sat_from_curve(c);
    }
    case FormulaNode::Kind::Not:
      return bool_curve(*f.lhs, x, opts, !negated);
    case FormulaNode::Kind::And:
      if (negated)
        return unite(bool_curve(*f.lhs, x, opts, true),
                     bool_curve(*f.rhs, x, opts, true));
      return intersect(bool_curve(*f.lhs, x, opts, false),
                       bool_curve(*f.rhs, x, opts, false));
    case FormulaNode::Kind::Or:
      if (negated)
        return intersect(bool_curve(*f.lhs, x, opts, true),
                         bool_curve(*f.rhs, x, opts, true));
      return unite(bool_curve(*f.lhs, x, opts, false),
                   bool_curve(*f.rhs, x, opts, false));
    case FormulaNode::Kind::Always:
      if (negated)
        return bool_eventually(bool_curve(*f.lhs, x, opts, true),
                               f.interval.lo, f.interval.hi, opts.truncate);
      return bool_always(bool_curve(*f.lhs, x, opts, false), f.interval.lo,
                         f.interval.hi, opts.truncate);
    case FormulaNode::Kind::Eventually:
      if (negated)
        return bool_always(bool_curve(*f.lhs, x, opts, true), f.interval.lo,
                           f.interval.hi, opts.truncate);
      return bool_eventually(bool_curve(*f.lhs, x, opts, false), f.interval.lo,
                             f.interval.hi, opts.truncate);
    case FormulaNode::Kind::Until: {
      IntervalSet u = bool_until(bool_curve(*f.lhs, x, opts, false),
                                 bool_curve(*f.rhs, x, opts, false),
                                 f.interval.lo, f.interval.hi, opts.truncate);
      return negated ? complement_closure(u) : u;
    }
  }
  throw DataError("unknown formula node");
}

}  // namespace

double robustness(const Formula& f, const Signal& x, double t,
                  const EvalOptions& opts) {
  x.validate();
  return robustness_at(f.root(), x, t, opts);
}

bool eval_bool(const Formula& f, const Signal& x, double t,
               const EvalOptions& opts) {
  x.validate();
  const IntervalSet s = bool_curve(f.root(), x, opts, false);
  if (t < s.dom_lo - 1e-9 || t > s.dom_hi + 1e-9)
    throw DataError(
        "formula horizon exceeds the signal span at the evaluation time; "
        "enable truncation or extend the signal");
  return s.contains(t);
}

}  // namespace lutloc::stl
