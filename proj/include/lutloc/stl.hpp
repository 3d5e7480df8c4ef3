#pragma once

#include <Eigen/Dense>

#include <limits>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lutloc/common.hpp"

namespace lutloc::stl {

using Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Piecewise-linear signal: shared sample times (non-decreasing) plus one
/// value column per named channel. Immutable during evaluation.
struct Signal {
  VectorXd times;
  std::map<std::string, VectorXd> channels;

  void validate() const;
  double t_begin() const { return times(0); }
  double t_end() const { return times(times.size() - 1); }
  bool has(const std::string& name) const { return channels.count(name) > 0; }
  /// Linear interpolation; clamps outside the sampled span.
  double value(const std::string& channel, double t) const;
};

/// Arithmetic expression over channels (+, -, *, /, abs, constants).
struct Expr {
  enum class Kind { Constant, Channel, Add, Sub, Mul, Div, Neg, Abs };
  Kind kind = Kind::Constant;
  double constant = 0.0;
  std::string channel;
  std::shared_ptr<const Expr> lhs, rhs;
};
using ExprPtr = std::shared_ptr<const Expr>;

/// Time interval attached to a temporal operator; hi may be +inf.
struct TimeInterval {
  double lo = 0.0;
  double hi = kInf;
  bool unbounded() const { return hi == kInf; }
};

/// Formula node. Atoms hold an expression and are satisfied iff it is >= 0.
/// Step atoms hold at t iff |x(t) - x(t - d)| >= theta where d is the local
/// sample step of the signal.
struct FormulaNode {
  enum class Kind { Atom, Step, Not, And, Or, Always, Eventually, Until };
  Kind kind = Kind::Atom;
  ExprPtr atom;
  std::string channel;      // Step
  double threshold = 0.0;   // Step
  std::shared_ptr<const FormulaNode> lhs, rhs;
  TimeInterval interval;    // temporal operators
};
using FormulaNodePtr = std::shared_ptr<const FormulaNode>;

/// Parsed formula; cheap to copy, safe to share across threads.
class Formula {
 public:
  Formula() = default;
  explicit Formula(FormulaNodePtr root) : root_(std::move(root)) {}
  const FormulaNode& root() const {
    if (!root_) throw DataError("empty formula");
    return *root_;
  }
  bool empty() const { return root_ == nullptr; }
  /// Channel names the formula references.
  std::vector<std::string> channels() const;
  /// Furthest time the formula can look ahead of the evaluation instant.
  double horizon() const;

 private:
  FormulaNodePtr root_;
};

/// Parse the documented grammar. Comparisons are normalized to "f >= 0" form
/// (e.g. "f < c" becomes the atom "c - f"). When `known_channels` is given,
/// unknown channel names are rejected.
Formula parse_formula(std::string_view text,
                      const std::vector<std::string>* known_channels = nullptr);

struct EvalOptions {
  /// Allow bounded windows that run past the signal end to clip to the
  /// available suffix. Unbounded intervals always clip.
  bool truncate = false;
};

/// Quantitative robustness at time t. Exact for piecewise-linear atom
/// margins: atoms are tracked as piecewise-linear curves with kinks inserted
/// at abs() zero crossings, and window extrema follow segment envelopes.
double robustness(const Formula& f, const Signal& x, double t,
                  const EvalOptions& opts = {});

/// Boolean satisfaction at time t, computed by an independent recursion over
/// satisfaction interval sets (never via the sign of robustness()).
bool eval_bool(const Formula& f, const Signal& x, double t,
               const EvalOptions& opts = {});

/// Signal CSV: header "time,<ch1>,<ch2>,..." then one row per sample.
Signal read_signal_csv(const std::string& path);
void write_signal_csv(const Signal& s, const std::string& path);

}  // namespace lutloc::stl
