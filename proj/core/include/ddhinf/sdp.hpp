#pragma once

#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ddhinf/matlin.hpp"

namespace ddhinf {

enum class VarKind { Scalar, Symmetric, Rectangular };

/// Handle to a decision variable. Symmetric variables are flattened to their
/// packed lower triangle (column-major), rectangular ones column-major, so a
/// variable occupies components [offset, offset + size) of the program vector.
struct VarRef {
  int id = -1;
  VarKind kind = VarKind::Scalar;
  Eigen::Index rows = 1;
  Eigen::Index cols = 1;
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
  std::string name;
};

/// Number of independent scalar components of the variable.
Eigen::Index component_count(const VarRef& v);

/// Basis matrix (shape rows x cols) of scalar component k; for symmetric
/// variables the off-diagonal basis carries both mirrored entries.
Matrix component_basis(const VarRef& v, Eigen::Index k);

/// Packs a variable value into its component vector and back.
Vector flatten_value(const VarRef& v, const Matrix& value);
Matrix unflatten_value(const VarRef& v, const Vector& comps);

/// One variable's contribution to an LMI: comps[k] is the symmetric
/// coefficient matrix multiplying scalar component k.
struct LmiTerm {
  VarRef var;
  std::vector<Matrix> comps;
};

/// Affine matrix inequality constant + sum_k y_k * coeff_k >= 0 (PSD sense).
struct AffineLmi {
  std::string label;
  Eigen::Index dim = 0;
  SymMatrix constant;
  std::vector<LmiTerm> terms;
};

/// Variable assignment keyed by VarRef id. Scalars are stored as 1x1 matrices.
class Point {
 public:
  bool has(const VarRef& v) const;
  const Matrix& at(const VarRef& v) const;
  void set(const VarRef& v, const Matrix& value);
  double scalar(const VarRef& v) const;
  void set_scalar(const VarRef& v, double value);
  bool empty() const { return values_.empty(); }

 private:
  std::unordered_map<int, Matrix> values_;
};

/// Evaluates the LMI left-hand side at a point.
SymMatrix eval_lmi(const AffineLmi& lmi, const Point& point);

/// Semidefinite program: linear objective over scalar / symmetric /
/// rectangular variables subject to affine LMI constraints.
class Program {
 public:
  VarRef add_scalar(const std::string& name);
  VarRef add_sym(const std::string& name, Eigen::Index dim);
  VarRef add_rect(const std::string& name, Eigen::Index rows, Eigen::Index cols);

  /// Linear objective sum_v <weights_v, value_v>; call once per program.
  struct LinearTerm {
    VarRef var;
    Matrix weights;
  };
  void set_objective(const std::vector<LinearTerm>& terms, bool maximize);
  /// Shorthand: objective is the scalar variable itself.
  void set_objective(const VarRef& v, bool maximize);

  void add_lmi(AffineLmi lmi);

  const std::vector<VarRef>& vars() const { return vars_; }
  const std::vector<AffineLmi>& lmis() const { return lmis_; }
  VarRef var(const std::string& name) const;
  Eigen::Index total_components() const { return total_components_; }
  bool has_objective() const { return has_objective_; }
  bool maximize() const { return maximize_; }
  /// Objective coefficients over the flattened component vector.
  const Vector& objective() const;
  /// Objective value at a point.
  double objective_value(const Point& point) const;

 private:
  std::vector<VarRef> vars_;
  std::vector<AffineLmi> lmis_;
  Eigen::Index total_components_ = 0;
  Vector objective_ = Vector::Zero(0);
  bool has_objective_ = false;
  bool maximize_ = true;
};

Program build_program();

/// Block-structured LMI assembly. Placements at block coordinates (br, bc)
/// with br != bc are mirrored; build() symmetrizes every coefficient.
class LmiBuilder {
 public:
  LmiBuilder(std::string label, std::vector<Eigen::Index> block_dims);

  LmiBuilder& constant(int br, int bc, const Matrix& block);
  /// Places scale * left * VAR * right at block (br, bc).
  LmiBuilder& term(int br, int bc, const VarRef& v, const Matrix& left, const Matrix& right,
                   double scale = 1.0);
  /// Places scale * v * shape at block (br, bc) for a scalar variable.
  LmiBuilder& scalar_term(int br, int bc, const VarRef& v, const Matrix& shape,
                          double scale = 1.0);

  AffineLmi build() const;

 private:
  void check_block(int br, int bc, const Matrix& block) const;
  void accumulate(Matrix& target, int br, int bc, const Matrix& block) const;

  std::string label_;
  std::vector<Eigen::Index> block_dims_;
  std::vector<Eigen::Index> offsets_;
  Eigen::Index dim_ = 0;
  Matrix constant_;
  std::vector<std::pair<VarRef, std::vector<Matrix>>> terms_;
  std::unordered_map<int, std::size_t> term_index_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };
std::string to_string(SolveStatus s);

struct SolverSettings {
  double tol_feas = 1e-8;
  double tol_gap = 1e-8;
  int max_iter = 200;
};

struct SolverReport {
  SolveStatus status = SolveStatus::NumericalFailure;
  double objective = std::numeric_limits<double>::quiet_NaN();
  Point point;
  double solve_time = 0.0;
  /// Most negative constraint margin at the returned point, 0 if all PSD.
  double worst_residual = 0.0;
  std::vector<double> margins;
  int iterations = 0;
  /// Estimated duality gap at termination (optimal status only).
  double gap_estimate = std::numeric_limits<double>::quiet_NaN();
  /// Best achievable uniform constraint margin found by the feasibility
  /// phase, on the solver's equilibrated scale; negative certifies
  /// infeasibility best-effort.
  double infeasibility_level = std::numeric_limits<double>::quiet_NaN();
  std::string message;
};

/// Barrier interior-point solve. A strictly feasible warm start skips the
/// feasibility phase. Optimal status guarantees every constraint margin is
/// >= -tol_feas * (1 + max|constant entry|), re-checked from raw program data.
SolverReport solve(const Program& prog, const SolverSettings& settings = {},
                   const Point* warm_start = nullptr);

/// Most negative psd margin over all constraints at the point (0 if all PSD).
/// Never trusts solver output; re-evaluates from program data.
double check_residuals(const Program& prog, const Point& point);

/// Per-constraint psd margins in insertion order.
std::vector<double> constraint_margins(const Program& prog, const Point& point);

/// Dense JSON dump of variables, constraints, and objective.
std::string dump_json(const Program& prog);

}  // namespace ddhinf
