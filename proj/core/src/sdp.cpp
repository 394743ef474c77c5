#include "ddhinf/sdp.hpp"

#include <cmath>

#include <json.hpp>

#include "ddhinf/errors.hpp"

namespace ddhinf {

Eigen::Index component_count(const VarRef& v) {
  switch (v.kind) {
    case VarKind::Scalar:
      return 1;
    case VarKind::Symmetric:
      return v.rows * (v.rows + 1) / 2;
    case VarKind::Rectangular:
      return v.rows * v.cols;
  }
  throw UsageError("unknown variable kind");
}

Matrix component_basis(const VarRef& v, Eigen::Index k) {
  if (k < 0 || k >= component_count(v)) throw UsageError("component index out of range");
  Matrix E = Matrix::Zero(v.rows, v.cols);
  switch (v.kind) {
    case VarKind::Scalar:
      E(0, 0) = 1.0;
      return E;
    case VarKind::Symmetric: {
      Eigen::Index idx = 0;
      for (Eigen::Index j = 0; j < v.rows; ++j) {
        for (Eigen::Index i = j; i < v.rows; ++i) {
          if (idx == k) {
            E(i, j) = 1.0;
            E(j, i) = 1.0;
            return E;
          }
          ++idx;
        }
      }
      break;
    }
    case VarKind::Rectangular: {
      E(k % v.rows, k / v.rows) = 1.0;
      return E;
    }
  }
  throw UsageError("component index out of range");
}

Vector flatten_value(const VarRef& v, const Matrix& value) {
  if (value.rows() != v.rows || value.cols() != v.cols)
    throw UsageError("value shape does not match variable " + v.name);
  Vector out(component_count(v));
  switch (v.kind) {
    case VarKind::Scalar:
      out(0) = value(0, 0);
      break;
    case VarKind::Symmetric: {
      Eigen::Index idx = 0;
      for (Eigen::Index j = 0; j < v.rows; ++j)
        for (Eigen::Index i = j; i < v.rows; ++i)
          out(idx++) = 0.5 * (value(i, j) + value(j, i));
      break;
    }
    case VarKind::Rectangular: {
      Eigen::Index idx = 0;
      for (Eigen::Index j = 0; j < v.cols; ++j)
        for (Eigen::Index i = 0; i < v.rows; ++i) out(idx++) = value(i, j);
      break;
    }
  }
  return out;
}

Matrix unflatten_value(const VarRef& v, const Vector& comps) {
  if (comps.size() != component_count(v))
    throw UsageError("component vector size does not match variable " + v.name);
  Matrix out = Matrix::Zero(v.rows, v.cols);
  switch (v.kind) {
    case VarKind::Scalar:
      out(0, 0) = comps(0);
      break;
    case VarKind::Symmetric: {
      Eigen::Index idx = 0;
      for (Eigen::Index j = 0; j < v.rows; ++j)
        for (Eigen::Index i = j; i < v.rows; ++i) {
          out(i, j) = comps(idx);
          out(j, i) = comps(idx);
          ++idx;
        }
      break;
    }
    case VarKind::Rectangular: {
      Eigen::Index idx = 0;
      for (Eigen::Index j = 0; j < v.cols; ++j)
        for (Eigen::Index i = 0; i < v.rows; ++i) out(i, j) = comps(idx++);
      break;
    }
  }
  return out;
}

bool Point::has(const VarRef& v) const { return values_.count(v.id) > 0; }

const Matrix& Point::at(const VarRef& v) const {
  auto it = values_.find(v.id);
  if (it == values_.end()) throw UsageError("point has no value for variable " + v.name);
  if (it->second.rows() != v.rows || it->second.cols() != v.cols)
    throw UsageError("point value shape mismatch for variable " + v.name);
  return it->second;
}

void Point::set(const VarRef& v, const Matrix& value) {
  if (value.rows() != v.rows || value.cols() != v.cols)
    throw UsageError("value shape does not match variable " + v.name);
  values_[v.id] = value;
}

double Point::scalar(const VarRef& v) const {
  if (v.kind != VarKind::Scalar) throw UsageError(v.name + " is not scalar");
  return at(v)(0, 0);
}

void Point::set_scalar(const VarRef& v, double value) {
  if (v.kind != VarKind::Scalar) throw UsageError(v.name + " is not scalar");
  values_[v.id] = Matrix::Constant(1, 1, value);
}

SymMatrix eval_lmi(const AffineLmi& lmi, const Point& point) {
  Matrix M = lmi.constant.mat();
  for (const auto& term : lmi.terms) {
    const Vector y = flatten_value(term.var, point.at(term.var));
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      if (y(k) != 0.0) M += y(k) * term.comps[static_cast<std::size_t>(k)];
    }
  }
  return SymMatrix(M);
}

VarRef Program::add_scalar(const std::string& name) {
  VarRef v;
  v.id = static_cast<int>(vars_.size());
  v.kind = VarKind::Scalar;
  v.rows = v.cols = 1;
  v.offset = total_components_;
  v.size = 1;
  v.name = name;
  vars_.push_back(v);
  total_components_ += v.size;
  return v;
}

VarRef Program::add_sym(const std::string& name, Eigen::Index dim) {
  if (dim <= 0) throw InputError("symmetric variable dimension must be positive");
  VarRef v;
  v.id = static_cast<int>(vars_.size());
  v.kind = VarKind::Symmetric;
  v.rows = v.cols = dim;
  v.offset = total_components_;
  v.size = dim * (dim + 1) / 2;
  v.name = name;
  vars_.push_back(v);
  total_components_ += v.size;
  return v;
}

VarRef Program::add_rect(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (rows <= 0 || cols <= 0) throw InputError("rectangular variable shape must be positive");
  VarRef v;
  v.id = static_cast<int>(vars_.size());
  v.kind = VarKind::Rectangular;
  v.rows = rows;
  v.cols = cols;
  v.offset = total_components_;
  v.size = rows * cols;
  v.name = name;
  vars_.push_back(v);
  total_components_ += v.size;
  return v;
}

namespace {

// <W, V> = sum_ij W_ij V_ij; the packed off-diagonal component of a symmetric
// variable carries both mirrored entries, hence the doubled weight.
Vector objective_weight_components(const Program::LinearTerm& t) {
  if (t.weights.rows() != t.var.rows || t.weights.cols() != t.var.cols)
    throw UsageError("objective weight shape mismatch for variable " + t.var.name);
  if (t.var.kind != VarKind::Symmetric) return flatten_value(t.var, t.weights);
  const Matrix W = 0.5 * (t.weights + t.weights.transpose());
  Vector out(component_count(t.var));
  Eigen::Index idx = 0;
  for (Eigen::Index j = 0; j < t.var.rows; ++j)
    for (Eigen::Index i = j; i < t.var.rows; ++i) out(idx++) = (i == j) ? W(i, j) : 2.0 * W(i, j);
  return out;
}

}  // namespace

void Program::set_objective(const std::vector<LinearTerm>& terms, bool maximize) {
  if (has_objective_) throw UsageError("objective already set");
  objective_ = Vector::Zero(total_components_);
  for (const auto& t : terms) {
    if (t.var.id < 0 || t.var.id >= static_cast<int>(vars_.size()) ||
        vars_[static_cast<std::size_t>(t.var.id)].offset != t.var.offset)
      throw UsageError("objective references a variable not in this program");
    objective_.segment(t.var.offset, component_count(t.var)) += objective_weight_components(t);
  }
  has_objective_ = true;
  maximize_ = maximize;
}

void Program::set_objective(const VarRef& v, bool maximize) {
  if (v.kind != VarKind::Scalar) throw UsageError("shorthand objective needs a scalar variable");
  set_objective(std::vector<LinearTerm>{{v, Matrix::Identity(1, 1)}}, maximize);
}

void Program::add_lmi(AffineLmi lmi) {
  if (lmi.dim <= 0 || lmi.constant.dim() != lmi.dim)
    throw InputError("LMI constant dimension mismatch in " + lmi.label);
  for (const auto& term : lmi.terms) {
    if (term.var.id < 0 || term.var.id >= static_cast<int>(vars_.size()))
      throw InputError("LMI " + lmi.label + " references an unknown variable");
    const VarRef& own = vars_[static_cast<std::size_t>(term.var.id)];
    if (own.offset != term.var.offset || own.rows != term.var.rows || own.cols != term.var.cols)
      throw InputError("LMI " + lmi.label + " references a variable from another program");
    if (static_cast<Eigen::Index>(term.comps.size()) != component_count(term.var))
      throw InputError("LMI " + lmi.label + " has a malformed term for " + term.var.name);
    for (const Matrix& C : term.comps)
      if (C.rows() != lmi.dim || C.cols() != lmi.dim)
        throw InputError("LMI " + lmi.label + " coefficient dimension mismatch");
  }
  lmis_.push_back(std::move(lmi));
}

VarRef Program::var(const std::string& name) const {
  for (const auto& v : vars_)
    if (v.name == name) return v;
  throw UsageError("no variable named " + name);
}

const Vector& Program::objective() const {
  if (!has_objective_) throw UsageError("program has no objective");
  return objective_;
}

double Program::objective_value(const Point& point) const {
  const Vector& c = objective();
  double val = 0.0;
  for (const auto& v : vars_) {
    const Vector y = flatten_value(v, point.at(v));
    val += c.segment(v.offset, v.size).dot(y);
  }
  return val;
}

Program build_program() { return Program{}; }

LmiBuilder::LmiBuilder(std::string label, std::vector<Eigen::Index> block_dims)
    : label_(std::move(label)), block_dims_(std::move(block_dims)) {
  if (block_dims_.empty()) throw InputError("LMI needs at least one block");
  offsets_.resize(block_dims_.size());
  for (std::size_t b = 0; b < block_dims_.size(); ++b) {
    if (block_dims_[b] <= 0) throw InputError("block dimensions must be positive");
    offsets_[b] = dim_;
    dim_ += block_dims_[b];
  }
  constant_ = Matrix::Zero(dim_, dim_);
}

void LmiBuilder::check_block(int br, int bc, const Matrix& block) const {
  if (br < 0 || bc < 0 || br >= static_cast<int>(block_dims_.size()) ||
      bc >= static_cast<int>(block_dims_.size()))
    throw InputError(label_ + ": block index out of range");
  if (block.rows() != block_dims_[static_cast<std::size_t>(br)] ||
      block.cols() != block_dims_[static_cast<std::size_t>(bc)])
    throw InputError(label_ + ": block shape mismatch at (" + std::to_string(br) + "," +
                     std::to_string(bc) + ")");
}

void LmiBuilder::accumulate(Matrix& target, int br, int bc, const Matrix& block) const {
  const auto rb = static_cast<std::size_t>(br);
  const auto cb = static_cast<std::size_t>(bc);
  target.block(offsets_[rb], offsets_[cb], block_dims_[rb], block_dims_[cb]) += block;
  if (br != bc)
    target.block(offsets_[cb], offsets_[rb], block_dims_[cb], block_dims_[rb]) +=
        block.transpose();
}

LmiBuilder& LmiBuilder::constant(int br, int bc, const Matrix& block) {
  check_block(br, bc, block);
  accumulate(constant_, br, bc, block);
  return *this;
}

LmiBuilder& LmiBuilder::term(int br, int bc, const VarRef& v, const Matrix& left,
                             const Matrix& right, double scale) {
  if (left.cols() != v.rows || right.rows() != v.cols)
    throw InputError(label_ + ": term factor shapes do not match variable " + v.name);
  check_block(br, bc, Matrix::Zero(left.rows(), right.cols()));
  auto it = term_index_.find(v.id);
  if (it == term_index_.end()) {
    term_index_[v.id] = terms_.size();
    terms_.emplace_back(v, std::vector<Matrix>(static_cast<std::size_t>(component_count(v)),
                                               Matrix::Zero(dim_, dim_)));
    it = term_index_.find(v.id);
  }
  auto& comps = terms_[it->second].second;
  for (Eigen::Index k = 0; k < component_count(v); ++k) {
    const Matrix contrib = scale * left * component_basis(v, k) * right;
    accumulate(comps[static_cast<std::size_t>(k)], br, bc, contrib);
  }
  return *this;
}

LmiBuilder& LmiBuilder::scalar_term(int br, int bc, const VarRef& v, const Matrix& shape,
                                    double scale) {
  if (v.kind != VarKind::Scalar) throw InputError(label_ + ": scalar_term needs a scalar variable");
  check_block(br, bc, shape);
  auto it = term_index_.find(v.id);
  if (it == term_index_.end()) {
    term_index_[v.id] = terms_.size();
    terms_.emplace_back(v, std::vector<Matrix>(1, Matrix::Zero(dim_, dim_)));
    it = term_index_.find(v.id);
  }
  accumulate(terms_[it->second].second[0], br, bc, scale * shape);
  return *this;
}

AffineLmi LmiBuilder::build() const {
  AffineLmi lmi;
  lmi.label = label_;
  lmi.dim = dim_;
  lmi.constant = SymMatrix(constant_);
  for (const auto& [var, comps] : terms_) {
    LmiTerm term;
    term.var = var;
    term.comps.reserve(comps.size());
    for (const Matrix& C : comps) term.comps.push_back(0.5 * (C + C.transpose()));
    lmi.terms.push_back(std::move(term));
  }
  return lmi;
}

std::vector<double> constraint_margins(const Program& prog, const Point& point) {
  std::vector<double> margins;
  margins.reserve(prog.lmis().size());
  for (const auto& lmi : prog.lmis()) margins.push_back(psd_margin(eval_lmi(lmi, point)));
  return margins;
}

double check_residuals(const Program& prog, const Point& point) {
  double worst = 0.0;
  for (double m : constraint_margins(prog, point)) worst = std::min(worst, m);
  return worst;
}

namespace {

nlohmann::json matrix_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

const char* kind_name(VarKind k) {
  switch (k) {
    case VarKind::Scalar:
      return "scalar";
    case VarKind::Symmetric:
      return "symmetric";
    case VarKind::Rectangular:
      return "rectangular";
  }
  return "unknown";
}

}  // namespace

std::string dump_json(const Program& prog) {
  nlohmann::json doc;
  doc["variables"] = nlohmann::json::array();
  for (const auto& v : prog.vars()) {
    doc["variables"].push_back({{"id", v.id},
                                {"name", v.name},
                                {"kind", kind_name(v.kind)},
                                {"rows", v.rows},
                                {"cols", v.cols},
                                {"offset", v.offset},
                                {"size", v.size}});
  }
  if (prog.has_objective()) {
    std::vector<double> c(prog.objective().data(),
                          prog.objective().data() + prog.objective().size());
    doc["objective"] = {{"maximize", prog.maximize()}, {"coefficients", c}};
  }
  doc["constraints"] = nlohmann::json::array();
  for (const auto& lmi : prog.lmis()) {
    nlohmann::json jc;
    jc["label"] = lmi.label;
    jc["dim"] = lmi.dim;
    jc["constant"] = matrix_json(lmi.constant.mat());
    jc["terms"] = nlohmann::json::array();
    for (const auto& term : lmi.terms) {
      nlohmann::json jt;
      jt["variable"] = term.var.id;
      jt["coefficients"] = nlohmann::json::array();
      for (const Matrix& C : term.comps) jt["coefficients"].push_back(matrix_json(C));
      jc["terms"].push_back(std::move(jt));
    }
    doc["constraints"].push_back(std::move(jc));
  }
  return doc.dump(2);
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::Unbounded:
      return "unbounded";
    case SolveStatus::NumericalFailure:
      return "numerical-failure";
  }
  return "unknown";
}

}  // namespace ddhinf
