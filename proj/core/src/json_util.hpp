#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "ddhinf/errors.hpp"
#include "ddhinf/matlin.hpp"

namespace ddhinf::detail {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json matrix_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix json_matrix(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw InputError(what + ": expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw InputError(what + ": ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& cell = row[static_cast<std::size_t>(c)];
      if (!cell.is_number()) throw InputError(what + ": non-numeric entry");
      M(i, c) = cell.get<double>();
    }
  }
  return M;
}

inline nlohmann::json vector_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline Vector json_vector(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto& cell = j[static_cast<std::size_t>(i)];
    if (!cell.is_number()) throw InputError(what + ": non-numeric entry");
    v(i) = cell.get<double>();
  }
  return v;
}

class Fnv1a {
 public:
  void update(const std::string& s) {
    for (char ch : s) {
      h_ ^= static_cast<unsigned char>(ch);
      h_ *= 0x100000001b3ULL;
    }
  }
  void update(double v) { update(fmt17(v)); }
  void update(const Matrix& M) {
    update(std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      for (Eigen::Index i = 0; i < M.rows(); ++i) update(M(i, j));
  }
  std::string hex() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace ddhinf::detail
