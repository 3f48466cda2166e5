// Copyright 2026 The dfmkit Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DFMKIT_MODEL_HPP_
#define DFMKIT_MODEL_HPP_

#include <cmath>
#include <complex>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace dfmkit {

using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Raised when an input document or model violates the format contract.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a numerical computation cannot be completed.
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Half-open input/output index ranges owned by one control station.
struct BlockIndex {
  int station = 0;  // 0-based
  int input_begin = 0;
  int input_end = 0;
  int output_begin = 0;
  int output_end = 0;

  int input_width() const { return input_end - input_begin; }
  int output_width() const { return output_end - output_begin; }
};

/// Ordered per-station (input count, output count) split of the plant.
class StationPartition {
 public:
  struct Station {
    int inputs = 0;
    int outputs = 0;
  };

  StationPartition() = default;

  explicit StationPartition(std::vector<Station> stations)
      : stations_(std::move(stations)) {
    if (stations_.size() < 2) {
      throw ValidationError("partition must define at least 2 stations");
    }
    int in = 0;
    int out = 0;
    for (std::size_t i = 0; i < stations_.size(); ++i) {
      if (stations_[i].inputs < 1 || stations_[i].outputs < 1) {
        throw ValidationError("station " + std::to_string(i + 1) +
                              " must own at least one input and one output");
      }
      in_offsets_.push_back(in);
      out_offsets_.push_back(out);
      in += stations_[i].inputs;
      out += stations_[i].outputs;
    }
    in_offsets_.push_back(in);
    out_offsets_.push_back(out);
  }

  int size() const { return static_cast<int>(stations_.size()); }
  int total_inputs() const { return in_offsets_.back(); }
  int total_outputs() const { return out_offsets_.back(); }
  const Station& station(int i) const { return stations_.at(i); }
  const std::vector<Station>& stations() const { return stations_; }

  BlockIndex block(int i) const {
    return BlockIndex{i, in_offsets_.at(i), in_offsets_.at(i + 1),
                      out_offsets_.at(i), out_offsets_.at(i + 1)};
  }

  bool operator==(const StationPartition& other) const {
    if (stations_.size() != other.stations_.size()) return false;
    for (std::size_t i = 0; i < stations_.size(); ++i) {
      if (stations_[i].inputs != other.stations_[i].inputs ||
          stations_[i].outputs != other.stations_[i].outputs) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<Station> stations_;
  std::vector<int> in_offsets_{0};
  std::vector<int> out_offsets_{0};
};

/// A station-partitioned LTI plant (A, B, C, D). Immutable after
/// construction; all analyses treat it as a value.
struct SystemModel {
  std::string name;
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;
  StationPartition partition;

  int order() const { return static_cast<int>(A.rows()); }
  int inputs() const { return static_cast<int>(B.cols()); }
  int outputs() const { return static_cast<int>(C.rows()); }
  int stations() const { return partition.size(); }

  Matrix input_block(int station) const {
    const BlockIndex b = partition.block(station);
    return B.middleCols(b.input_begin, b.input_width());
  }
  Matrix output_block(int station) const {
    const BlockIndex b = partition.block(station);
    return C.middleRows(b.output_begin, b.output_width());
  }
  Matrix feedthrough_block(int out_station, int in_station) const {
    const BlockIndex bo = partition.block(out_station);
    const BlockIndex bi = partition.block(in_station);
    return D.block(bo.output_begin, bi.input_begin, bo.output_width(),
                   bi.input_width());
  }
};

namespace detail {

inline void require_finite(const Matrix& m, const char* which) {
  if (!m.allFinite()) {
    throw ValidationError(std::string("matrix ") + which +
                          " contains a non-finite entry");
  }
}

inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

inline double spectral_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<ComplexMatrix>(m).singularValues()(0);
}

}  // namespace detail

/// Validates dimensions and finiteness; the only way models enter the kit.
inline SystemModel make_model(std::string name, Matrix a, Matrix b, Matrix c,
                              Matrix d, StationPartition partition) {
  if (a.rows() != a.cols()) {
    throw ValidationError("matrix A must be square, got " +
                          std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()));
  }
  const auto n = a.rows();
  if (b.rows() != n) {
    throw ValidationError("matrix B must have " + std::to_string(n) +
                          " rows to match A, got " + std::to_string(b.rows()));
  }
  if (c.cols() != n) {
    throw ValidationError("matrix C must have " + std::to_string(n) +
                          " columns to match A, got " +
                          std::to_string(c.cols()));
  }
  if (b.cols() != partition.total_inputs()) {
    throw ValidationError(
        "matrix B has " + std::to_string(b.cols()) +
        " columns but the station partition owns " +
        std::to_string(partition.total_inputs()) + " inputs");
  }
  if (c.rows() != partition.total_outputs()) {
    throw ValidationError(
        "matrix C has " + std::to_string(c.rows()) +
        " rows but the station partition owns " +
        std::to_string(partition.total_outputs()) + " outputs");
  }
  if (d.size() == 0) {
    d = Matrix::Zero(c.rows(), b.cols());
  }
  if (d.rows() != c.rows() || d.cols() != b.cols()) {
    throw ValidationError("matrix D must be " + std::to_string(c.rows()) +
                          "x" + std::to_string(b.cols()) + ", got " +
                          std::to_string(d.rows()) + "x" +
                          std::to_string(d.cols()));
  }
  detail::require_finite(a, "A");
  detail::require_finite(b, "B");
  detail::require_finite(c, "C");
  detail::require_finite(d, "D");
  return SystemModel{std::move(name), std::move(a), std::move(b), std::move(c),
                     std::move(d), std::move(partition)};
}

namespace detail {

inline Matrix matrix_from_json(const nlohmann::json& j, const char* which) {
  if (!j.is_array() || j.empty()) {
    throw ValidationError(std::string("matrix ") + which +
                          " must be a non-empty array of rows");
  }
  const std::size_t rows = j.size();
  if (!j[0].is_array()) {
    throw ValidationError(std::string("matrix ") + which +
                          " rows must be arrays");
  }
  const std::size_t cols = j[0].size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ValidationError(std::string("matrix ") + which + " row " +
                            std::to_string(r + 1) +
                            " has inconsistent length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) {
        throw ValidationError(std::string("matrix ") + which +
                              " entry at row " + std::to_string(r + 1) +
                              " is not a number");
      }
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

}  // namespace detail

/// Parses a model document. D defaults to the zero matrix when absent.
inline SystemModel load_model(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model document parse failure: ") +
                          e.what());
  }
  if (!doc.is_object()) {
    throw ValidationError("model document must be a JSON object");
  }
  if (!doc.contains("stations") || !doc["stations"].is_array()) {
    throw ValidationError("model document is missing the \"stations\" array");
  }
  std::vector<StationPartition::Station> sts;
  for (const auto& s : doc["stations"]) {
    if (!s.is_object() || !s.contains("inputs") || !s.contains("outputs")) {
      throw ValidationError(
          "every station entry needs \"inputs\" and \"outputs\" counts");
    }
    sts.push_back({s["inputs"].get<int>(), s["outputs"].get<int>()});
  }
  for (const char* which : {"A", "B", "C"}) {
    if (!doc.contains(which)) {
      throw ValidationError(std::string("model document is missing matrix ") +
                            which);
    }
  }
  Matrix a = detail::matrix_from_json(doc["A"], "A");
  Matrix b = detail::matrix_from_json(doc["B"], "B");
  Matrix c = detail::matrix_from_json(doc["C"], "C");
  Matrix d;
  if (doc.contains("D")) {
    d = detail::matrix_from_json(doc["D"], "D");
  }
  std::string name = doc.value("name", std::string("unnamed"));
  return make_model(std::move(name), std::move(a), std::move(b), std::move(c),
                    std::move(d), StationPartition(std::move(sts)));
}

inline SystemModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open model file: " + path);
  }
  try {
    return load_model(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline SystemModel load_model_from_string(const std::string& text) {
  std::istringstream in(text);
  return load_model(in);
}

namespace detail {

inline nlohmann::ordered_json matrix_to_json(const Matrix& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(m(r, c));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// Serializes a model back into the document format (lossless round-trip).
inline nlohmann::ordered_json model_to_json(const SystemModel& model) {
  nlohmann::ordered_json doc;
  doc["name"] = model.name;
  doc["stations"] = nlohmann::ordered_json::array();
  for (const auto& s : model.partition.stations()) {
    doc["stations"].push_back({{"inputs", s.inputs}, {"outputs", s.outputs}});
  }
  doc["A"] = detail::matrix_to_json(model.A);
  doc["B"] = detail::matrix_to_json(model.B);
  doc["C"] = detail::matrix_to_json(model.C);
  doc["D"] = detail::matrix_to_json(model.D);
  return doc;
}

inline void save_model(const SystemModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot write model file: " + path);
  }
  out << model_to_json(model).dump(2) << "\n";
}

/// Returns the v block descriptors of a model, in station order.
inline std::vector<BlockIndex> station_blocks(const SystemModel& model) {
  std::vector<BlockIndex> blocks;
  blocks.reserve(model.stations());
  for (int i = 0; i < model.stations(); ++i) {
    blocks.push_back(model.partition.block(i));
  }
  return blocks;
}

inline constexpr double kDefaultPbhTol = 1e-9;

/// Per-mode central controllability/observability verdicts (PBH rank test).
struct CentralReport {
  struct ModeStatus {
    Complex value;
    bool controllable = false;
    bool observable = false;
  };
  std::vector<ModeStatus> modes;

  bool all_ok() const {
    for (const auto& m : modes) {
      if (!m.controllable || !m.observable) return false;
    }
    return true;
  }
};

namespace detail {

inline bool pbh_full_rank(const ComplexMatrix& pencil, double tol) {
  Eigen::JacobiSVD<ComplexMatrix> svd(pencil);
  const auto& s = svd.singularValues();
  const Eigen::Index n = std::min(pencil.rows(), pencil.cols());
  if (s(0) == 0.0) return false;
  return s(n - 1) > tol * s(0);
}

}  // namespace detail

/// Rank tests [A - lambda*I, B] and [A^T - lambda*I, C^T] at each eigenvalue.
/// A failed assumption downgrades downstream analyses to warnings, never
/// errors.
inline CentralReport central_check(const SystemModel& model,
                                   double tol = kDefaultPbhTol) {
  const int n = model.order();
  Eigen::EigenSolver<Matrix> es(model.A);
  if (es.info() != Eigen::Success) {
    throw ComputeError("eigensolver failed on A during the central check");
  }
  CentralReport report;
  for (int k = 0; k < n; ++k) {
    const Complex lambda = es.eigenvalues()(k);
    ComplexMatrix ctrb(n, n + model.inputs());
    ctrb.leftCols(n) =
        model.A.cast<Complex>() - lambda * ComplexMatrix::Identity(n, n);
    ctrb.rightCols(model.inputs()) = model.B.cast<Complex>();
    ComplexMatrix obsv(n, n + model.outputs());
    obsv.leftCols(n) = model.A.transpose().cast<Complex>() -
                       lambda * ComplexMatrix::Identity(n, n);
    obsv.rightCols(model.outputs()) = model.C.transpose().cast<Complex>();
    report.modes.push_back({lambda, detail::pbh_full_rank(ctrb, tol),
                            detail::pbh_full_rank(obsv, tol)});
  }
  return report;
}

}  // namespace dfmkit

#endif  // DFMKIT_MODEL_HPP_
