#pragma once

// JSON archive for fitted models and fit reports. The layout carries
// explicit dimensions; numbers round-trip exactly (shortest-representation
// doubles). One archive holds Z, the per-network (or shared) lambda vectors
// and Q matrices, the variant tag, K, gamma and the fit report.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgraf/model.hpp"
#include "mgraf/types.hpp"

namespace mgraf {

using Json = nlohmann::json;

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

inline Matrix matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  ensure(static_cast<Eigen::Index>(data.size()) == rows, "matrix_from_json: row count mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = data.at(static_cast<std::size_t>(r));
    ensure(static_cast<Eigen::Index>(row.size()) == cols, "matrix_from_json: column count mismatch");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

inline Json report_to_json(const FitReport& r) {
  return Json{{"loglik_trace", r.loglik_trace},
              {"converged", r.converged},
              {"iterations", r.iterations},
              {"epsilon", r.epsilon},
              {"gamma", r.gamma},
              {"logistic_all_converged", r.logistic_all_converged},
              {"logistic_seconds", r.logistic_seconds},
              {"eigen_seconds", r.eigen_seconds}};
}

inline FitReport report_from_json(const Json& j) {
  FitReport r;
  r.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
  r.converged = j.at("converged").get<bool>();
  r.iterations = j.at("iterations").get<int>();
  r.epsilon = j.at("epsilon").get<double>();
  r.gamma = j.at("gamma").get<double>();
  r.logistic_all_converged = j.at("logistic_all_converged").get<bool>();
  r.logistic_seconds = j.at("logistic_seconds").get<std::vector<double>>();
  r.eigen_seconds = j.at("eigen_seconds").get<std::vector<double>>();
  return r;
}

inline Json model_to_json(const MgrafModel& m, const FitReport* report = nullptr) {
  Json j{{"format", "mgraf-model"},
         {"version", 1},
         {"variant", variant_name(m.variant)},
         {"nodes", m.num_nodes},
         {"networks", m.num_networks},
         {"rank", m.rank},
         {"gamma", m.gamma},
         {"Z", matrix_to_json(m.Z)}};
  Json lambdas = Json::array();
  for (const auto& lam : m.lambda) {
    lambdas.push_back(std::vector<double>(lam.data(), lam.data() + lam.size()));
  }
  j["lambda"] = std::move(lambdas);
  Json qs = Json::array();
  for (const auto& q : m.Q) qs.push_back(matrix_to_json(q));
  j["Q"] = std::move(qs);
  if (report) j["fit_report"] = report_to_json(*report);
  return j;
}

inline MgrafModel model_from_json(const Json& j) {
  ensure(j.at("format").get<std::string>() == "mgraf-model", "model_from_json: not a model archive");
  MgrafModel m;
  m.variant = variant_from_name(j.at("variant").get<std::string>());
  m.num_nodes = j.at("nodes").get<int>();
  m.num_networks = j.at("networks").get<int>();
  m.rank = j.at("rank").get<int>();
  m.gamma = j.at("gamma").get<double>();
  m.Z = matrix_from_json(j.at("Z"));
  ensure(m.Z.rows() == m.num_nodes && m.Z.cols() == m.num_nodes, "model_from_json: Z shape");
  for (const auto& lj : j.at("lambda")) {
    const auto v = lj.get<std::vector<double>>();
    ensure(static_cast<int>(v.size()) == m.rank, "model_from_json: lambda length != K");
    m.lambda.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  for (const auto& qj : j.at("Q")) {
    Matrix q = matrix_from_json(qj);
    ensure(q.rows() == m.num_nodes && q.cols() == m.rank, "model_from_json: Q shape");
    m.Q.push_back(std::move(q));
  }
  const std::size_t n = static_cast<std::size_t>(m.num_networks);
  ensure(m.Q.size() == n || m.Q.size() == 1, "model_from_json: Q count");
  ensure(m.lambda.size() == n || m.lambda.size() == 1, "model_from_json: lambda count");
  return m;
}

inline void save_model(const MgrafModel& m, const std::string& path,
                       const FitReport* report = nullptr) {
  std::ofstream out(path);
  ensure(out.good(), "save_model: cannot open " + path);
  out << model_to_json(m, report).dump(1) << "\n";
  ensure(out.good(), "save_model: write failed for " + path);
}

inline MgrafModel load_model(const std::string& path, FitReport* report = nullptr) {
  std::ifstream in(path);
  ensure(in.good(), "load_model: unreadable file: " + path);
  Json j = Json::parse(in);
  if (report && j.contains("fit_report")) *report = report_from_json(j.at("fit_report"));
  return model_from_json(j);
}

}  // namespace mgraf
