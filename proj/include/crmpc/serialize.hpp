#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "crmpc/condense.hpp"
#include "crmpc/model.hpp"

namespace crmpc {

using Json = nlohmann::json;

namespace detail {

inline Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

inline Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const Json& data = j.at("data");
  require_dims(static_cast<Eigen::Index>(data.size()) == rows, "matrix_from_json: row count");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = data.at(static_cast<std::size_t>(i));
    require_dims(static_cast<Eigen::Index>(row.size()) == cols, "matrix_from_json: column count");
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = row.at(static_cast<std::size_t>(j2)).get<double>();
  }
  return m;
}

inline Json vector_to_json(const Eigen::VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Eigen::VectorXd vector_from_json(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Json set_to_json(const HalfspaceSet& s) {
  return {{"c", matrix_to_json(s.c)}, {"d", vector_to_json(s.d)}};
}

inline HalfspaceSet set_from_json(const Json& j) {
  return {matrix_from_json(j.at("c")), vector_from_json(j.at("d"))};
}

}  // namespace detail

inline Json to_json(const MpcSpec& s) {
  using namespace detail;
  Json j = {{"name", s.name},
            {"a", matrix_to_json(s.sys.a)},
            {"b", matrix_to_json(s.sys.b)},
            {"horizon", s.horizon},
            {"q", matrix_to_json(s.q_mat)},
            {"r", matrix_to_json(s.r_mat)},
            {"p", matrix_to_json(s.p_mat)},
            {"state_set", set_to_json(s.state_set)},
            {"input_set", set_to_json(s.input_set)},
            {"terminal_set", set_to_json(s.terminal_set)},
            {"prestabilize", s.prestabilize},
            {"include_step0_state_rows", s.include_step0_state_rows},
            {"remove_redundant_rows", s.remove_redundant_rows},
            {"strict_state_interior", s.strict_state_interior},
            {"terminal_from_dare", s.terminal_from_dare},
            {"regulated_states", s.regulated_states}};
  if (s.input_feedback) j["input_feedback"] = matrix_to_json(*s.input_feedback);
  return j;
}

inline MpcSpec spec_from_json(const Json& j) {
  using namespace detail;
  MpcSpec s;
  s.name = j.value("name", "");
  s.sys = {matrix_from_json(j.at("a")), matrix_from_json(j.at("b"))};
  s.horizon = j.at("horizon").get<int>();
  s.q_mat = matrix_from_json(j.at("q"));
  s.r_mat = matrix_from_json(j.at("r"));
  s.p_mat = matrix_from_json(j.at("p"));
  s.state_set = set_from_json(j.at("state_set"));
  s.input_set = set_from_json(j.at("input_set"));
  s.terminal_set = set_from_json(j.at("terminal_set"));
  s.prestabilize = j.value("prestabilize", false);
  s.include_step0_state_rows = j.value("include_step0_state_rows", false);
  s.remove_redundant_rows = j.value("remove_redundant_rows", false);
  s.strict_state_interior = j.value("strict_state_interior", true);
  s.terminal_from_dare = j.value("terminal_from_dare", false);
  s.regulated_states = j.value("regulated_states", std::vector<int>{});
  if (j.contains("input_feedback")) s.input_feedback = matrix_from_json(j.at("input_feedback"));
  return s;
}

inline Json to_json(const CondensedQp& qp) {
  using namespace detail;
  Json tags = Json::array();
  for (const RowTag& t : qp.row_tags) tags.push_back({t.step, to_string(t.kind), t.set_row});
  Json j = {{"h", matrix_to_json(qp.h_mat)},     {"f", matrix_to_json(qp.f_mat)},
            {"y", matrix_to_json(qp.y_mat)},     {"g", matrix_to_json(qp.g_mat)},
            {"e", matrix_to_json(qp.e_mat)},     {"w", vector_to_json(qp.w_vec)},
            {"plant_a", matrix_to_json(qp.plant_a)}, {"plant_b", matrix_to_json(qp.plant_b)},
            {"stage_q", matrix_to_json(qp.stage_q)}, {"stage_r", matrix_to_json(qp.stage_r)},
            {"horizon", qp.horizon},             {"row_tags", std::move(tags)}};
  if (qp.k_gain) j["k_gain"] = matrix_to_json(*qp.k_gain);
  return j;
}

inline CondensedQp condensed_from_json(const Json& j) {
  using namespace detail;
  CondensedQp qp;
  qp.h_mat = matrix_from_json(j.at("h"));
  qp.f_mat = matrix_from_json(j.at("f"));
  qp.y_mat = matrix_from_json(j.at("y"));
  qp.g_mat = matrix_from_json(j.at("g"));
  qp.e_mat = matrix_from_json(j.at("e"));
  qp.w_vec = vector_from_json(j.at("w"));
  qp.plant_a = matrix_from_json(j.at("plant_a"));
  qp.plant_b = matrix_from_json(j.at("plant_b"));
  qp.stage_q = matrix_from_json(j.at("stage_q"));
  qp.stage_r = matrix_from_json(j.at("stage_r"));
  qp.horizon = j.at("horizon").get<int>();
  for (const Json& t : j.at("row_tags")) {
    const std::string kind = t.at(1).get<std::string>();
    RowTag tag{t.at(0).get<int>(), RowKind::kState, t.at(2).get<int>()};
    for (RowKind k : {RowKind::kState, RowKind::kInput, RowKind::kTerminal, RowKind::kStep0State})
      if (to_string(k) == kind) tag.kind = k;
    qp.row_tags.push_back(tag);
  }
  if (j.contains("k_gain")) qp.k_gain = matrix_from_json(j.at("k_gain"));
  detail::require_dims(qp.g_mat.rows() == qp.w_vec.size() && qp.e_mat.rows() == qp.w_vec.size(),
                       "condensed_from_json: row counts differ");
  qp.finalize();
  return qp;
}

}  // namespace crmpc
