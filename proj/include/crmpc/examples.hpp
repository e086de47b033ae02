#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "crmpc/model.hpp"

namespace crmpc {

/// The six benchmark problems.
enum class ExampleId { kMimo30, kMimo75, kMimoRed30, kAcc25, kInpe50, kComa40 };

inline constexpr std::array<ExampleId, 6> kAllExamples = {
    ExampleId::kMimo30, ExampleId::kMimo75, ExampleId::kMimoRed30,
    ExampleId::kAcc25,  ExampleId::kInpe50, ExampleId::kComa40};

inline std::string to_string(ExampleId id) {
  switch (id) {
    case ExampleId::kMimo30: return "MIMO30";
    case ExampleId::kMimo75: return "MIMO75";
    case ExampleId::kMimoRed30: return "MIMORED30";
    case ExampleId::kAcc25: return "ACC25";
    case ExampleId::kInpe50: return "INPE50";
    case ExampleId::kComa40: return "COMA40";
  }
  return "?";
}

/// Case-insensitive lookup ("mimo30", "MIMO30").
inline std::optional<ExampleId> parse_example(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (ExampleId id : kAllExamples)
    if (to_string(id) == upper) return id;
  return std::nullopt;
}

namespace detail {

inline Eigen::MatrixXd rows_of(int rows, int cols, std::initializer_list<double> values) {
  Eigen::MatrixXd m(rows, cols);
  auto it = values.begin();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = *it++;
  return m;
}

// Zero-order-hold discretization of the 3x3 MIMO transfer matrix, Ts = 1 s,
// uncontrollable states removed. Printed precision.
inline Eigen::MatrixXd mimo_a() {
  return rows_of(10, 10, {
      8.34e-01, 1.81e-01, 7.27e-02, -5.61e-02, -1.59e-02, 4.28e-03, -1.95e-03, -6.74e-03, -5.56e-03, -7.94e-03,
      -1.02e-01, 9.38e-01, -5.11e-03, -1.62e-01, -1.44e-02, 2.39e-03, 1.19e-03, -4.30e-03, 2.66e-03, 3.95e-03,
      -4.09e-02, 1.37e-01, 8.91e-01, 3.14e-01, 1.02e-02, 9.60e-04, 4.77e-04, -1.73e-03, 1.07e-03, 1.59e-03,
      3.16e-02, 1.50e-02, -1.37e-01, 8.62e-01, -1.55e-02, -7.41e-04, -3.68e-04, 1.34e-03, -8.27e-04, -1.23e-03,
      8.94e-03, 7.21e-03, -8.31e-03, 4.17e-02, 8.84e-01, -2.10e-04, -1.04e-04, 3.78e-04, -2.34e-04, -3.47e-04,
      -2.41e-03, -2.00e-03, 1.39e-03, 1.30e-03, -1.74e-02, 9.18e-01, -2.52e-01, -1.20e-02, 4.08e-02, -5.90e-04,
      1.09e-03, 9.08e-04, -6.33e-04, -5.90e-04, 7.92e-03, 1.62e-01, 9.18e-01, 4.38e-02, 2.21e-02, 5.48e-02,
      3.79e-03, 3.14e-03, -2.19e-03, -2.04e-03, 2.74e-02, -9.34e-03, -1.06e-01, 9.27e-01, 1.35e-01, -1.21e-02,
      3.13e-03, 2.59e-03, -1.81e-03, -1.69e-03, 2.26e-02, 3.53e-04, 7.34e-03, -1.30e-01, 9.56e-01, 1.39e-01,
      4.47e-03, 3.70e-03, -2.58e-03, -2.41e-03, 3.23e-02, -1.05e-04, -5.21e-05, 1.89e-04, -1.17e-04, 1.00e+00});
}

inline Eigen::MatrixXd mimo_b() {
  return rows_of(10, 3, {
      -4.58e-01, 3.06e-17, 3.30e-19,
      -1.69e-01, 5.31e-02, -3.52e-05,
      2.77e-01, -4.41e-02, -1.41e-05,
      -2.98e-01, -3.67e-02, 1.09e-05,
      1.97e-02, 5.20e-01, 3.09e-06,
      6.21e-04, -5.04e-03, 4.69e-01,
      -2.82e-04, 2.29e-03, 7.61e-01,
      -9.76e-04, 7.92e-03, 3.26e-01,
      -8.06e-04, 6.53e-03, -7.85e-02,
      -1.15e-03, 9.33e-03, -1.56e-01});
}

// Inverted pendulum on a cart, Ts = 0.05 s; x = (s, phi, ds, dphi).
inline Eigen::MatrixXd inpe_a() {
  return rows_of(4, 4, {
      1.00e+00, -1.07e-03, 4.77e-02, -1.11e-05,
      0.00e+00, 1.03e+00, 4.73e-03, 5.03e-02,
      0.00e+00, -4.22e-02, 9.09e-01, -8.00e-04,
      0.00e+00, 1.08e+00, 1.87e-01, 1.02e+00});
}

inline Eigen::MatrixXd inpe_b() {
  return rows_of(4, 1, {
      3.63e-04,
      -7.53e-04,
      1.43e-02,
      -2.97e-02});
}

// Chain of six unit masses and springs between two walls, Ts = 0.5 s.
inline Eigen::MatrixXd coma_a() {
  return rows_of(12, 12, {
      7.63e-01, 1.15e-01, 2.48e-03, 2.09e-05, 9.42e-08, 2.63e-10, 4.60e-01, 1.98e-02, 2.51e-04, 1.51e-06, 5.26e-09, 1.20e-11,
      1.15e-01, 7.65e-01, 1.15e-01, 2.48e-03, 2.09e-05, 9.42e-08, 1.98e-02, 4.60e-01, 1.98e-02, 2.51e-04, 1.51e-06, 5.26e-09,
      2.48e-03, 1.15e-01, 7.65e-01, 1.15e-01, 2.48e-03, 2.09e-05, 2.51e-04, 1.98e-02, 4.60e-01, 1.98e-02, 2.51e-04, 1.51e-06,
      2.09e-05, 2.48e-03, 1.15e-01, 7.65e-01, 1.15e-01, 2.48e-03, 1.51e-06, 2.51e-04, 1.98e-02, 4.60e-01, 1.98e-02, 2.51e-04,
      9.42e-08, 2.09e-05, 2.48e-03, 1.15e-01, 7.65e-01, 1.15e-01, 5.26e-09, 1.51e-06, 2.51e-04, 1.98e-02, 4.60e-01, 1.98e-02,
      2.63e-10, 9.42e-08, 2.09e-05, 2.48e-03, 1.15e-01, 7.63e-01, 1.20e-11, 5.26e-09, 1.51e-06, 2.51e-04, 1.98e-02, 4.60e-01,
      -8.99e-01, 4.20e-01, 1.93e-02, 2.48e-04, 1.50e-06, 5.24e-09, 7.63e-01, 1.15e-01, 2.48e-03, 2.09e-05, 9.42e-08, 2.63e-10,
      4.20e-01, -8.80e-01, 4.20e-01, 1.93e-02, 2.48e-04, 1.50e-06, 1.15e-01, 7.65e-01, 1.15e-01, 2.48e-03, 2.09e-05, 9.42e-08,
      1.93e-02, 4.20e-01, -8.80e-01, 4.20e-01, 1.93e-02, 2.48e-04, 2.48e-03, 1.15e-01, 7.65e-01, 1.15e-01, 2.48e-03, 2.09e-05,
      2.48e-04, 1.93e-02, 4.20e-01, -8.80e-01, 4.20e-01, 1.93e-02, 2.09e-05, 2.48e-03, 1.15e-01, 7.65e-01, 1.15e-01, 2.48e-03,
      1.50e-06, 2.48e-04, 1.93e-02, 4.20e-01, -8.80e-01, 4.20e-01, 9.42e-08, 2.09e-05, 2.48e-03, 1.15e-01, 7.65e-01, 1.15e-01,
      5.24e-09, 1.50e-06, 2.48e-04, 1.93e-02, 4.20e-01, -8.99e-01, 2.63e-10, 9.42e-08, 2.09e-05, 2.48e-03, 1.15e-01, 7.63e-01});
}

inline Eigen::MatrixXd coma_b() {
  return rows_of(12, 3, {
      1.17e-01, 2.11e-05, 9.48e-08,
      -1.17e-01, 2.52e-03, 2.11e-05,
      -2.50e-03, 1.20e-01, 2.52e-03,
      -2.10e-05, 5.02e-13, 1.20e-01,
      -9.45e-08, -1.20e-01, 9.48e-08,
      -2.64e-10, -2.52e-03, -1.20e-01,
      4.40e-01, 2.51e-04, 1.51e-06,
      -4.40e-01, 1.98e-02, 2.51e-04,
      -1.96e-02, 4.60e-01, 1.98e-02,
      -2.50e-04, 1.20e-11, 4.60e-01,
      -1.50e-06, -4.60e-01, 1.51e-06,
      -5.25e-09, -1.98e-02, -4.59e-01});
}

inline MpcSpec lqr_terminal_spec(std::string name, Eigen::MatrixXd a, Eigen::MatrixXd b,
                                 Eigen::MatrixXd q_mat, Eigen::MatrixXd r_mat,
                                 int horizon, HalfspaceSet state_set,
                                 HalfspaceSet input_set) {
  MpcSpec spec;
  spec.name = std::move(name);
  spec.sys = {std::move(a), std::move(b)};
  spec.horizon = horizon;
  spec.q_mat = std::move(q_mat);
  spec.r_mat = std::move(r_mat);
  spec.p_mat = dare(spec.sys.a, spec.sys.b, spec.q_mat, spec.r_mat);
  spec.terminal_from_dare = true;
  spec.state_set = std::move(state_set);
  spec.terminal_set = spec.state_set;
  spec.input_set = std::move(input_set);
  spec.prestabilize = true;
  return spec;
}

inline MpcSpec mimo_spec(std::string name, int horizon) {
  return lqr_terminal_spec(std::move(name), mimo_a(), mimo_b(),
                           Eigen::MatrixXd::Identity(10, 10),
                           0.25 * Eigen::MatrixXd::Identity(3, 3), horizon,
                           HalfspaceSet::symmetric_box(10, 10.0),
                           HalfspaceSet::symmetric_box(3, 1.0));
}

// Adaptive cruise control, x = (e, v_r, v_t, a_h(t-1)), Ts = 0.1 s.
inline MpcSpec acc_spec() {
  constexpr double ts = 0.1;
  MpcSpec spec;
  spec.name = "ACC25";
  spec.sys.a = rows_of(4, 4, {1.0, -ts, 0.0, 1.5 * ts + 0.5 * ts * ts,
                              0.0, 1.0, 0.0, -ts,
                              0.0, 0.0, 1.0, 0.0,
                              0.0, 0.0, 0.0, 1.0});
  spec.sys.b = rows_of(4, 1, {0.0, 0.0, 0.0, 1.0});
  spec.horizon = 25;
  spec.q_mat = Eigen::Vector4d(2.5, 5.0, 0.0, 1.0).asDiagonal();
  spec.r_mat = Eigen::MatrixXd::Identity(1, 1);
  spec.p_mat = Eigen::MatrixXd::Zero(4, 4);
  // Distance window 3.5 + 1.5 v_h - 200 <= e <= 3.5 + 1.5 v_h with
  // v_h = v_t - v_r, host speed 0 <= v_h <= 50, 0 <= v_t <= 50,
  // -3 <= a_h <= 2.
  spec.state_set.c = rows_of(8, 4, {1.0, 1.5, -1.5, 0.0,
                                    -1.0, -1.5, 1.5, 0.0,
                                    0.0, 1.0, -1.0, 0.0,
                                    0.0, -1.0, 1.0, 0.0,
                                    0.0, 0.0, 1.0, 0.0,
                                    0.0, 0.0, -1.0, 0.0,
                                    0.0, 0.0, 0.0, 1.0,
                                    0.0, 0.0, 0.0, -1.0});
  spec.state_set.d.resize(8);
  spec.state_set.d << 3.5, 196.5, 0.0, 50.0, 50.0, 0.0, 2.0, 3.0;
  spec.terminal_set = spec.state_set;
  spec.input_set = HalfspaceSet::symmetric_box(1, 0.3);
  spec.prestabilize = false;
  spec.include_step0_state_rows = true;
  // v_r <= v_t and v_t >= 0 are tight at the origin.
  spec.strict_state_interior = false;
  // v_t is constant and unweighted; convergence is judged on e, v_r, a_h.
  spec.regulated_states = {0, 1, 3};
  return spec;
}

}  // namespace detail

/// Builds one of the six benchmark problems.
inline MpcSpec build_example(ExampleId id) {
  using detail::lqr_terminal_spec;
  switch (id) {
    case ExampleId::kMimo30:
      return detail::mimo_spec("MIMO30", 30);
    case ExampleId::kMimo75:
      return detail::mimo_spec("MIMO75", 75);
    case ExampleId::kMimoRed30: {
      MpcSpec spec = detail::mimo_spec("MIMORED30", 30);
      spec.remove_redundant_rows = true;
      return spec;
    }
    case ExampleId::kAcc25:
      return detail::acc_spec();
    case ExampleId::kInpe50: {
      constexpr double pi = std::numbers::pi;
      Eigen::Vector4d hi(1.0, pi / 3.0, 9.0, 2.0 * pi);
      return lqr_terminal_spec("INPE50", detail::inpe_a(), detail::inpe_b(),
                               Eigen::MatrixXd::Identity(4, 4),
                               0.01 * Eigen::MatrixXd::Identity(1, 1), 50,
                               HalfspaceSet::box(-hi, hi),
                               HalfspaceSet::symmetric_box(1, 10.0));
    }
    case ExampleId::kComa40:
      return lqr_terminal_spec("COMA40", detail::coma_a(), detail::coma_b(),
                               Eigen::MatrixXd::Identity(12, 12),
                               Eigen::MatrixXd::Identity(3, 3), 40,
                               HalfspaceSet::symmetric_box(12, 4.0),
                               HalfspaceSet::symmetric_box(3, 0.5));
  }
  throw Error("build_example: unknown example id");
}

}  // namespace crmpc
