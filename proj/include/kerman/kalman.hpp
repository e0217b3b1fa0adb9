#pragma once

#include <Eigen/Dense>

#include "kerman/error.hpp"
#include "kerman/geometry.hpp"

namespace kerman {

struct KalmanConfig {
  double q = 0.01;   // process noise (white acceleration), per frame^2
  double r = 4.0;    // measurement noise, pixels^2
  double p0 = 100.0; // initial variance, pixels^2

  void validate() const {
    if (!(q > 0.0 && r > 0.0 && p0 > 0.0)) throw Error(ErrorKind::InvalidConfig, "kalman q, r, p0 must be > 0");
  }
};

// Constant-velocity state (cx, cy, vx, vy) with dt = 1 frame.
struct KalmanState {
  Eigen::Vector4d state = Eigen::Vector4d::Zero();
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();

  Point2 center() const noexcept { return {state(0), state(1)}; }
  Vec2 velocity() const noexcept { return {state(2), state(3)}; }
};

namespace detail {

inline Eigen::Matrix4d transition() {
  Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
  f(0, 2) = 1.0;
  f(1, 3) = 1.0;
  return f;
}

inline Eigen::Matrix<double, 2, 4> observation() {
  Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  return h;
}

}  // namespace detail

inline KalmanState kalman_init(Point2 c, const KalmanConfig& cfg) {
  KalmanState s;
  s.state << c.x, c.y, 0.0, 0.0;
  s.covariance = cfg.p0 * Eigen::Matrix4d::Identity();
  return s;
}

inline KalmanState kalman_predict(const KalmanState& s, const KalmanConfig& cfg) {
  static const Eigen::Matrix4d f = detail::transition();
  const Eigen::Vector4d qdiag(0.25 * cfg.q, 0.25 * cfg.q, cfg.q, cfg.q);
  KalmanState out;
  out.state = f * s.state;
  out.covariance = f * s.covariance * f.transpose();
  out.covariance.diagonal() += qdiag;
  return out;
}

// Position measurement update, Joseph-form covariance.
inline KalmanState kalman_update(const KalmanState& s, Point2 z, const KalmanConfig& cfg) {
  static const Eigen::Matrix<double, 2, 4> h = detail::observation();
  const Eigen::Matrix2d r = cfg.r * Eigen::Matrix2d::Identity();
  const Eigen::Vector2d innovation = Eigen::Vector2d(z.x, z.y) - h * s.state;
  const Eigen::Matrix2d innov_cov = h * s.covariance * h.transpose() + r;
  const Eigen::Matrix<double, 4, 2> gain = s.covariance * h.transpose() * innov_cov.inverse();
  const Eigen::Matrix4d i_kh = Eigen::Matrix4d::Identity() - gain * h;

  KalmanState out;
  out.state = s.state + gain * innovation;
  out.covariance = i_kh * s.covariance * i_kh.transpose() + gain * r * gain.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

}  // namespace kerman
