#pragma once

#include <optional>
#include <span>

#include "kerman/background.hpp"
#include "kerman/error.hpp"
#include "kerman/geometry.hpp"
#include "kerman/kcf.hpp"

namespace kerman {

enum class Branch { Consensus, OcclusionKF, KcfRaw };

constexpr char branch_code(Branch b) noexcept {
  switch (b) {
    case Branch::Consensus: return 'C';
    case Branch::OcclusionKF: return 'O';
    case Branch::KcfRaw: return 'K';
  }
  return '?';
}

struct FusionConfig {
  // Absolute threshold in pixels; when unset the threshold is
  // trhd_ratio x diagonal of the current KCF box.
  std::optional<double> trhd;
  double trhd_ratio = 0.15;
  int max_occluded = 50;

  double threshold_for(const BBox& kcf_box) const noexcept {
    return trhd ? *trhd : trhd_ratio * kcf_box.diagonal();
  }

  void validate() const {
    if (trhd && !(*trhd > 0.0)) throw Error(ErrorKind::InvalidConfig, "trhd must be > 0");
    if (!(trhd_ratio > 0.0)) throw Error(ErrorKind::InvalidConfig, "trhd_ratio must be > 0");
    if (max_occluded < 1) throw Error(ErrorKind::InvalidConfig, "max_occluded must be >= 1");
  }
};

struct FusionState {
  bool flag = true;
  BBox last_box;
  int occluded_streak = 0;
};

struct FusionOutcome {
  BBox box;
  bool flag = false;
  Branch branch = Branch::KcfRaw;
  Point2 cnt_kcf;
  Point2 cnt_kf;
  std::optional<Point2> cnt_bs;
  Vec2 kf_grad;
  std::optional<Vec2> bs_grad;
  double psr = 0.0;
  FusionState state;  // state carried into the next frame
};

// Displacement of `other` in coordinates centered on `reference`.
inline Vec2 gradient(Point2 reference, Point2 other) noexcept { return other - reference; }

// Largest-area contour whose center lies inside the box (first in list order on ties).
inline std::optional<Contour> select_support_contour(std::span<const Contour> contours, const BBox& kcf_box) {
  std::optional<Contour> best;
  for (const auto& c : contours) {
    if (!contour_in_box(c, kcf_box)) continue;
    if (!best || c.area > best->area) best = c;
  }
  return best;
}

inline FusionOutcome decide(const BBox& kcf_box, const ResponseMap& response, Point2 kf_predicted,
                            std::span<const Contour> contours, const FusionState& state, const FusionConfig& cfg,
                            int frame_w, int frame_h) {
  FusionOutcome out;
  out.cnt_kcf = center(kcf_box);
  out.cnt_kf = kf_predicted;
  out.kf_grad = gradient(out.cnt_kcf, kf_predicted);
  out.psr = response.psr;
  out.state = state;

  const auto support = select_support_contour(contours, kcf_box);
  if (support) {
    out.cnt_bs = support->center;
    out.bs_grad = gradient(out.cnt_kcf, support->center);
  }

  if (support && (*out.bs_grad - out.kf_grad).norm() < cfg.threshold_for(kcf_box)) {
    out.branch = Branch::Consensus;
    out.flag = true;
    out.box = recenter(kcf_box, midpoint(kf_predicted, support->center), frame_w, frame_h);
    out.state.occluded_streak = 0;
  } else if (!support) {
    out.branch = Branch::OcclusionKF;
    out.flag = false;
    out.box = recenter(kcf_box, kf_predicted, frame_w, frame_h);
    out.state.occluded_streak = state.occluded_streak + 1;
  } else {
    out.branch = Branch::KcfRaw;
    out.flag = false;
    out.box = kcf_box;
    out.state.occluded_streak = 0;
  }
  out.state.flag = out.flag;
  out.state.last_box = out.box;
  return out;
}

inline bool should_terminate(const FusionState& state, const FusionConfig& cfg) noexcept {
  return state.occluded_streak >= cfg.max_occluded;
}

}  // namespace kerman
