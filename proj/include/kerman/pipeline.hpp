#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "kerman/io.hpp"
#include "kerman/manager.hpp"
#include "kerman/resources.hpp"

namespace kerman {

inline TrackRecord to_track_record(std::int64_t frame, const StepRecord& r) {
  return {frame, r.id, r.outcome.box, branch_code(r.outcome.branch), r.outcome.flag, status_code(r.status)};
}

// Audit line: frame,id,branch,flag,kcf_x,kcf_y,kf_x,kf_y,bs_x,bs_y,kf_gx,kf_gy,bs_gx,bs_gy,psr
// (bs fields empty when no contour supported the box).
inline std::string format_audit_line(std::int64_t frame, const StepRecord& r) {
  const auto& o = r.outcome;
  std::string s = std::to_string(frame) + ',' + std::to_string(r.id) + ',' + branch_code(o.branch) + ',' +
                  (o.flag ? '1' : '0');
  auto add = [&](std::optional<double> v) {
    s += ',';
    if (v) s += format_number(*v);
  };
  add(o.cnt_kcf.x);
  add(o.cnt_kcf.y);
  add(o.cnt_kf.x);
  add(o.cnt_kf.y);
  add(o.cnt_bs ? std::optional(o.cnt_bs->x) : std::nullopt);
  add(o.cnt_bs ? std::optional(o.cnt_bs->y) : std::nullopt);
  add(o.kf_grad.x);
  add(o.kf_grad.y);
  add(o.bs_grad ? std::optional(o.bs_grad->x) : std::nullopt);
  add(o.bs_grad ? std::optional(o.bs_grad->y) : std::nullopt);
  add(o.psr);
  return s;
}

struct RunSummary {
  std::size_t frames = 0;
  std::size_t records = 0;
  std::uint64_t bs_calls = 0;
  std::size_t max_live_tracks = 0;
  ResourceSample resources;
};

struct RunOutputs {
  std::vector<TrackRecord>* records = nullptr;  // collect in memory
  TrackWriter* writer = nullptr;                // stream to a track file
  std::ostream* audit = nullptr;
};

// Drives the manager over a frame source. Detections are handed over only on
// injection frames.
inline RunSummary run_tracking(FrameSource& source, const DetectionMap& dets, const ManagerConfig& cfg,
                               RunOutputs outputs = {}) {
  ResourceSampler sampler;
  Manager manager(cfg);
  RunSummary summary;
  while (auto frame = source.next()) {
    const auto it = dets.find(frame->index);
    const bool inject = it != dets.end() && manager.is_injection_frame(frame->index);
    const auto records = manager.step(*frame, inject ? &it->second : nullptr);
    for (const auto& r : records) {
      const TrackRecord tr = to_track_record(frame->index, r);
      if (outputs.records) outputs.records->push_back(tr);
      if (outputs.writer) outputs.writer->write(tr);
      if (outputs.audit) *outputs.audit << format_audit_line(frame->index, r) << '\n';
    }
    summary.records += records.size();
    summary.max_live_tracks = std::max(summary.max_live_tracks, records.size());
    ++summary.frames;
    sampler.frame_done();
  }
  summary.bs_calls = manager.bs_calls();
  summary.resources = sampler.finish();
  return summary;
}

}  // namespace kerman
