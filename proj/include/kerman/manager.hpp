#pragma once

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "kerman/background.hpp"
#include "kerman/error.hpp"
#include "kerman/fusion.hpp"
#include "kerman/geometry.hpp"
#include "kerman/kalman.hpp"
#include "kerman/kcf.hpp"
#include "kerman/thread_pool.hpp"

namespace kerman {

enum class TrackStatus { Active, Occluded, Terminated };

constexpr char status_code(TrackStatus s) noexcept {
  switch (s) {
    case TrackStatus::Active: return 'A';
    case TrackStatus::Occluded: return 'O';
    case TrackStatus::Terminated: return 'T';
  }
  return '?';
}

enum class TrackerMode {
  Kerman,   // KCF corrected by Kalman + background subtraction
  KcfOnly,  // baseline: plain KCF retrained every frame
};

struct ManagerConfig {
  int human_chk_thld = 5;
  int resize_to = 400;
  int workers = 0;  // 0 = hardware concurrency
  TrackerMode mode = TrackerMode::Kerman;
  FusionConfig fusion;
  KcfConfig kcf;
  KalmanConfig kalman;
  BgConfig bg;

  std::size_t worker_count() const noexcept {
    return workers > 0 ? static_cast<std::size_t>(workers) : std::max(1u, std::thread::hardware_concurrency());
  }

  void validate() const {
    if (human_chk_thld < 1) throw Error(ErrorKind::InvalidConfig, "human_chk_thld must be >= 1");
    if (resize_to < 16) throw Error(ErrorKind::InvalidConfig, "resize_to must be >= 16");
    if (workers < 0) throw Error(ErrorKind::InvalidConfig, "workers must be >= 0");
    fusion.validate();
    kalman.validate();
  }
};

struct TrackedObject {
  std::int64_t id = 0;
  KcfModel kcf;
  KalmanState kf;
  FusionState fusion;
  BBox box;
  std::int64_t age = 0;
  TrackStatus status = TrackStatus::Active;
};

struct StepRecord {
  std::int64_t id = 0;
  TrackStatus status = TrackStatus::Active;
  FusionOutcome outcome;
};

struct TrackSnapshot {
  std::int64_t id = 0;
  BBox box;
  TrackStatus status = TrackStatus::Active;
  std::int64_t age = 0;
};

// New iff the detection center lies outside a circle of diameter 2/3 of the
// box diagonal around every live track.
inline bool is_new_detection(const Detection& d, std::span<const TrackedObject> tracked) {
  const Point2 c = center(d.box);
  return std::none_of(tracked.begin(), tracked.end(), [&](const TrackedObject& t) {
    return t.status != TrackStatus::Terminated && distance(c, center(t.box)) <= t.box.diagonal() / 3.0;
  });
}

class Manager {
 public:
  explicit Manager(ManagerConfig cfg = {}) : cfg_(std::move(cfg)), bg_(cfg_.bg) {
    cfg_.validate();
    if (cfg_.worker_count() > 1) pool_ = std::make_unique<ThreadPool>(cfg_.worker_count());
  }

  const ManagerConfig& config() const noexcept { return cfg_; }
  std::uint64_t bs_calls() const noexcept { return bs_calls_; }
  const std::vector<TrackedObject>& tracks() const noexcept { return tracks_; }
  const std::vector<Contour>& last_contours() const noexcept { return contours_; }

  bool is_injection_frame(std::int64_t index) const noexcept { return index % cfg_.human_chk_thld == 0; }

  // Creates tracks for the detections that are not already followed. Returns
  // the ids of the new tracks.
  std::vector<std::int64_t> inject_detections(std::span<const Detection> dets, const Frame& frame) {
    std::vector<std::int64_t> created;
    for (const auto& d : dets) {
      if (!is_new_detection(d, tracks_)) continue;
      const BBox box = clamp_position(d.box, frame.width, frame.height);
      TrackedObject t;
      try {
        t.kcf = train(frame, box, cfg_.kcf);
      } catch (const Error& e) {
        std::clog << "[kerman] frame " << frame.index << ": detection skipped: " << e.what() << '\n';
        continue;
      }
      t.id = next_id_++;
      t.kf = kalman_init(center(box), cfg_.kalman);
      t.fusion.flag = true;
      t.fusion.last_box = box;
      t.box = box;
      t.status = TrackStatus::Active;
      created.push_back(t.id);
      tracks_.push_back(std::move(t));
    }
    return created;
  }

  std::vector<StepRecord> step(const Frame& input, const std::vector<Detection>* dets = nullptr) {
    if (last_index_ && input.index <= *last_index_) {
      throw Error(ErrorKind::FrameOutOfOrder,
                  "frame " + std::to_string(input.index) + " after " + std::to_string(*last_index_));
    }
    last_index_ = input.index;
    const Frame frame = resize_bilinear(input, cfg_.resize_to, cfg_.resize_to);

    if (cfg_.mode == TrackerMode::Kerman) {
      FgMask mask = bg_.apply(frame, pool_.get());
      ++bs_calls_;
      if (cfg_.bg.morphology) mask = open3x3(mask);
      contours_ = contours(mask, cfg_.bg.min_area);
    }

    if (dets && is_injection_frame(frame.index)) inject_detections(*dets, frame);

    std::vector<StepRecord> records(tracks_.size());
    std::vector<std::string> failures(tracks_.size());
    auto work = [&](std::size_t i) {
      auto& t = tracks_[i];
      records[i].id = t.id;
      try {
        records[i].outcome = cfg_.mode == TrackerMode::Kerman ? update_kerman(t, frame) : update_kcf_only(t, frame);
        records[i].status = t.status;
      } catch (const std::exception& e) {
        t.status = TrackStatus::Terminated;
        records[i].status = t.status;
        records[i].outcome.box = t.box;
        failures[i] = e.what();
      }
    };
    if (pool_) {
      pool_->parallel_for(tracks_.size(), work);
    } else {
      for (std::size_t i = 0; i < tracks_.size(); ++i) work(i);
    }
    for (std::size_t i = 0; i < failures.size(); ++i) {
      if (failures[i].empty()) continue;
      std::clog << "[kerman] frame " << frame.index << ": track " << records[i].id << " terminated: " << failures[i]
                << '\n';
    }

    std::erase_if(tracks_, [](const TrackedObject& t) { return t.status == TrackStatus::Terminated; });
    std::sort(records.begin(), records.end(), [](const StepRecord& a, const StepRecord& b) { return a.id < b.id; });
    snapshot_.clear();
    for (const auto& t : tracks_) snapshot_.push_back({t.id, t.box, t.status, t.age});
    std::sort(snapshot_.begin(), snapshot_.end(),
              [](const TrackSnapshot& a, const TrackSnapshot& b) { return a.id < b.id; });
    return records;
  }

  // Non-terminated tracks as of the last completed step, ids ascending.
  const std::vector<TrackSnapshot>& snapshot() const noexcept { return snapshot_; }

 private:
  FusionOutcome update_kerman(TrackedObject& t, const Frame& frame) const {
    const double search_scale = t.fusion.flag ? cfg_.kcf.padding : 1.0;
    const Detected found = detect(t.kcf, frame, t.box, search_scale, cfg_.kcf);
    const KalmanState predicted = kalman_predict(t.kf, cfg_.kalman);
    FusionOutcome out = decide(found.box, found.response, predicted.center(), contours_, t.fusion, cfg_.fusion,
                               frame.width, frame.height);
    if (out.flag) {
      t.kf = kalman_update(predicted, center(out.box), cfg_.kalman);
      t.kcf = update_model(t.kcf, train(frame, out.box, cfg_.kcf), cfg_.kcf.learning_rate);
    } else {
      t.kf = predicted;
    }
    t.fusion = out.state;
    t.box = out.box;
    ++t.age;
    t.status = out.branch == Branch::OcclusionKF ? TrackStatus::Occluded : TrackStatus::Active;
    if (should_terminate(t.fusion, cfg_.fusion)) t.status = TrackStatus::Terminated;
    return out;
  }

  FusionOutcome update_kcf_only(TrackedObject& t, const Frame& frame) const {
    const Detected found = detect(t.kcf, frame, t.box, cfg_.kcf.padding, cfg_.kcf);
    t.kcf = update_model(t.kcf, train(frame, found.box, cfg_.kcf), cfg_.kcf.learning_rate);
    t.box = found.box;
    ++t.age;
    FusionOutcome out;
    out.box = found.box;
    out.flag = true;
    out.branch = Branch::KcfRaw;
    out.cnt_kcf = center(found.box);
    out.cnt_kf = out.cnt_kcf;
    out.psr = found.response.psr;
    out.state.flag = true;
    out.state.last_box = found.box;
    t.fusion = out.state;
    return out;
  }

  ManagerConfig cfg_;
  BgModel bg_;
  std::unique_ptr<ThreadPool> pool_;
  std::vector<TrackedObject> tracks_;
  std::vector<Contour> contours_;
  std::vector<TrackSnapshot> snapshot_;
  std::optional<std::int64_t> last_index_;
  std::int64_t next_id_ = 0;
  std::uint64_t bs_calls_ = 0;
};

}  // namespace kerman
