#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "kerman/geometry.hpp"
#include "kerman/io.hpp"

namespace kerman {

struct TruthTrackReport {
  std::int64_t truth_id = 0;
  std::optional<std::int64_t> primary_id;  // prediction id of the first match
  std::size_t frames = 0;
  std::size_t matched = 0;          // frames matched to any prediction
  std::size_t matched_primary = 0;  // frames matched to the primary prediction
  double mean_iou = 0.0;            // IoU with the primary prediction, 0 when absent
  std::size_t id_switches = 0;
  std::size_t longest_miss = 0;     // longest run of frames without a primary match
};

struct EvalReport {
  std::vector<TruthTrackReport> tracks;
  double mean_iou = 0.0;
  double success_rate = 0.0;  // truth frames matched by their primary prediction
  std::size_t id_switches = 0;
  std::size_t lost_tracks = 0;
  double fps = 0.0;
  double steady_fps = 0.0;
  std::size_t peak_memory_bytes = 0;
};

inline constexpr double kMatchIou = 0.5;

// Per frame, predictions are greedily paired with truth boxes in decreasing
// IoU order (IoU >= 0.5). A truth track's primary prediction is the one it was
// first paired with; success only counts frames paired with that prediction,
// so a re-detected object under a new id does not count as tracked.
inline EvalReport evaluate(const std::vector<TrackRecord>& pred, const std::vector<TrackRecord>& truth) {
  std::map<std::int64_t, std::vector<const TrackRecord*>> pred_by_frame;
  std::map<std::int64_t, std::vector<const TrackRecord*>> truth_by_frame;
  for (const auto& r : pred) {
    if (r.status != 'T') pred_by_frame[r.frame].push_back(&r);
  }
  for (const auto& r : truth) truth_by_frame[r.frame].push_back(&r);

  std::map<std::int64_t, TruthTrackReport> per_truth;
  std::map<std::int64_t, std::optional<std::int64_t>> last_match;
  std::map<std::int64_t, std::size_t> miss_run;
  std::map<std::int64_t, double> iou_sum;

  for (const auto& [frame, truths] : truth_by_frame) {
    static const std::vector<const TrackRecord*> kNone;
    const auto it = pred_by_frame.find(frame);
    const auto& preds = it == pred_by_frame.end() ? kNone : it->second;

    struct Pair {
      double iou;
      std::size_t t;
      std::size_t p;
    };
    std::vector<Pair> pairs;
    for (std::size_t t = 0; t < truths.size(); ++t) {
      for (std::size_t p = 0; p < preds.size(); ++p) {
        const double v = iou(truths[t]->box, preds[p]->box);
        if (v >= kMatchIou) pairs.push_back({v, t, p});
      }
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.iou > b.iou; });
    std::vector<std::optional<std::size_t>> match(truths.size());
    std::vector<bool> used(preds.size(), false);
    for (const auto& pr : pairs) {
      if (match[pr.t] || used[pr.p]) continue;
      match[pr.t] = pr.p;
      used[pr.p] = true;
    }

    for (std::size_t t = 0; t < truths.size(); ++t) {
      const std::int64_t tid = truths[t]->id;
      auto& rep = per_truth[tid];
      rep.truth_id = tid;
      ++rep.frames;
      if (match[t]) {
        const std::int64_t pid = preds[*match[t]]->id;
        ++rep.matched;
        if (!rep.primary_id) rep.primary_id = pid;
        auto& last = last_match[tid];
        if (last && *last != pid) ++rep.id_switches;
        last = pid;
      }
      // IoU against the primary prediction wherever it is present.
      bool primary_hit = false;
      if (rep.primary_id) {
        for (const auto* p : preds) {
          if (p->id != *rep.primary_id) continue;
          iou_sum[tid] += iou(truths[t]->box, p->box);
          primary_hit = match[t] && preds[*match[t]]->id == *rep.primary_id;
        }
      }
      if (primary_hit) {
        ++rep.matched_primary;
        miss_run[tid] = 0;
      } else {
        rep.longest_miss = std::max(rep.longest_miss, ++miss_run[tid]);
      }
    }
  }

  EvalReport report;
  std::size_t frames = 0;
  std::size_t hits = 0;
  double iou_total = 0.0;
  for (auto& [tid, rep] : per_truth) {
    rep.mean_iou = rep.frames ? iou_sum[tid] / static_cast<double>(rep.frames) : 0.0;
    frames += rep.frames;
    hits += rep.matched_primary;
    iou_total += iou_sum[tid];
    report.id_switches += rep.id_switches;
    if (2 * rep.matched < rep.frames) ++report.lost_tracks;
    report.tracks.push_back(rep);
  }
  if (frames > 0) {
    report.success_rate = static_cast<double>(hits) / static_cast<double>(frames);
    report.mean_iou = iou_total / static_cast<double>(frames);
  }
  return report;
}

}  // namespace kerman
