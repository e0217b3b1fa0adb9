#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "kerman/error.hpp"
#include "kerman/geometry.hpp"
#include "kerman/io.hpp"

namespace kerman {

struct Actor {
  double w = 40.0;
  double h = 80.0;
  std::vector<Point2> waypoints;  // box centers
  double speed = 2.0;             // px / frame along the path
  std::uint32_t texture_seed = 1;
  std::int64_t start_frame = 0;
  bool closed = false;            // closed: loop back to the first waypoint; open: ping-pong
  double ramp = 0.0;              // frames of constant acceleration from rest up to `speed`
};

struct Occluder {
  BBox region;
  std::uint8_t intensity = 128;
};

struct Scenario {
  std::string name;
  std::int64_t frames = 200;
  int width = 400;
  int height = 400;
  std::vector<Actor> actors;
  std::vector<Occluder> occluders;
  std::uint32_t background_seed = 1;
  int noise = 2;               // per-frame uniform sensor noise, +/- levels
  int detection_interval = 5;  // detections emitted on frames == 0 mod interval
  double min_visible = 0.5;    // detections only for actors at least this visible
};

namespace detail {

// Smooth value noise: random lattice values every `cell` px, bilinear in between.
inline std::vector<std::uint8_t> value_noise(int w, int h, int cell, double mean, double amplitude,
                                             std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int gw = w / cell + 2;
  const int gh = h / cell + 2;
  std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
  for (auto& v : lattice) v = u(rng);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    const double fy = static_cast<double>(y) / cell;
    const int iy = static_cast<int>(fy);
    const double ay = fy - iy;
    for (int x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x) / cell;
      const int ix = static_cast<int>(fx);
      const double ax = fx - ix;
      auto l = [&](int i, int j) { return lattice[static_cast<std::size_t>(j) * gw + i]; };
      const double v = (1 - ay) * ((1 - ax) * l(ix, iy) + ax * l(ix + 1, iy)) +
                       ay * ((1 - ax) * l(ix, iy + 1) + ax * l(ix + 1, iy + 1));
      out[static_cast<std::size_t>(y) * w + x] =
          static_cast<std::uint8_t>(std::clamp(std::lround(mean + amplitude * v), 0L, 255L));
    }
  }
  return out;
}

inline double path_length(const Actor& a) {
  double len = 0.0;
  for (std::size_t i = 1; i < a.waypoints.size(); ++i) len += distance(a.waypoints[i - 1], a.waypoints[i]);
  if (a.closed && a.waypoints.size() > 1) len += distance(a.waypoints.back(), a.waypoints.front());
  return len;
}

inline Point2 point_along(const Actor& a, double s) {
  std::vector<Point2> pts = a.waypoints;
  if (a.closed) pts.push_back(a.waypoints.front());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg = distance(pts[i - 1], pts[i]);
    if (s <= seg || i + 1 == pts.size()) {
      const double t = seg > 0.0 ? std::clamp(s / seg, 0.0, 1.0) : 0.0;
      return {pts[i - 1].x + t * (pts[i].x - pts[i - 1].x), pts[i - 1].y + t * (pts[i].y - pts[i - 1].y)};
    }
    s -= seg;
  }
  return pts.front();
}

}  // namespace detail

// True box of an actor at a frame (integer pixel aligned), or nothing if the
// actor has not entered yet.
inline std::optional<BBox> actor_box(const Actor& a, std::int64_t frame) {
  if (frame < a.start_frame || a.waypoints.empty()) return std::nullopt;
  const double len = detail::path_length(a);
  const double dt = static_cast<double>(frame - a.start_frame);
  double s = dt < a.ramp ? a.speed * dt * dt / (2.0 * a.ramp) : a.speed * (dt - a.ramp / 2.0);
  if (len > 0.0) {
    if (a.closed) {
      s = std::fmod(s, len);
    } else {
      s = std::fmod(s, 2.0 * len);
      if (s > len) s = 2.0 * len - s;
    }
  } else {
    s = 0.0;
  }
  const Point2 c = len > 0.0 ? detail::point_along(a, s) : a.waypoints.front();
  return BBox{std::round(c.x - a.w / 2.0), std::round(c.y - a.h / 2.0), a.w, a.h};
}

inline void validate(const Scenario& s) {
  for (std::size_t i = 0; i < s.actors.size(); ++i) {
    const auto& a = s.actors[i];
    if (a.waypoints.empty()) {
      throw Error(ErrorKind::TrajectoryOutOfBounds, s.name + ": actor " + std::to_string(i) + " has no waypoints");
    }
    // Boxes are convex, so checking every waypoint covers the whole path.
    for (const auto& p : a.waypoints) {
      if (p.x - a.w / 2.0 < 0.0 || p.y - a.h / 2.0 < 0.0 || p.x + a.w / 2.0 > s.width ||
          p.y + a.h / 2.0 > s.height) {
        throw Error(ErrorKind::TrajectoryOutOfBounds,
                    s.name + ": actor " + std::to_string(i) + " leaves the frame near (" + format_number(p.x) +
                        "," + format_number(p.y) + ")");
      }
    }
  }
}

// Fraction of the actor box not covered by occluders (occluders assumed disjoint).
inline double visible_fraction(const Scenario& s, const BBox& box) {
  double hidden = 0.0;
  for (const auto& o : s.occluders) hidden += intersection_area(box, o.region);
  return std::clamp(1.0 - hidden / box.area(), 0.0, 1.0);
}

class ScenarioRenderer {
 public:
  explicit ScenarioRenderer(Scenario s) : s_(std::move(s)) {
    validate(s_);
    background_ = detail::value_noise(s_.width, s_.height, 8, 60.0, 30.0, s_.background_seed);
    for (const auto& a : s_.actors) {
      textures_.push_back(detail::value_noise(static_cast<int>(a.w), static_cast<int>(a.h), 4, 190.0, 40.0,
                                              a.texture_seed));
    }
  }

  const Scenario& scenario() const noexcept { return s_; }

  Frame render(std::int64_t index) const {
    Frame f(index, s_.width, s_.height, background_);
    for (std::size_t i = 0; i < s_.actors.size(); ++i) {
      const auto box = actor_box(s_.actors[i], index);
      if (!box) continue;
      const int aw = static_cast<int>(s_.actors[i].w);
      const int ah = static_cast<int>(s_.actors[i].h);
      const int x0 = static_cast<int>(box->x);
      const int y0 = static_cast<int>(box->y);
      for (int y = 0; y < ah; ++y) {
        for (int x = 0; x < aw; ++x) {
          const int fx = x0 + x;
          const int fy = y0 + y;
          if (fx < 0 || fy < 0 || fx >= s_.width || fy >= s_.height) continue;
          f.at(fx, fy) = textures_[i][static_cast<std::size_t>(y) * aw + x];
        }
      }
    }
    for (const auto& o : s_.occluders) {
      const BBox r = clip_to_frame(o.region, s_.width, s_.height);
      for (int y = static_cast<int>(r.y); y < static_cast<int>(r.y + r.h); ++y) {
        for (int x = static_cast<int>(r.x); x < static_cast<int>(r.x + r.w); ++x) f.at(x, y) = o.intensity;
      }
    }
    if (s_.noise > 0) {
      std::mt19937 rng(s_.background_seed * 2654435761U + static_cast<std::uint32_t>(index));
      std::uniform_int_distribution<int> u(-s_.noise, s_.noise);
      for (auto& p : f.luma) p = static_cast<std::uint8_t>(std::clamp(static_cast<int>(p) + u(rng), 0, 255));
    }
    return f;
  }

  std::vector<TrackRecord> truth() const {
    std::vector<TrackRecord> out;
    for (std::int64_t t = 0; t < s_.frames; ++t) {
      for (std::size_t i = 0; i < s_.actors.size(); ++i) {
        if (const auto box = actor_box(s_.actors[i], t)) {
          out.push_back({t, static_cast<std::int64_t>(i), *box, 'C', true, 'A'});
        }
      }
    }
    return out;
  }

  DetectionMap detections() const {
    DetectionMap out;
    for (std::int64_t t = 0; t < s_.frames; t += s_.detection_interval) {
      for (const auto& a : s_.actors) {
        const auto box = actor_box(a, t);
        if (box && visible_fraction(s_, *box) >= s_.min_visible) out[t].push_back({*box, 1.0});
      }
    }
    return out;
  }

 private:
  Scenario s_;
  std::vector<std::uint8_t> background_;
  std::vector<std::vector<std::uint8_t>> textures_;
};

inline const std::vector<std::string>& builtin_scenario_names() {
  static const std::vector<std::string> names{"occlusion", "fastmove", "crowd", "pair"};
  return names;
}

// Built-in scenes. `frames` <= 0 selects the scene's default length.
inline Scenario builtin_scenario(const std::string& name, std::int64_t frames = 0, std::uint32_t seed = 7) {
  Scenario s;
  s.name = name;
  s.background_seed = seed;
  auto texture = [&](std::uint32_t k) { return seed * 7919U + k; };
  if (name == "occlusion") {
    // One walker crossing behind a full-height bar 60 px wide.
    s.frames = 200;
    Actor a;
    a.w = 24;
    a.h = 72;
    a.waypoints = {{20, 200}, {380, 200}};
    a.speed = 5.0;
    a.start_frame = 120;
    a.texture_seed = texture(1);
    s.actors.push_back(a);
    s.occluders.push_back({{170, 0, 60, 400}, 128});
  } else if (name == "fastmove") {
    // Accelerates from rest to 12 px / frame, then turns 90 degrees at the top right corner.
    s.frames = 200;
    Actor a;
    a.w = 28;
    a.h = 84;
    a.waypoints = {{22, 50}, {378, 50}, {378, 350}};
    a.speed = 12.0;
    a.ramp = 60;
    a.start_frame = 120;
    a.texture_seed = texture(1);
    s.actors.push_back(a);
  } else if (name == "crowd" || name == "pair") {
    s.frames = 300;
    const int count = name == "crowd" ? 10 : 2;
    for (int i = 0; i < count; ++i) {
      Actor a;
      a.w = 28;
      a.h = 56;
      const double lane = 40.0 + 320.0 * (count == 1 ? 0.5 : static_cast<double>(i) / (count - 1));
      if (i % 2 == 0) {
        a.waypoints = {{30, lane}, {370, lane}};
      } else {
        a.waypoints = {{lane, 40}, {lane, 360}};
      }
      if (count == 2) a.waypoints = {{40.0 + 320.0 * i, 60}, {40.0 + 320.0 * i, 340}};
      a.speed = 1.0 + 0.25 * (i % 5);
      a.start_frame = 10;
      a.texture_seed = texture(static_cast<std::uint32_t>(i + 1));
      s.actors.push_back(a);
    }
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown scenario '" + name + "'");
  }
  if (frames > 0) s.frames = frames;
  return s;
}

struct GeneratedScenario {
  fs::path frames_dir;
  fs::path truth_file;
  fs::path detections_file;
};

// Writes out_dir/frames/%06d.pgm, out_dir/truth.txt and out_dir/detections.txt.
inline GeneratedScenario generate_scenario(const Scenario& s, const fs::path& out_dir) {
  const ScenarioRenderer r(s);
  GeneratedScenario g{out_dir / "frames", out_dir / "truth.txt", out_dir / "detections.txt"};
  std::error_code ec;
  fs::create_directories(g.frames_dir, ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot create " + g.frames_dir.string() + ": " + ec.message());
  for (std::int64_t t = 0; t < s.frames; ++t) write_pgm(g.frames_dir / frame_file_name(t), r.render(t));
  write_tracks(g.truth_file, r.truth());
  write_detections(g.detections_file, r.detections());
  return g;
}

}  // namespace kerman
