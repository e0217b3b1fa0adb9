#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kerman/config.hpp"
#include "kerman/evaluate.hpp"
#include "kerman/pipeline.hpp"
#include "kerman/resources.hpp"
#include "kerman/scenario.hpp"

namespace kerman::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitRuntime = 3;

inline int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MissingFrame:
    case ErrorKind::CorruptImage:
    case ErrorKind::ParseError:
    case ErrorKind::NegativeDimension:
    case ErrorKind::IoFailure:
    case ErrorKind::InvalidConfig:
    case ErrorKind::TrajectoryOutOfBounds:
      return kExitInput;
    default:
      return kExitRuntime;
  }
}

struct TrackArgs {
  std::string frames_dir;
  std::string raw_file;
  std::string detections;
  std::string out;
  std::string config;
  std::string audit;
  std::optional<int> workers;
  std::string baseline;
  double fps = 10.0;
};

struct SynthArgs {
  std::string scenario;
  std::int64_t frames = 0;
  std::uint32_t seed = 7;
  std::string out;
};

struct EvalArgs {
  std::string pred;
  std::string truth;
};

struct BenchArgs {
  std::string frames_dir;
  std::string detections;
  int repeat = 3;
  std::optional<int> tracks;
  std::int64_t scene_frames = 300;
  std::uint32_t seed = 7;
  std::string config;
  std::optional<int> workers;
};

inline ManagerConfig build_config(const std::string& config_file, std::optional<int> workers,
                                  const std::string& baseline) {
  ManagerConfig cfg;
  if (!config_file.empty()) load_config_file(cfg, config_file);
  if (workers) cfg.workers = *workers;
  if (baseline == "kcf-only") cfg.mode = TrackerMode::KcfOnly;
  cfg.validate();
  return cfg;
}

inline std::string format_fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline std::string format_bytes(std::size_t bytes) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << static_cast<double>(bytes) / (1024.0 * 1024.0) << " MiB";
  return s.str();
}

inline int cmd_track(const TrackArgs& a, std::ostream& out) {
  const ManagerConfig cfg = build_config(a.config, a.workers, a.baseline);
  FrameSource source = a.raw_file.empty() ? FrameSource::open_directory(a.frames_dir, a.fps, cfg.resize_to)
                                          : FrameSource::open_raw(a.raw_file, a.fps, cfg.resize_to);
  const auto dets = read_detections(a.detections, cfg.resize_to, cfg.resize_to);
  TrackWriter writer(a.out);
  std::ofstream audit;
  RunOutputs outputs;
  outputs.writer = &writer;
  if (!a.audit.empty()) {
    audit.open(a.audit, std::ios::binary);
    if (!audit) throw Error(ErrorKind::IoFailure, "cannot write " + a.audit);
    audit << "# frame,id,branch,flag,kcf_x,kcf_y,kf_x,kf_y,bs_x,bs_y,kf_gx,kf_gy,bs_gx,bs_gy,psr\n";
    outputs.audit = &audit;
  }
  const RunSummary s = run_tracking(source, dets, cfg, outputs);
  writer.close();
  out << "mode            " << (cfg.mode == TrackerMode::KcfOnly ? "kcf-only" : "kerman") << '\n'
      << "frames          " << s.frames << '\n'
      << "records         " << s.records << '\n'
      << "max live tracks " << s.max_live_tracks << '\n'
      << "bs calls        " << s.bs_calls << '\n'
      << "fps             " << format_fixed(s.resources.fps, 1) << '\n'
      << "steady fps      " << format_fixed(s.resources.steady_fps, 1) << '\n'
      << "peak memory     " << format_bytes(s.resources.peak_memory_bytes) << '\n'
      << "cpu utilization " << format_fixed(s.resources.cpu_utilization, 3) << '\n';
  return kExitOk;
}

inline int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  const auto& names = builtin_scenario_names();
  if (std::find(names.begin(), names.end(), a.scenario) == names.end()) {
    err << "unknown scenario '" << a.scenario << "'; valid names:";
    for (const auto& n : names) err << ' ' << n;
    err << '\n';
    return kExitUsage;
  }
  const Scenario s = builtin_scenario(a.scenario, a.frames, a.seed);
  const auto g = generate_scenario(s, a.out);
  out << "scenario   " << s.name << '\n'
      << "frames     " << s.frames << " -> " << g.frames_dir.string() << '\n'
      << "actors     " << s.actors.size() << '\n'
      << "truth      " << g.truth_file.string() << '\n'
      << "detections " << g.detections_file.string() << '\n';
  return kExitOk;
}

inline void print_report(const EvalReport& r, std::ostream& out) {
  out << std::left << std::setw(8) << "truth" << std::setw(9) << "primary" << std::setw(8) << "frames"
      << std::setw(9) << "matched" << std::setw(10) << "mean_iou" << std::setw(10) << "switches"
      << "longest_miss\n";
  for (const auto& t : r.tracks) {
    out << std::left << std::setw(8) << t.truth_id << std::setw(9)
        << (t.primary_id ? std::to_string(*t.primary_id) : std::string("-")) << std::setw(8) << t.frames
        << std::setw(9) << t.matched_primary << std::setw(10) << format_number(std::round(t.mean_iou * 1e4) / 1e4)
        << std::setw(10) << t.id_switches << t.longest_miss << '\n';
  }
  out << "success rate " << format_number(r.success_rate) << '\n'
      << "mean iou     " << format_fixed(r.mean_iou, 4) << '\n'
      << "id switches  " << r.id_switches << '\n'
      << "lost tracks  " << r.lost_tracks << '\n';
  std::size_t longest = 0;
  for (const auto& t : r.tracks) longest = std::max(longest, t.longest_miss);
  out << "eval success_rate=" << format_number(r.success_rate) << " mean_iou=" << format_number(r.mean_iou)
      << " id_switches=" << r.id_switches << " lost_tracks=" << r.lost_tracks << " tracks=" << r.tracks.size()
      << " longest_miss=" << longest << '\n';
}

inline int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto pred = read_tracks(a.pred);
  const auto truth = read_tracks(a.truth);
  print_report(evaluate(pred, truth), out);
  return kExitOk;
}

struct BenchSample {
  double fps = 0.0;
  double steady_fps = 0.0;
  double cpu = 0.0;
  std::size_t peak_memory_bytes = 0;
  std::size_t max_live_tracks = 0;
};

// One pipeline run in a child process, so each sample has its own memory peak.
inline BenchSample bench_once(const std::function<FrameSource()>& open, const DetectionMap& dets,
                              const ManagerConfig& cfg) {
  const auto r = run_isolated([&] {
    FrameSource src = open();
    const RunSummary s = run_tracking(src, dets, cfg);
    std::ostringstream o;
    o << format_number(s.resources.fps) << ' ' << format_number(s.resources.steady_fps) << ' '
      << format_number(s.resources.cpu_utilization) << ' ' << s.max_live_tracks;
    return o.str();
  });
  if (r.exit_status != 0) throw Error(ErrorKind::SamplingUnavailable, "bench run failed: " + r.output);
  BenchSample b;
  std::istringstream in(r.output);
  in >> b.fps >> b.steady_fps >> b.cpu >> b.max_live_tracks;
  b.peak_memory_bytes = r.peak_memory_bytes;
  return b;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct BenchArm {
  std::string name;
  std::vector<BenchSample> samples;
  std::size_t peak_memory_bytes = 0;
};

inline BenchArm bench_arm(const std::string& name, const std::function<FrameSource()>& open,
                          const DetectionMap& dets, const ManagerConfig& cfg, int repeat, std::ostream& out) {
  BenchArm arm{name, {}, 0};
  std::vector<double> fps;
  std::vector<double> cpu;
  for (int i = 0; i < repeat; ++i) {
    arm.samples.push_back(bench_once(open, dets, cfg));
    fps.push_back(arm.samples.back().fps);
    cpu.push_back(arm.samples.back().cpu);
    arm.peak_memory_bytes = std::max(arm.peak_memory_bytes, arm.samples.back().peak_memory_bytes);
  }
  out << "arm " << name << "\n  fps samples    ";
  for (std::size_t i = 0; i < fps.size(); ++i) out << (i ? ", " : "") << format_number(std::round(fps[i] * 100) / 100);
  out << "\n  median fps     " << format_number(std::round(median(fps) * 100) / 100) << "\n  peak memory    "
      << format_bytes(arm.peak_memory_bytes) << "\n  cpu (median)   " << format_number(std::round(median(cpu) * 1e4) / 1e4)
      << "\n  max live track " << (arm.samples.empty() ? 0 : arm.samples.back().max_live_tracks) << '\n';
  out << "bench arm=" << name << " median_fps=" << format_number(median(fps))
      << " peak_memory_bytes=" << arm.peak_memory_bytes << " cpu=" << format_number(median(cpu)) << '\n';
  return arm;
}

// Built-in arm: renders the two-actor or ten-actor scene into a raw stream.
inline BenchArm bench_builtin(int tracks, const BenchArgs& a, const ManagerConfig& cfg, const fs::path& scratch,
                              std::ostream& out) {
  const std::string scene = tracks >= 10 ? "crowd" : "pair";
  const Scenario s = builtin_scenario(scene, a.scene_frames, a.seed);
  const ScenarioRenderer r(s);
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(s.frames));
  for (std::int64_t t = 0; t < s.frames; ++t) frames.push_back(r.render(t));
  const fs::path raw = scratch / (scene + ".raw");
  write_raw_stream(raw, frames);
  frames.clear();
  frames.shrink_to_fit();
  const auto dets = r.detections();
  return bench_arm(scene + "(" + std::to_string(tracks) + ")", [&] { return FrameSource::open_raw(raw, 10.0, cfg.resize_to); },
                   dets, cfg, a.repeat, out);
}

inline int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const ManagerConfig cfg = build_config(a.config, a.workers, "");
  if (a.repeat < 1) throw Error(ErrorKind::InvalidConfig, "--repeat must be >= 1");
  if (!a.frames_dir.empty()) {
    const auto dets = read_detections(a.detections, cfg.resize_to, cfg.resize_to);
    bench_arm(a.frames_dir, [&] { return FrameSource::open_directory(a.frames_dir, 10.0, cfg.resize_to); }, dets,
              cfg, a.repeat, out);
    return kExitOk;
  }
  const fs::path scratch = fs::temp_directory_path() / ("kerman-bench-" + std::to_string(getpid()));
  fs::create_directories(scratch);
  struct Cleanup {
    fs::path p;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  } cleanup{scratch};
  if (a.tracks) {
    bench_builtin(*a.tracks, a, cfg, scratch, out);
    return kExitOk;
  }
  const BenchArm few = bench_builtin(2, a, cfg, scratch, out);
  const BenchArm many = bench_builtin(10, a, cfg, scratch, out);
  const double ratio = few.peak_memory_bytes
                           ? static_cast<double>(many.peak_memory_bytes) / static_cast<double>(few.peak_memory_bytes)
                           : 0.0;
  out << "memory ratio (10 / 2 tracks) " << format_number(std::round(ratio * 1000) / 1000) << '\n';
  out << "bench memory_ratio=" << format_number(ratio) << '\n';
  return kExitOk;
}

inline std::string config_keys_help() {
  std::string s = "Config file keys (key = value, '#' comments; flags override the file):\n";
  const ManagerConfig defaults;
  for (const auto& [name, key] : ConfigKeys::all()) {
    const std::string value = key.get(defaults);
    s += "  " + name + " (default " + (value.empty() ? "unset" : value) + "): " + key.help + "\n";
  }
  return s;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Hybrid KCF + Kalman + background-subtraction multi-object tracker", "kerman"};
  app.require_subcommand(1);

  TrackArgs ta;
  auto* track = app.add_subcommand("track", "track objects through a frame sequence");
  auto* frames_opt = track->add_option("--frames", ta.frames_dir, "directory of %06d.pgm / .ppm frames");
  auto* raw_opt = track->add_option("--raw", ta.raw_file, "raw luma stream (16-byte header + 8-bit planes)");
  frames_opt->excludes(raw_opt);
  raw_opt->excludes(frames_opt);
  track->add_option("--detections", ta.detections, "detections file: frame,x,y,w,h,score")->required();
  track->add_option("--out", ta.out, "output track file: frame,id,x,y,w,h,branch,flag,status")->required();
  track->add_option("--config", ta.config, "key=value config file");
  track->add_option("--workers", ta.workers, "worker threads (default: all cores)");
  track->add_option("--baseline", ta.baseline, "comparison arm; kcf-only disables Kalman, BS and fusion")
      ->check(CLI::IsMember({"kcf-only"}));
  track->add_option("--audit", ta.audit, "per-object audit file with all centers, gradients and psr");
  track->add_option("--fps", ta.fps, "declared input frame rate (metadata only)")->capture_default_str();

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "render a built-in synthetic scene with truth and detections");
  std::string names;
  for (const auto& n : builtin_scenario_names()) names += (names.empty() ? "" : ", ") + n;
  synth->add_option("--scenario", sa.scenario, "scene name: " + names)->required();
  synth->add_option("--frames", sa.frames, "frame count (0 = scene default)")->capture_default_str();
  synth->add_option("--seed", sa.seed, "texture and noise seed")->capture_default_str();
  synth->add_option("--out", sa.out, "output directory")->required();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "score a track file against ground truth");
  eval->add_option("--pred", ea.pred, "predicted track file")->required();
  eval->add_option("--truth", ea.truth, "ground-truth track file")->required();

  BenchArgs ba;
  auto* bench = app.add_subcommand(
      "bench", "throughput and memory; without --frames runs the 2-track and 10-track scenes and their memory ratio");
  auto* bframes = bench->add_option("--frames", ba.frames_dir, "directory of frames to benchmark");
  auto* bdets = bench->add_option("--detections", ba.detections, "detections for --frames");
  bframes->needs(bdets);
  bdets->needs(bframes);
  bench->add_option("--repeat", ba.repeat, "runs per arm")->capture_default_str();
  auto* btracks = bench->add_option("--tracks", ba.tracks, "run only the built-in 2-track or 10-track scene")
                      ->check(CLI::IsMember({2, 10}));
  btracks->excludes(bframes);
  bench->add_option("--scene-frames", ba.scene_frames, "length of the built-in scenes")->capture_default_str();
  bench->add_option("--seed", ba.seed, "seed of the built-in scenes")->capture_default_str();
  bench->add_option("--config", ba.config, "key=value config file");
  bench->add_option("--workers", ba.workers, "worker threads (default: all cores)");
  // Set after the subcommands exist so synth and eval do not inherit it.
  for (auto* a : {&app, track, bench}) a->footer(config_keys_help());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help requests are ParseErrors too; CLI11 prints the right subcommand's help.
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*track) {
      if (ta.frames_dir.empty() && ta.raw_file.empty()) {
        err << "track: one of --frames or --raw is required\n";
        return kExitUsage;
      }
      return cmd_track(ta, out);
    }
    if (*synth) return cmd_synth(sa, out, err);
    if (*eval) return cmd_eval(ea, out);
    if (*bench) return cmd_bench(ba, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace kerman::cli
