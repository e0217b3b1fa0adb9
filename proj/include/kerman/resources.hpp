#pragma once

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "kerman/error.hpp"

namespace kerman {

struct ResourceSample {
  double fps = 0.0;
  double steady_fps = 0.0;  // first 10% of frames excluded
  std::size_t peak_memory_bytes = 0;
  double cpu_utilization = 0.0;  // process CPU time / (wall time * cores)
  bool memory_available = true;
};

inline double frames_per_second(std::size_t frames, double seconds) noexcept {
  return (frames == 0 || seconds <= 0.0) ? 0.0 : static_cast<double>(frames) / seconds;
}

inline std::size_t current_rss_bytes() {
  std::ifstream statm("/proc/self/statm");
  std::size_t pages_total = 0;
  std::size_t pages_resident = 0;
  if (!(statm >> pages_total >> pages_resident)) return 0;
  return pages_resident * static_cast<std::size_t>(sysconf(_SC_PAGESIZE));
}

inline std::size_t peak_rss_bytes() {
  rusage usage{};
  if (getrusage(RUSAGE_SELF, &usage) != 0) return 0;
  return static_cast<std::size_t>(usage.ru_maxrss) * 1024U;
}

inline double process_cpu_seconds() {
  rusage usage{};
  if (getrusage(RUSAGE_SELF, &usage) != 0) return 0.0;
  auto secs = [](const timeval& tv) { return static_cast<double>(tv.tv_sec) + tv.tv_usec * 1e-6; };
  return secs(usage.ru_utime) + secs(usage.ru_stime);
}

// Wraps a tracking run: call frame_done() after every processed frame, then
// finish(). A side thread samples resident memory every 10 ms without ever
// touching the pipeline.
class ResourceSampler {
 public:
  ResourceSampler()
      : start_(Clock::now()),
        cpu_start_(process_cpu_seconds()),
        observer_([this](std::stop_token stop) {
          while (!stop.stop_requested()) {
            const std::size_t rss = current_rss_bytes();
            std::size_t prev = sampled_peak_.load();
            while (rss > prev && !sampled_peak_.compare_exchange_weak(prev, rss)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
          }
        }) {}

  void frame_done() { stamps_.push_back(Clock::now()); }

  ResourceSample finish() {
    observer_.request_stop();
    if (observer_.joinable()) observer_.join();
    const auto end = Clock::now();
    ResourceSample s;
    const double wall = std::chrono::duration<double>(end - start_).count();
    s.fps = frames_per_second(stamps_.size(), wall);
    const std::size_t skip = stamps_.size() / 10;
    if (stamps_.size() > skip + 1) {
      const auto from = skip == 0 ? start_ : stamps_[skip - 1];
      s.steady_fps =
          frames_per_second(stamps_.size() - skip, std::chrono::duration<double>(stamps_.back() - from).count());
    } else {
      s.steady_fps = s.fps;
    }
    const std::size_t peak = std::max(peak_rss_bytes(), sampled_peak_.load());
    s.memory_available = peak > 0;
    s.peak_memory_bytes = peak;
    const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
    if (wall > 0.0) s.cpu_utilization = std::clamp((process_cpu_seconds() - cpu_start_) / (wall * cores), 0.0, 1.0);
    return s;
  }

 private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_;
  double cpu_start_;
  std::vector<Clock::time_point> stamps_;
  std::atomic<std::size_t> sampled_peak_{0};
  std::jthread observer_;
};

struct IsolatedResult {
  std::string output;          // whatever the child wrote back
  std::size_t peak_memory_bytes = 0;
  int exit_status = 0;
};

// Runs `fn` in a forked child so its peak resident memory is measured on its
// own. The string returned by `fn` is carried back through a pipe.
inline IsolatedResult run_isolated(const std::function<std::string()>& fn) {
  int fds[2];
  if (pipe(fds) != 0) throw Error(ErrorKind::SamplingUnavailable, "pipe() failed");
  std::fflush(nullptr);
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    throw Error(ErrorKind::SamplingUnavailable, "fork() failed");
  }
  if (pid == 0) {
    close(fds[0]);
    int code = 0;
    std::string out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out = std::string("error: ") + e.what();
      code = 3;
    }
    const char* p = out.data();
    std::size_t left = out.size();
    while (left > 0) {
      const ssize_t n = write(fds[1], p, left);
      if (n <= 0) break;
      p += n;
      left -= static_cast<std::size_t>(n);
    }
    close(fds[1]);
    _exit(code);
  }
  close(fds[1]);
  IsolatedResult result;
  char buf[4096];
  for (;;) {
    const ssize_t n = read(fds[0], buf, sizeof buf);
    if (n <= 0) break;
    result.output.append(buf, static_cast<std::size_t>(n));
  }
  close(fds[0]);
  int status = 0;
  rusage usage{};
  if (wait4(pid, &status, 0, &usage) < 0) throw Error(ErrorKind::SamplingUnavailable, "wait4() failed");
  result.exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.peak_memory_bytes = static_cast<std::size_t>(usage.ru_maxrss) * 1024U;
  return result;
}

}  // namespace kerman
