#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "kerman/error.hpp"
#include "kerman/geometry.hpp"

namespace kerman {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Number formatting: shortest round-trip representation, locale independent.

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), end);
}

inline std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) return std::nullopt;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Netpbm images (P5 grayscale, P6 color converted with BT.601 weights).

namespace detail {

inline bool read_pnm_token(std::istream& in, std::string& tok) {
  tok.clear();
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return true;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return !tok.empty();
}

}  // namespace detail

inline Frame read_pnm(const fs::path& path, std::int64_t index = 0) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::CorruptImage, "cannot open " + path.string());
  std::string magic, sw, sh, smax;
  if (!detail::read_pnm_token(in, magic) || (magic != "P5" && magic != "P6") || !detail::read_pnm_token(in, sw) ||
      !detail::read_pnm_token(in, sh) || !detail::read_pnm_token(in, smax)) {
    throw Error(ErrorKind::CorruptImage, "bad netpbm header in " + path.string());
  }
  const auto w = parse_number<int>(sw);
  const auto h = parse_number<int>(sh);
  const auto maxval = parse_number<int>(smax);
  if (!w || !h || !maxval || *w <= 0 || *h <= 0 || *maxval != 255) {
    throw Error(ErrorKind::CorruptImage, "unsupported netpbm geometry in " + path.string());
  }
  const std::size_t channels = magic == "P6" ? 3 : 1;
  const std::size_t n = static_cast<std::size_t>(*w) * static_cast<std::size_t>(*h);
  std::vector<std::uint8_t> raw(n * channels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw Error(ErrorKind::CorruptImage, "truncated pixel data in " + path.string());
  }
  if (channels == 1) return Frame(index, *w, *h, std::move(raw));
  std::vector<std::uint8_t> luma(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = 0.299 * raw[3 * i] + 0.587 * raw[3 * i + 1] + 0.114 * raw[3 * i + 2];
    luma[i] = static_cast<std::uint8_t>(std::lround(y));
  }
  return Frame(index, *w, *h, std::move(luma));
}

inline void write_pgm(const fs::path& path, const Frame& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << "P5\n" << f.width << ' ' << f.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(f.luma.data()), static_cast<std::streamsize>(f.luma.size()));
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

inline std::string frame_file_name(std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld.pgm", static_cast<long long>(index));
  return buf;
}

// ---------------------------------------------------------------------------
// Raw luma streams: 16-byte header (magic, width, height, count as u32 LE)
// followed by `count` tightly packed width x height planes.

inline constexpr std::uint32_t kRawMagic = 0x5741524BU;  // "KRAW" in file byte order

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

inline std::optional<std::uint32_t> get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return std::nullopt;
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

inline void write_raw_stream(const fs::path& path, const std::vector<Frame>& frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  const int w = frames.empty() ? 0 : frames.front().width;
  const int h = frames.empty() ? 0 : frames.front().height;
  detail::put_u32(out, kRawMagic);
  detail::put_u32(out, static_cast<std::uint32_t>(w));
  detail::put_u32(out, static_cast<std::uint32_t>(h));
  detail::put_u32(out, static_cast<std::uint32_t>(frames.size()));
  for (const auto& f : frames) {
    if (f.width != w || f.height != h) throw Error(ErrorKind::DimensionMismatch, "raw stream frames differ in size");
    out.write(reinterpret_cast<const char*>(f.luma.data()), static_cast<std::streamsize>(f.luma.size()));
  }
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------

enum class SourceKind { ImageDirectory, RawStream };

// Ordered frame reader. Frames come out resized to resize_to x resize_to and
// indexed from 0.
class FrameSource {
 public:
  static FrameSource open_directory(const fs::path& dir, double fps = 10.0, int resize_to = 400) {
    FrameSource s(SourceKind::ImageDirectory, dir, fps, resize_to);
    if (!fs::is_directory(dir)) throw Error(ErrorKind::MissingFrame, "frame directory not found: " + dir.string());
    static const std::regex pattern(R"((\d{6})\.(pgm|ppm))");
    std::map<std::int64_t, fs::path> found;
    for (const auto& entry : fs::directory_iterator(dir)) {
      std::smatch m;
      const std::string name = entry.path().filename().string();
      if (entry.is_regular_file() && std::regex_match(name, m, pattern)) found[std::stoll(m[1])] = entry.path();
    }
    std::int64_t expect = 0;
    for (const auto& [idx, path] : found) {
      if (idx != expect) {
        throw Error(ErrorKind::MissingFrame,
                    "frame " + std::to_string(expect) + " missing in " + (dir / frame_file_name(expect)).string());
      }
      s.files_.push_back(path);
      ++expect;
    }
    return s;
  }

  static FrameSource open_raw(const fs::path& file, double fps = 10.0, int resize_to = 400) {
    FrameSource s(SourceKind::RawStream, file, fps, resize_to);
    s.raw_ = std::make_unique<std::ifstream>(file, std::ios::binary);
    if (!*s.raw_) throw Error(ErrorKind::CorruptImage, "cannot open raw stream " + file.string());
    const auto magic = detail::get_u32(*s.raw_);
    const auto w = detail::get_u32(*s.raw_);
    const auto h = detail::get_u32(*s.raw_);
    const auto n = detail::get_u32(*s.raw_);
    if (!magic || !w || !h || !n || *magic != kRawMagic) {
      throw Error(ErrorKind::CorruptImage, "bad raw stream header in " + file.string());
    }
    if (*n > 0 && (*w == 0 || *h == 0)) throw Error(ErrorKind::CorruptImage, "zero-sized raw frames in " + file.string());
    s.raw_w_ = static_cast<int>(*w);
    s.raw_h_ = static_cast<int>(*h);
    s.raw_count_ = *n;
    return s;
  }

  SourceKind kind() const noexcept { return kind_; }
  const fs::path& path() const noexcept { return path_; }
  double fps() const noexcept { return fps_; }
  std::size_t size() const noexcept { return kind_ == SourceKind::ImageDirectory ? files_.size() : raw_count_; }

  std::optional<Frame> next() {
    if (next_ >= size()) return std::nullopt;
    const auto idx = static_cast<std::int64_t>(next_);
    Frame f;
    if (kind_ == SourceKind::ImageDirectory) {
      f = read_pnm(files_[next_], idx);
    } else {
      std::vector<std::uint8_t> buf(static_cast<std::size_t>(raw_w_) * raw_h_);
      raw_->read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
      if (raw_->gcount() != static_cast<std::streamsize>(buf.size())) {
        throw Error(ErrorKind::CorruptImage,
                    "raw stream " + path_.string() + " truncated at frame " + std::to_string(idx));
      }
      f = Frame(idx, raw_w_, raw_h_, std::move(buf));
    }
    ++next_;
    return resize_bilinear(f, resize_to_, resize_to_);
  }

 private:
  FrameSource(SourceKind k, fs::path p, double fps, int resize_to)
      : kind_(k), path_(std::move(p)), fps_(fps), resize_to_(resize_to) {}

  SourceKind kind_;
  fs::path path_;
  double fps_;
  int resize_to_;
  std::vector<fs::path> files_;
  std::unique_ptr<std::ifstream> raw_;
  int raw_w_ = 0;
  int raw_h_ = 0;
  std::size_t raw_count_ = 0;
  std::size_t next_ = 0;
};

// ---------------------------------------------------------------------------
// Detections: `frame,x,y,w,h,score` per line, '#' starts a comment.

using DetectionMap = std::map<std::int64_t, std::vector<Detection>>;

inline DetectionMap parse_detections(std::istream& in, const std::string& name, double frame_w = 400.0,
                                     double frame_h = 400.0) {
  DetectionMap out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    auto fail = [&](ErrorKind kind, const std::string& why) {
      return Error(kind, name + ":" + std::to_string(lineno) + ": " + why);
    };
    const auto f = split_fields(body);
    if (f.size() != 6) throw fail(ErrorKind::ParseError, "expected 6 fields");
    const auto frame = parse_number<std::int64_t>(f[0]);
    const auto x = parse_number<double>(f[1]);
    const auto y = parse_number<double>(f[2]);
    const auto w = parse_number<double>(f[3]);
    const auto h = parse_number<double>(f[4]);
    const auto score = parse_number<double>(f[5]);
    if (!frame || !x || !y || !w || !h || !score || *frame < 0) throw fail(ErrorKind::ParseError, "malformed number");
    if (*w < 0.0 || *h < 0.0) throw fail(ErrorKind::NegativeDimension, "negative box dimension");
    if (*score < 0.0 || *score > 1.0) throw fail(ErrorKind::ParseError, "score outside [0,1]");
    const BBox box = clip_to_frame({*x, *y, *w, *h}, frame_w, frame_h);
    if (!box.valid()) throw fail(ErrorKind::ParseError, "box empty after clipping to frame");
    out[*frame].push_back({box, *score});
  }
  return out;
}

inline DetectionMap read_detections(const fs::path& path, double frame_w = 400.0, double frame_h = 400.0) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open detections file " + path.string());
  return parse_detections(in, path.string(), frame_w, frame_h);
}

inline void write_detections(const fs::path& path, const DetectionMap& dets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << "# frame,x,y,w,h,score\n";
  for (const auto& [frame, list] : dets) {
    for (const auto& d : list) {
      out << frame << ',' << format_number(d.box.x) << ',' << format_number(d.box.y) << ','
          << format_number(d.box.w) << ',' << format_number(d.box.h) << ',' << format_number(d.score) << '\n';
    }
  }
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Track files: `frame,id,x,y,w,h,branch,flag,status` per line.
// branch in {C,O,K}; flag in {0,1}; status in {A,O,T}.

struct TrackRecord {
  std::int64_t frame = 0;
  std::int64_t id = 0;
  BBox box;
  char branch = 'C';
  bool flag = true;
  char status = 'A';

  friend bool operator==(const TrackRecord&, const TrackRecord&) = default;
};

inline std::string format_track_line(const TrackRecord& r) {
  std::string s = std::to_string(r.frame);
  s += ',';
  s += std::to_string(r.id);
  for (double v : {r.box.x, r.box.y, r.box.w, r.box.h}) {
    s += ',';
    s += format_number(v);
  }
  s += ',';
  s += r.branch;
  s += ',';
  s += r.flag ? '1' : '0';
  s += ',';
  s += r.status;
  return s;
}

class TrackWriter {
 public:
  explicit TrackWriter(const fs::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  }
  void write(const TrackRecord& r) {
    out_ << format_track_line(r) << '\n';
    if (!out_) throw Error(ErrorKind::IoFailure, "write failed for " + path_.string());
  }
  void close() {
    out_.close();
    if (out_.fail()) throw Error(ErrorKind::IoFailure, "close failed for " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

inline void write_tracks(const fs::path& path, const std::vector<TrackRecord>& records) {
  TrackWriter w(path);
  for (const auto& r : records) w.write(r);
  w.close();
}

inline std::vector<TrackRecord> parse_tracks(std::istream& in, const std::string& name) {
  std::vector<TrackRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    auto fail = [&](const std::string& why) {
      return Error(ErrorKind::ParseError, name + ":" + std::to_string(lineno) + ": " + why);
    };
    const auto f = split_fields(body);
    if (f.size() != 9) throw fail("expected 9 fields");
    TrackRecord r;
    const auto frame = parse_number<std::int64_t>(f[0]);
    const auto id = parse_number<std::int64_t>(f[1]);
    const auto x = parse_number<double>(f[2]);
    const auto y = parse_number<double>(f[3]);
    const auto w = parse_number<double>(f[4]);
    const auto h = parse_number<double>(f[5]);
    if (!frame || !id || !x || !y || !w || !h) throw fail("malformed number");
    if (*w < 0.0 || *h < 0.0) throw fail("negative box dimension");
    if (f[6].size() != 1 || std::string_view("COK").find(f[6][0]) == std::string_view::npos) throw fail("bad branch");
    if (f[7] != "0" && f[7] != "1") throw fail("bad flag");
    if (f[8].size() != 1 || std::string_view("AOT").find(f[8][0]) == std::string_view::npos) throw fail("bad status");
    r.frame = *frame;
    r.id = *id;
    r.box = {*x, *y, *w, *h};
    r.branch = f[6][0];
    r.flag = f[7] == "1";
    r.status = f[8][0];
    out.push_back(r);
  }
  return out;
}

inline std::vector<TrackRecord> read_tracks(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open track file " + path.string());
  return parse_tracks(in, path.string());
}

}  // namespace kerman
