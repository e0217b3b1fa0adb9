#include <gtest/gtest.h>

#include <sstream>

#include "kerman/cli.hpp"
#include "support.hpp"

namespace kerman {
namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "kerman");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

TEST(ConfigFile, OverridesDefaults) {
  testing::TempDir dir("cfg");
  std::ofstream(dir / "k.cfg") << "# tuning\nkalman_q = 0.5\n  trhd=12 # absolute\nworkers=2\n\n";
  ManagerConfig cfg;
  load_config_file(cfg, dir / "k.cfg");
  EXPECT_DOUBLE_EQ(cfg.kalman.q, 0.5);
  ASSERT_TRUE(cfg.fusion.trhd);
  EXPECT_DOUBLE_EQ(*cfg.fusion.trhd, 12.0);
  EXPECT_EQ(cfg.workers, 2);
  EXPECT_DOUBLE_EQ(cfg.kalman.r, 4.0);
}

TEST(ConfigFile, UnknownKeyAndBadValueRejected) {
  testing::TempDir dir("cfg");
  std::ofstream(dir / "a.cfg") << "no_such_key = 1\n";
  std::ofstream(dir / "b.cfg") << "kalman_q = fast\n";
  std::ofstream(dir / "c.cfg") << "kalman_q\n";
  for (const char* name : {"a.cfg", "b.cfg", "c.cfg"}) {
    ManagerConfig cfg;
    try {
      load_config_file(cfg, dir / name);
      FAIL() << name;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
      EXPECT_NE(std::string(e.what()).find(":1"), std::string::npos);
    }
  }
}

TEST(ConfigFile, EveryKeyRoundTripsItsDefault) {
  const ManagerConfig defaults;
  for (const auto& [name, key] : ConfigKeys::all()) {
    ManagerConfig cfg;
    EXPECT_TRUE(key.set(cfg, key.get(defaults))) << name;
    EXPECT_EQ(key.get(cfg), key.get(defaults)) << name;
  }
}

TEST(BuildConfig, FlagOverridesFileOverridesDefault) {
  testing::TempDir dir("cfg");
  std::ofstream(dir / "k.cfg") << "workers = 3\nhuman_chk_thld = 10\n";
  const ManagerConfig file_only = cli::build_config((dir / "k.cfg").string(), std::nullopt, "");
  EXPECT_EQ(file_only.workers, 3);
  EXPECT_EQ(file_only.human_chk_thld, 10);
  const ManagerConfig flagged = cli::build_config((dir / "k.cfg").string(), 1, "kcf-only");
  EXPECT_EQ(flagged.workers, 1);
  EXPECT_EQ(flagged.human_chk_thld, 10);
  EXPECT_EQ(flagged.mode, TrackerMode::KcfOnly);
  EXPECT_EQ(cli::build_config("", std::nullopt, "").workers, 0);
}

TEST(ExitCodes, MappedFromErrorKinds) {
  EXPECT_EQ(cli::exit_code_for(ErrorKind::MissingFrame), 2);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::ParseError), 2);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::IoFailure), 2);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::InvalidConfig), 2);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::FrameOutOfOrder), 3);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::SamplingUnavailable), 3);
}

TEST(Cli, HelpDocumentsFlagsAndDefaults) {
  const auto top = run_cli({"--help"});
  EXPECT_EQ(top.code, 0);
  EXPECT_NE(top.out.find("kalman_q (default 0.01)"), std::string::npos);
  const auto track = run_cli({"track", "--help"});
  EXPECT_EQ(track.code, 0);
  for (const char* flag : {"--frames", "--raw", "--detections", "--out", "--config", "--workers", "--baseline"}) {
    EXPECT_NE(track.out.find(flag), std::string::npos) << flag;
  }
  const auto bench = run_cli({"bench", "--help"});
  EXPECT_EQ(bench.code, 0);
  EXPECT_NE(bench.out.find("--repeat"), std::string::npos);
  EXPECT_NE(bench.out.find("3"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
  EXPECT_EQ(run_cli({"track", "--detections", "d", "--out", "o"}).code, 1);
  EXPECT_EQ(run_cli({"track", "--frames", "a", "--raw", "b", "--detections", "d", "--out", "o"}).code, 1);
  EXPECT_EQ(run_cli({"track", "--frames", "a", "--detections", "d", "--out", "o", "--baseline", "kf"}).code, 1);
  EXPECT_EQ(run_cli({"bench", "--tracks", "5"}).code, 1);
}

TEST(Cli, UnknownScenarioListsNames) {
  testing::TempDir dir("cli");
  const auto r = run_cli({"synth", "--scenario", "nope", "--out", dir.path().string()});
  EXPECT_EQ(r.code, 1);
  for (const char* n : {"occlusion", "fastmove", "crowd", "pair"}) EXPECT_NE(r.err.find(n), std::string::npos);
}

TEST(Cli, EvalIdentityAndParseFailure) {
  testing::TempDir dir("cli");
  ASSERT_EQ(run_cli({"synth", "--scenario", "crowd", "--frames", "30", "--out", dir.path().string()}).code, 0);
  const std::string truth = (dir / "truth.txt").string();
  const auto same = run_cli({"eval", "--pred", truth, "--truth", truth});
  EXPECT_EQ(same.code, 0);
  EXPECT_NE(same.out.find("eval success_rate=1 "), std::string::npos);

  write_tracks(dir / "empty.txt", {});
  const auto empty = run_cli({"eval", "--pred", (dir / "empty.txt").string(), "--truth", truth});
  EXPECT_EQ(empty.code, 0);
  EXPECT_NE(empty.out.find("lost_tracks=10 "), std::string::npos);

  std::ofstream(dir / "bad.txt") << "1,2,3\n";
  const auto bad = run_cli({"eval", "--pred", (dir / "bad.txt").string(), "--truth", truth});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("bad.txt:1"), std::string::npos);
}

TEST(Cli, MissingDetectionsFileIsInputError) {
  testing::TempDir dir("cli");
  ASSERT_EQ(run_cli({"synth", "--scenario", "pair", "--frames", "5", "--out", dir.path().string()}).code, 0);
  const std::string missing = (dir / "missing.txt").string();
  const auto r = run_cli({"track", "--frames", (dir / "frames").string(), "--detections", missing, "--out",
                          (dir / "t.txt").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(missing), std::string::npos);
}

TEST(Cli, TrackOcclusionHasOcclusionFrames) {
  testing::TempDir dir("cli");
  ASSERT_EQ(run_cli({"synth", "--scenario", "occlusion", "--frames", "200", "--seed", "7", "--out",
                     dir.path().string()})
                .code,
            0);
  const auto r = run_cli({"track", "--frames", (dir / "frames").string(), "--detections",
                          (dir / "detections.txt").string(), "--out", (dir / "t.txt").string(), "--workers", "1",
                          "--audit", (dir / "audit.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("bs calls        200"), std::string::npos);
  const auto recs = read_tracks(dir / "t.txt");
  const auto truth = read_tracks(dir / "truth.txt");
  const Scenario s = builtin_scenario("occlusion");
  std::size_t occluded = 0;
  for (const auto& rec : recs) {
    const auto b = actor_box(s.actors[0], rec.frame);
    if (rec.branch == 'O' && b && visible_fraction(s, *b) < 0.5) ++occluded;
  }
  EXPECT_GT(occluded, 0u);
  EXPECT_GE(evaluate(recs, truth).success_rate, 0.9);
  EXPECT_GT(std::filesystem::file_size(dir / "audit.txt"), 0u);

  const auto base = run_cli({"track", "--frames", (dir / "frames").string(), "--detections",
                             (dir / "detections.txt").string(), "--out", (dir / "b.txt").string(), "--workers", "1",
                             "--baseline", "kcf-only"});
  ASSERT_EQ(base.code, 0) << base.err;
  const auto brecs = read_tracks(dir / "b.txt");
  bool dropped = false;
  for (const auto& rec : brecs) {
    if (rec.id != 0) continue;
    const auto b = actor_box(s.actors[0], rec.frame);
    if (b && iou(rec.box, *b) < 0.5) dropped = true;
  }
  EXPECT_TRUE(dropped);
}

}  // namespace
}  // namespace kerman
