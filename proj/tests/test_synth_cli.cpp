#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "choreokit/choreokit.hpp"
#include "support.hpp"

using namespace choreokit;
using testing_support::read_text;
using testing_support::TempDir;

namespace {

SynthSource source(double bpm, double duration_s, std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  return synth_source("s", bpm, duration_s, seed, spec);
}

// Runs the CLI with stdout/stderr captured to files under `dir`; returns the
// exit status.
int cli(const std::string& args, const std::filesystem::path& dir, std::string* out = nullptr) {
  const auto out_path = dir / "stdout.txt", err_path = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && '" + std::string(CHOREOKIT_CLI) + "' " + args + " >'" +
                          out_path.string() + "' 2>'" + err_path.string() + "'";
  const int status = std::system(cmd.c_str());
  if (out) *out = read_text(out_path);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// One small synthetic corpus shared by the CLI tests.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    SynthSpec spec;
    spec.n_sources = 2;
    spec.duration_s = 12.0;
    spec.seed = 5;
    write_synth_dataset(synth_dataset(spec), dir_->path() / "data");
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::filesystem::path data() { return dir_->path() / "data"; }
  static TempDir* dir_;
};

TempDir* CliTest::dir_ = nullptr;

}  // namespace

TEST(Synth, BeatScheduleAt120BpmIsEveryTwelveFrames) {
  const SynthSource s = source(120, 10, 1);
  ASSERT_GE(s.beat_frames.size(), 19u);
  EXPECT_EQ(s.beat_frames.front(), 6);
  for (std::size_t i = 1; i < s.beat_frames.size(); ++i) EXPECT_EQ(s.beat_frames[i] - s.beat_frames[i - 1], 12);
  ASSERT_EQ(s.pose_beat_frames.size(), s.beat_frames.size());
  std::size_t exact = 0;
  for (std::size_t i = 0; i < s.beat_frames.size(); ++i) {
    EXPECT_LE(std::abs(s.pose_beat_frames[i] - s.beat_frames[i]), 1);
    exact += s.pose_beat_frames[i] == s.beat_frames[i];
  }
  EXPECT_GE(exact, s.beat_frames.size() - 2);
}

TEST(Synth, SeedsChangeMotionNotSchedule) {
  const SynthSource a = source(90, 12, 1), b = source(90, 12, 2);
  EXPECT_EQ(a.beat_frames, b.beat_frames);
  EXPECT_EQ(a.beat_times_s, b.beat_times_s);
  EXPECT_NE(a.poses, b.poses);
  EXPECT_EQ(a.poses, source(90, 12, 1).poses);
  EXPECT_EQ(a.audio.samples, source(90, 12, 1).audio.samples);
}

TEST(Synth, ConsecutiveSectionsDiffer) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SynthSource s = source(120, 40, seed);
    ASSERT_EQ(s.section_styles.size(), 10u);
    for (std::size_t k = 0; k < s.section_styles.size(); ++k) {
      EXPECT_GE(s.section_styles[k], 0);
      EXPECT_LT(s.section_styles[k], 4);
      if (k > 0) EXPECT_NE(s.section_styles[k], s.section_styles[k - 1]);
    }
  }
}

TEST(Synth, SequenceShapeAndConfidence) {
  const SynthSource s = source(60, 8, 3);
  EXPECT_EQ(s.poses.size(), 192u);
  EXPECT_EQ(s.audio.samples.size(), static_cast<std::size_t>(8 * kInternalSampleRate));
  for (std::size_t f = 0; f < s.poses.size(); ++f) {
    EXPECT_EQ(s.poses.frames[f].frame_index, static_cast<std::int64_t>(f));
    for (const Keypoint& k : s.poses.frames[f].keypoints) EXPECT_GT(k.confidence, 0.0);
  }
}

TEST(Synth, DetectedTempoMatchesSchedule) {
  for (double bpm : {60.0, 90.0, 120.0, 150.0}) {
    const SynthSource s = source(bpm, 20, 4);
    EXPECT_NEAR(detect_beats(s.audio, kDefaultFps).tempo_bpm, bpm, 2.0) << bpm;
  }
}

TEST(Synth, DatasetCyclesTempoList) {
  SynthSpec spec;
  spec.n_sources = 6;
  spec.duration_s = 4;
  const auto d = synth_dataset(spec);
  ASSERT_EQ(d.size(), 6u);
  EXPECT_EQ(d[0].bpm, 60);
  EXPECT_EQ(d[3].bpm, 150);
  EXPECT_EQ(d[4].bpm, 60);
  std::set<std::string> ids;
  for (const auto& s : d) ids.insert(s.id);
  EXPECT_EQ(ids.size(), 6u);
}

TEST(Synth, WrittenFilesRoundTrip) {
  TempDir dir;
  SynthSpec spec;
  spec.n_sources = 1;
  spec.duration_s = 6;
  const auto d = synth_dataset(spec);
  write_synth_dataset(d, dir.path());
  const std::string id = d[0].id;
  EXPECT_EQ(load_keypoint_sequence(dir / (id + ".json")).size(), d[0].poses.size());
  EXPECT_EQ(load_audio(dir / (id + ".wav")).samples.size(), d[0].audio.samples.size());
  const auto beats = nlohmann::json::parse(read_text(dir / (id + ".beats.json")));
  EXPECT_EQ(beats["beat_frames"].get<std::vector<std::int64_t>>(), d[0].beat_frames);
  EXPECT_EQ(beats["section_styles"].get<std::vector<int>>(), d[0].section_styles);
}

TEST_F(CliTest, NoArgumentsIsUsageError) {
  TempDir work;
  EXPECT_EQ(cli("", work.path()), 1);
  EXPECT_EQ(cli("frobnicate", work.path()), 1);
  EXPECT_EQ(cli("ingest", work.path()), 1);
  EXPECT_EQ(cli("train --pairs x --out m --margin-form sideways", work.path()), 1);
  EXPECT_EQ(cli("generate --model m --db d --audio a --out o --omega-a 30 --omega-b 24", work.path()), 1);
  EXPECT_EQ(cli("--help", work.path()), 0);
}

TEST_F(CliTest, MissingInputsAreDataErrors) {
  TempDir work;
  std::filesystem::create_directories(work.path() / "empty");
  EXPECT_EQ(cli("ingest empty --out db.ckdb", work.path()), 2);
  EXPECT_FALSE(std::filesystem::exists(work.path() / "db.ckdb"));
  EXPECT_EQ(cli("render --poses nope.json --out frames", work.path()), 2);
  std::ofstream(work.path() / "bad.json") << "{ not json";
  EXPECT_EQ(cli("render --poses bad.json --out frames", work.path()), 2);
}

TEST_F(CliTest, IngestIsDeterministic) {
  TempDir work;
  const std::string d = data().string();
  ASSERT_EQ(cli("ingest '" + d + "' --out a.ckdb", work.path()), 0);
  ASSERT_EQ(cli("ingest '" + d + "' --out b.ckdb", work.path()), 0);
  EXPECT_TRUE(read_text(work.path() / "a.ckdb") == read_text(work.path() / "b.ckdb"));
  EXPECT_GT(load_database(work.path() / "a.ckdb").size(), 0u);
}

TEST_F(CliTest, ConfigFileAppliesAndFlagsOverrideIt) {
  TempDir work;
  const std::string pairs = "--pairs '" + data().string() + "'";
  std::string out;
  // Defaults: 500 epochs.
  std::ofstream(work.path() / "one.cfg") << "# quick run\nepochs = 1\nmargin_form = offset\n";
  ASSERT_EQ(cli("--config one.cfg train " + pairs + " --out a.ckmp", work.path(), &out), 0);
  EXPECT_NE(out.find("epoch 1/1 "), std::string::npos) << out;
  EXPECT_EQ(load_model(work.path() / "a.ckmp").margin_form, MarginForm::kOffset);
  ASSERT_EQ(cli("--config one.cfg train --epochs 2 --margin-form hinge " + pairs + " --out b.ckmp", work.path(), &out), 0);
  EXPECT_NE(out.find("epoch 2/2 "), std::string::npos) << out;
  EXPECT_EQ(load_model(work.path() / "b.ckmp").margin_form, MarginForm::kHinge);
  std::ofstream(work.path() / "bad.cfg") << "epochz = 1\n";
  EXPECT_EQ(cli("--config bad.cfg train " + pairs + " --out c.ckmp", work.path()), 1);
  EXPECT_EQ(cli("--config missing.cfg train " + pairs + " --out c.ckmp", work.path()), 1);
}

TEST_F(CliTest, TrainGenerateEvalRenderCloseTheLoop) {
  TempDir work;
  const std::string d = data().string();
  ASSERT_EQ(cli("ingest '" + d + "' --out db.ckdb", work.path()), 0);
  ASSERT_EQ(cli("train --pairs '" + d + "' --epochs 2 --out m.ckmp", work.path()), 0);
  const std::string wav = (data() / "synth00_060bpm.wav").string();
  const std::string ref = (data() / "synth00_060bpm.json").string();
  ASSERT_EQ(cli("generate --model m.ckmp --db db.ckdb --audio '" + wav + "' --out g.json", work.path()), 0);
  ASSERT_EQ(cli("generate --model m.ckmp --db db.ckdb --audio '" + wav + "' --out g2.json", work.path()), 0);
  EXPECT_TRUE(read_text(work.path() / "g.json") == read_text(work.path() / "g2.json"));
  ASSERT_EQ(cli("generate --model m.ckmp --db db.ckdb --audio '" + wav + "' --skip-align --out raw.json", work.path()), 0);
  EXPECT_EQ(load_keypoint_sequence(work.path() / "raw.json").size(), load_keypoint_sequence(work.path() / "g.json").size());

  std::string out;
  ASSERT_EQ(cli("eval --poses g.json --ref '" + ref + "' --audio '" + wav + "' --report r.json", work.path(), &out), 0);
  const auto report = nlohmann::json::parse(read_text(work.path() / "r.json"));
  for (const char* key : {"s_ba", "mdd_h", "mdd_f", "sdd_h", "sdd_f", "hand_hist", "foot_hist"})
    EXPECT_TRUE(report.contains(key)) << key;
  EXPECT_EQ(nlohmann::json::parse(out), report);

  ASSERT_EQ(cli("render --poses g.json --out frames --width 96 --height 54 --gif g.gif", work.path()), 0);
  const auto manifest = nlohmann::json::parse(read_text(work.path() / "frames" / "manifest.json"));
  EXPECT_EQ(manifest["frame_count"].get<std::size_t>(), load_keypoint_sequence(work.path() / "g.json").size());
  EXPECT_TRUE(std::filesystem::exists(work.path() / "g.gif"));
}

TEST_F(CliTest, GenerateRejectsDurationMismatch) {
  TempDir work;
  const std::string d = data().string();
  ASSERT_EQ(cli("ingest '" + d + "' --duration 2 --out db2.ckdb", work.path()), 0);
  ASSERT_EQ(cli("train --pairs '" + d + "' --epochs 1 --out m4.ckmp", work.path()), 0);
  const std::string wav = (data() / "synth00_060bpm.wav").string();
  EXPECT_EQ(cli("generate --model m4.ckmp --db db2.ckdb --audio '" + wav + "' --out g.json", work.path()), 2);
}
