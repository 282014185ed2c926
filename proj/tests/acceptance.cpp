// Acceptance suite: one PASS/FAIL line per criterion A1-A8.
// Usage: choreokit_acceptance [A1 A2 ...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "choreokit/choreokit.hpp"
#include "gradient_check.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace choreokit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// A1: central differences vs analytic gradients on the tiny model.
Outcome a1_gradient_check() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;
  for (MarginForm form : {MarginForm::kHinge, MarginForm::kOffset})
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto r = testing_support::check_tiny_model_gradients(seed, form, 1e-5);
      checked += r.checked;
      if (r.max_relative_error >= worst) {
        worst = r.max_relative_error;
        where = r.worst;
      }
    }
  const double t = seconds_since(t0);
  return {worst <= 1e-4 && t < 10.0,
          fmt("max relative error %.2e at %s over %zu entries, 5 seeds x 2 loss forms (limit 1e-4); %.2f s (limit 10 s)",
              worst, where.c_str(), checked, t)};
}

// A2: 200 paired fragments (20 sources x 40 s at 60/90/120/150 BPM); the
// last 4 sources are held out.
Outcome a2_correlation_accuracy() {
  SynthSpec spec;
  spec.n_sources = 20;
  spec.duration_s = 40.0;
  const auto sources = synth_dataset(spec);
  const std::vector<SynthSource> train_src(sources.begin(), sources.begin() + 16), test_src(sources.begin() + 16, sources.end());
  const PairedCorpus train_corpus = paired_fragments(train_src), test_corpus = paired_fragments(test_src);
  const std::size_t fragments = train_corpus.pose_fragments.size() + test_corpus.pose_fragments.size();
  const PairSet train_pairs = make_training_pairs(train_corpus.pose_fragments, train_corpus.audio_fragments, 7);
  const PairSet test_pairs = make_training_pairs(test_corpus.pose_fragments, test_corpus.audio_fragments, 8);

  const auto t0 = Clock::now();
  const TrainResult result = train(train_pairs.pairs, Hyperparameters{});
  const double t = seconds_since(t0);
  const double train_acc = correlation_accuracy(result.model, train_pairs.pairs);
  const double test_acc = correlation_accuracy(result.model, test_pairs.pairs);
  return {fragments == 200 && test_acc >= 0.80 && t < 600.0,
          fmt("%zu fragments, %zu train / %zu held-out pairs; held-out accuracy %.3f (limit 0.80), train %.3f; "
              "500 epochs in %.0f s (limit 600 s)",
              fragments, train_pairs.pairs.size(), test_pairs.pairs.size(), test_acc, train_acc, t)};
}

// A3: period-12 sinusoid, amplitude 20 px, 40 px jump on frames 50-53.
Outcome a3_spatial_repair() {
  const std::size_t first = 50, len = 4;
  const auto truth = testing_support::make_sequence(96, [](std::size_t f, std::size_t j) {
    const auto [x, y] = testing_support::rest_position(j);
    return std::pair{x + 20.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(f) / 12.0), y};
  });
  PoseSequence broken = truth;
  for (std::size_t f = first; f < first + len; ++f)
    for (Keypoint& k : broken.frames[f].keypoints) k.x += 40.0;

  SpatialAlignOptions options;
  options.windows.repair = 8;
  options.windows.reference = 24;
  options.volatility_threshold = 5.0;
  const auto t0 = Clock::now();
  const PoseSequence out = spatial_align(broken, options);
  const double t = seconds_since(t0);

  // Window of repair+1 frames centred on the jump.
  const std::size_t begin = first - 4, end = first + 4;
  double max_step = 0.0, endpoint = 0.0, sse = 0.0;
  std::size_t n = 0;
  for (std::size_t f = begin; f <= end; ++f)
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      const Keypoint& o = out.frames[f].keypoints[j];
      const Keypoint& g = truth.frames[f].keypoints[j];
      if (f > begin) max_step = std::max(max_step, distance(o, out.frames[f - 1].keypoints[j]));
      if (f == begin || f == end) {
        const Keypoint& b = broken.frames[f].keypoints[j];
        endpoint = std::max({endpoint, std::abs(o.x - b.x), std::abs(o.y - b.y)});
      }
      sse += (o.x - g.x) * (o.x - g.x) + (o.y - g.y) * (o.y - g.y);
      ++n;
    }
  const double rms = std::sqrt(sse / static_cast<double>(n));
  return {max_step <= 10.0 + 1e-9 && endpoint <= 1e-6 && rms <= 3.0 && t < 1.0,
          fmt("window %zu-%zu: max step %.6f px (limit 10), endpoint change %.1e (limit 1e-6), RMS vs truth %.2e px "
              "(limit 3); %.3f s (limit 1 s)",
              begin, end, max_step, endpoint, rms, t)};
}

// A4: every lag 0..omega_c/2 at each of the four tempi.
Outcome a4_temporal_alignment() {
  const auto t0 = Clock::now();
  double pre_sum = 0.0, post_sum = 0.0;
  std::size_t cases = 0;
  SynthSpec spec;
  for (double bpm : {60.0, 90.0, 120.0, 150.0}) {
    const SynthSource s = synth_source("a4", bpm, 20.0, 11, spec);
    const auto omega_c = static_cast<std::int64_t>(std::lround(60.0 / bpm * kDefaultFps));
    for (std::int64_t lag = 0; lag <= omega_c / 2; ++lag) {
      // Audio beats earlier by `lag`: the dancer lags the music.
      BeatTrack beats;
      beats.tempo_bpm = bpm;
      for (std::int64_t b : s.beat_frames)
        if (b - lag >= 0) beats.beat_frames.push_back(b - lag);
      pre_sum += beat_alignment_score(beats.beat_frames, pose_beats_for(s.poses, beats), 2);
      const PoseSequence aligned = temporal_align(s.poses, beats, static_cast<std::size_t>(omega_c));
      post_sum += beat_alignment_score(beats.beat_frames, pose_beats_for(aligned, beats), 2);
      ++cases;
    }
  }
  const double pre = pre_sum / static_cast<double>(cases), post = post_sum / static_cast<double>(cases);
  const double t = seconds_since(t0);
  return {post >= 0.75 && post - pre >= 0.15 && t < 5.0,
          fmt("%zu sequences: S_BA(tol 2) %.3f before, %.3f after (limits: after >= 0.75, gain >= 0.15); %.2f s (limit 5 s)",
              cases, pre, post, t)};
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = "'" + std::string(CHOREOKIT_CLI) + "' " + args + " >'" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Shared by A5 and A8: two `demo --seed 7` runs.
struct DemoRuns {
  fs::path root;
  int status[2] = {-1, -1};
  double seconds = 0.0;
};

const DemoRuns& demo_runs() {
  static DemoRuns runs = [] {
    DemoRuns r;
    r.root = fs::temp_directory_path() / ("choreokit_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(r.root);
    fs::create_directories(r.root);
    const auto t0 = Clock::now();
    for (int i = 0; i < 2; ++i) {
      const fs::path out = r.root / ("run" + std::to_string(i));
      r.status[i] = run_cli("demo --seed 7 --out '" + out.string() + "'", r.root / ("run" + std::to_string(i) + ".log"));
    }
    r.seconds = seconds_since(t0);
    return r;
  }();
  return runs;
}

Outcome a5_jitter_distribution() {
  const DemoRuns& r = demo_runs();
  if (r.status[0] != 0) return {false, fmt("demo exited with status %d", r.status[0])};
  const auto report = nlohmann::json::parse(testing_support::read_text(r.root / "run0" / "report.json"));
  const auto hand = report["hand_hist"].get<std::vector<double>>();
  const auto foot = report["foot_hist"].get<std::vector<double>>();
  return {hand[4] == 0.0 && foot[4] == 0.0 && foot[0] >= 0.90,
          fmt("(80,400) px mass: hands %.4f, feet %.4f (limit 0); feet (0,20) mass %.4f (limit 0.90)", hand[4],
              foot[4], foot[0])};
}

// Direct summation of the smoothed symmetric KL divergence.
double kl_oracle(const std::vector<double>& p, const std::vector<double>& q, double eps) {
  long double zp = 0, zq = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    zp += p[i] + eps;
    zq += q[i] + eps;
  }
  long double a = 0, b = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double pi = (p[i] + eps) / zp, qi = (q[i] + eps) / zq;
    a += pi * std::log(pi / qi);
    b += qi * std::log(qi / pi);
  }
  return static_cast<double>((a + b) / 2);
}

Outcome a6_metrics() {
  const auto walks = testing_support::load_random_walks();
  double self = 0.0, hist_err = 0.0, kl_err = 0.0;
  for (const auto& w : walks) {
    for (BodyPart part : {BodyPart::kHand, BodyPart::kFoot}) {
      self = std::max({self, std::abs(mdd(w.seq, w.seq, part)), std::abs(sdd(w.seq, w.seq, part))});
      const auto h = movement_histogram(w.seq, part).mass;
      const auto& oracle = part == BodyPart::kHand ? w.hand : w.foot;
      for (std::size_t b = 0; b < kMovementBins; ++b) hist_err = std::max(hist_err, std::abs(h[b] - oracle[b]));
    }
  }
  std::mt19937_64 gen(6);
  std::gamma_distribution<double> gamma(0.7, 1.0);
  std::bernoulli_distribution empty(0.2);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> p(kMovementBins), q(kMovementBins);
    double sp = 0, sq = 0;
    for (std::size_t b = 0; b < kMovementBins; ++b) {
      sp += p[b] = empty(gen) ? 0.0 : gamma(gen);
      sq += q[b] = empty(gen) ? 0.0 : gamma(gen);
    }
    if (sp == 0.0) sp = p[0] = 1.0;
    if (sq == 0.0) sq = q[0] = 1.0;
    for (std::size_t b = 0; b < kMovementBins; ++b) {
      p[b] /= sp;
      q[b] /= sq;
    }
    kl_err = std::max(kl_err, std::abs(symmetric_kl(p, q) - kl_oracle(p, q, kKlSmoothing)));
  }
  return {self == 0.0 && kl_err <= 1e-12 && hist_err <= 1e-12,
          fmt("self-distance max %.1e (limit 0); symmetric KL vs direct sum max error %.1e on 100 pairs (limit 1e-12); "
              "histograms vs brute force max error %.1e on %zu sequences",
              self, kl_err, hist_err, walks.size())};
}

// A7: retrieval against an exhaustive oracle that re-encodes everything.
Outcome a7_retrieval() {
  ModelConfig config;
  const ModelParams model = init_model(config, 77);
  std::mt19937_64 gen(78);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<PoseFragment> frags;
  for (int i = 0; i < 100; ++i) {
    PoseFragment f;
    f.source_id = "db";
    f.start_frame = 96 * i;
    f.duration_s = 4;
    const double amp = 5.0 + 20.0 * std::abs(n(gen));
    f.frames = testing_support::make_sequence(96, [&](std::size_t t, std::size_t j) {
      const auto [x, y] = testing_support::rest_position(j);
      return std::pair{x + amp * std::sin(0.3 * static_cast<double>(t) + static_cast<double>(j * i)) + n(gen),
                       y + n(gen)};
    });
    frags.push_back(std::move(f));
  }
  const FragmentDatabase db = attach_embeddings(model, build_database(std::move(frags)));
  std::size_t agree = 0;
  for (int qi = 0; qi < 20; ++qi) {
    MfccFragment q;
    q.frames.resize(96);
    for (auto& v : q.frames)
      for (double& x : v) x = 5.0 * n(gen);
    const Retrieval got = retrieve(model, db, q);
    const EmbeddingVec a = audio_encode(model.audio, q);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < db.size(); ++i) {
      const double d = (pose_encode(model.pose, db.fragments[i]) - a).norm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    agree += got.index == best && std::abs(got.distance - best_d) <= 1e-12;
  }
  return {agree == 20, fmt("%zu/20 queries match the exhaustive search over 100 fragments", agree)};
}

Outcome a8_determinism() {
  const DemoRuns& r = demo_runs();
  if (r.status[0] != 0 || r.status[1] != 0) return {false, fmt("demo exit statuses %d, %d", r.status[0], r.status[1])};
  std::vector<fs::path> files = {"generated.json", "report.json"};
  for (const auto& e : fs::directory_iterator(r.root / "run0" / "frames")) files.push_back(fs::path("frames") / e.path().filename());
  std::size_t same = 0, frames = 0;
  std::string first_diff;
  for (const fs::path& f : files) {
    frames += f.parent_path() == "frames" && f.extension() == ".png";
    const fs::path a = r.root / "run0" / f, b = r.root / "run1" / f;
    if (fs::exists(b) && testing_support::read_text(a) == testing_support::read_text(b)) {
      ++same;
    } else if (first_diff.empty()) {
      first_diff = f.string();
    }
  }
  std::size_t frames1 = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(r.root / "run1" / "frames")) ++frames1;
  const bool pass = same == files.size() && frames > 0 && frames1 == frames + 1;  // + manifest
  return {pass, fmt("%zu/%zu files byte-identical (poses, report, %zu frames + manifest)%s%s; two runs %.1f s", same,
                    files.size(), frames, first_diff.empty() ? "" : "; first difference: ", first_diff.c_str(),
                    r.seconds)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"A1", a1_gradient_check},    {"A2", a2_correlation_accuracy}, {"A3", a3_spatial_repair},
      {"A4", a4_temporal_alignment}, {"A5", a5_jitter_distribution},  {"A6", a6_metrics},
      {"A7", a7_retrieval},          {"A8", a8_determinism}};
  std::set<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    if (!wanted.empty() && !wanted.contains(name)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s  %s\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::error_code ec;
  fs::remove_all(fs::temp_directory_path() / ("choreokit_acceptance_" + std::to_string(::getpid())), ec);
  return failures == 0 ? 0 : 1;
}
