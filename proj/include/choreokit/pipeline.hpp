#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "choreokit/alignment.hpp"
#include "choreokit/audio.hpp"
#include "choreokit/beats.hpp"
#include "choreokit/crossmodal.hpp"
#include "choreokit/database.hpp"
#include "choreokit/metrics.hpp"
#include "choreokit/mfcc.hpp"
#include "choreokit/pose.hpp"
#include "choreokit/pose_processing.hpp"
#include "choreokit/synth.hpp"

namespace choreokit {

struct PreprocessOptions {
  int duration_s = 4;
  double jitter_threshold = kDefaultJitterThreshold;
  double teleport_threshold = kDefaultTeleportThreshold;
  double target_height = kDefaultTargetHeight;
};

struct SourceStats {
  std::string source_id;
  std::size_t frames = 0;
  std::size_t removed = 0;
  std::size_t fragments = 0;
};

// interpolate -> smooth -> filter -> split at gaps -> segment -> normalize.
// Fragments keep their original frame indices.
std::vector<PoseFragment> preprocess_poses(const PoseSequence& seq, const std::string& source_id,
                                           const PreprocessOptions& options, SourceStats* stats = nullptr);

struct IngestResult {
  FragmentDatabase database;
  std::vector<SourceStats> stats;
  std::vector<std::string> failures;  // "<file>: <reason>" for unreadable inputs
};

// Every *.json keypoint file in `dir` (sorted by name; *.beats.json
// annotations are skipped). Unreadable files are reported in `failures`;
// throws if no fragment survives.
IngestResult ingest_directory(const std::filesystem::path& dir, const PreprocessOptions& options = {});

// Index-aligned fragments: audio_fragments[i] covers the same frames as
// pose_fragments[i].
struct PairedCorpus {
  std::vector<PoseFragment> pose_fragments;
  std::vector<MfccFragment> audio_fragments;
  std::vector<SourceStats> stats;

  void append(PairedCorpus other);
};

PairedCorpus paired_fragments(const PoseSequence& poses, const AudioClip& audio, const std::string& source_id,
                              const PreprocessOptions& options = {});
PairedCorpus paired_fragments(const std::vector<SynthSource>& sources, const PreprocessOptions& options = {});
// <id>.json + <id>.wav pairs in `dir`.
PairedCorpus load_paired_directory(const std::filesystem::path& dir, const PreprocessOptions& options = {});

struct GenerateOptions {
  SpatialAlignOptions spatial{};
  bool skip_align = false;
};

struct GenerateResult {
  PoseSequence poses;
  BeatTrack beats;
  std::vector<std::string> fragment_ids;  // retrieved, in playback order
};

// MFCC -> segment -> retrieve -> place at canvas centre -> concatenate ->
// spatial_align -> temporal_align.
GenerateResult generate(const ModelParams& model, const FragmentDatabase& db, const AudioClip& audio,
                        const GenerateOptions& options = {});

struct EvalReport {
  double s_ba = 0.0;
  double mdd_h = 0.0;
  double mdd_f = 0.0;
  double sdd_h = 0.0;
  double sdd_f = 0.0;
  MovementHistogram hand_hist;
  MovementHistogram foot_hist;

  std::string to_json() const;
};

// Pose beats are taken one per musical-beat window.
std::vector<std::int64_t> pose_beats_for(const PoseSequence& poses, const BeatTrack& beats);

EvalReport evaluate(const PoseSequence& poses, const PoseSequence& reference, const BeatTrack& beats,
                    int tolerance = 2);

struct DemoOptions {
  std::uint64_t seed = 7;
  std::size_t sources = 8;
  double duration_s = 24.0;
  int epochs = 40;
  std::filesystem::path out_dir = "demo_out";
  bool render = true;
  Resolution render_canvas{480, 270};
};

struct DemoResult {
  EvalReport report;
  double train_accuracy = 0.0;
  std::filesystem::path poses_path;
  std::filesystem::path report_path;
};

// synth -> ingest -> train -> generate -> eval (-> render) under out_dir.
DemoResult run_demo(const DemoOptions& options, std::ostream* log = nullptr);

}  // namespace choreokit
