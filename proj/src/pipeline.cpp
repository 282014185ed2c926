#include "choreokit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "choreokit/error.hpp"
#include "choreokit/model_io.hpp"
#include "choreokit/pose_io.hpp"
#include "choreokit/render.hpp"
#include "file_util.hpp"
#include "rng.hpp"

namespace choreokit {

namespace {

bool is_annotation(const std::filesystem::path& p) {
  const std::string name = p.filename().string();
  return name.size() > 11 && name.ends_with(".beats.json");
}

std::vector<std::filesystem::path> keypoint_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json" && !is_annotation(entry.path()))
      out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> to_vector(const MovementHistogram& h) { return {h.mass.begin(), h.mass.end()}; }

}  // namespace

std::vector<PoseFragment> preprocess_poses(const PoseSequence& seq, const std::string& source_id,
                                           const PreprocessOptions& options, SourceStats* stats) {
  if (stats) {
    stats->source_id = source_id;
    stats->frames = seq.size();
  }
  if (seq.empty()) return {};
  const PoseSequence smoothed = smooth_sequence(interpolate_missing(seq), options.jitter_threshold);
  const FilterResult filtered = filter_invalid_frames(smoothed, options.teleport_threshold);
  std::vector<PoseFragment> out;
  for (const PoseSequence& run : split_contiguous(filtered.sequence))
    for (PoseFragment& f : segment_fragments(run, options.duration_s, source_id))
      out.push_back(normalize_fragment(f, options.target_height));
  if (stats) {
    stats->removed = filtered.removed.size();
    stats->fragments = out.size();
  }
  return out;
}

IngestResult ingest_directory(const std::filesystem::path& dir, const PreprocessOptions& options) {
  const auto files = keypoint_files(dir);
  if (files.empty()) throw InvariantError("no keypoint files in " + dir.string());
  IngestResult result;
  std::vector<PoseFragment> fragments;
  for (const auto& file : files) {
    SourceStats stats;
    try {
      const PoseSequence seq = load_keypoint_sequence(file);
      auto frags = preprocess_poses(seq, file.stem().string(), options, &stats);
      fragments.insert(fragments.end(), std::make_move_iterator(frags.begin()), std::make_move_iterator(frags.end()));
    } catch (const Error& e) {
      result.failures.push_back(file.filename().string() + ": " + e.what());
      continue;
    }
    result.stats.push_back(stats);
  }
  if (fragments.empty())
    throw InvariantError("ingest produced no fragments from " + dir.string() +
                         (result.failures.empty() ? "" : " (" + std::to_string(result.failures.size()) + " unreadable files)"));
  result.database = build_database(std::move(fragments));
  return result;
}

void PairedCorpus::append(PairedCorpus other) {
  pose_fragments.insert(pose_fragments.end(), std::make_move_iterator(other.pose_fragments.begin()),
                        std::make_move_iterator(other.pose_fragments.end()));
  audio_fragments.insert(audio_fragments.end(), std::make_move_iterator(other.audio_fragments.begin()),
                         std::make_move_iterator(other.audio_fragments.end()));
  stats.insert(stats.end(), other.stats.begin(), other.stats.end());
}

PairedCorpus paired_fragments(const PoseSequence& poses, const AudioClip& audio, const std::string& source_id,
                              const PreprocessOptions& options) {
  PairedCorpus out;
  SourceStats stats;
  const MfccSequence mfcc = compute_mfcc(audio, poses.fps);
  for (PoseFragment& f : preprocess_poses(poses, source_id, options, &stats)) {
    // Frame indices are video frames, which are also MFCC frames.
    if (f.start_frame < 0 || static_cast<std::size_t>(f.start_frame) + f.length() > mfcc.size()) {
      --stats.fragments;
      continue;
    }
    out.audio_fragments.push_back(slice_mfcc(mfcc, f.start_frame, f.length(), f.duration_s, source_id));
    out.pose_fragments.push_back(std::move(f));
  }
  out.stats.push_back(stats);
  return out;
}

PairedCorpus paired_fragments(const std::vector<SynthSource>& sources, const PreprocessOptions& options) {
  PairedCorpus out;
  for (const SynthSource& s : sources) out.append(paired_fragments(s.poses, s.audio, s.id, options));
  return out;
}

PairedCorpus load_paired_directory(const std::filesystem::path& dir, const PreprocessOptions& options) {
  const auto files = keypoint_files(dir);
  if (files.empty()) throw InvariantError("no keypoint files in " + dir.string());
  PairedCorpus out;
  for (const auto& file : files) {
    std::filesystem::path wav = file;
    wav.replace_extension(".wav");
    if (!std::filesystem::exists(wav)) throw IoError(file.string() + " has no paired audio file " + wav.string());
    out.append(paired_fragments(load_keypoint_sequence(file), load_audio(wav), file.stem().string(), options));
  }
  if (out.pose_fragments.empty()) throw InvariantError("no paired fragments in " + dir.string());
  return out;
}

GenerateResult generate(const ModelParams& model, const FragmentDatabase& db, const AudioClip& audio,
                        const GenerateOptions& options) {
  if (db.empty()) throw InvariantError("the fragment database is empty");
  if (model.duration_s != db.duration_s || model.fps != db.fps)
    throw InvariantError("model was trained on " + std::to_string(model.duration_s) + " s fragments at " +
                         std::to_string(model.fps) + " fps but the database holds " + std::to_string(db.duration_s) +
                         " s fragments at " + std::to_string(db.fps) + " fps");
  if (!db.has_embeddings()) throw InvariantError("database fragments have no embeddings");

  const MfccSequence mfcc = compute_mfcc(audio, db.fps);
  const auto clips = segment_audio(mfcc, db.duration_s);
  if (clips.empty())
    throw InvariantError("audio is shorter than one " + std::to_string(db.duration_s) + " s fragment");

  GenerateResult result;
  PoseSequence& out = result.poses;
  out.fps = db.fps;
  out.resolution = db.resolution;
  const Eigen::Vector2d centre(db.resolution.width / 2.0, db.resolution.height / 2.0);
  for (const MfccFragment& clip : clips) {
    const PoseFragment& frag = db.fragments[retrieve(model, db, clip).index];
    result.fragment_ids.push_back(frag.id());
    const PoseSequence placed = translate(frag.frames, centre - centroid(frag.frames));
    out.frames.insert(out.frames.end(), placed.frames.begin(), placed.frames.end());
  }
  for (std::size_t i = 0; i < out.frames.size(); ++i) out.frames[i].frame_index = static_cast<std::int64_t>(i);

  result.beats = detect_beats(audio, db.fps);
  if (options.skip_align) return result;
  out = spatial_align(out, options.spatial);
  const auto fallback = result.beats.tempo_bpm > 0.0
                            ? static_cast<std::size_t>(std::lround(60.0 * db.fps / result.beats.tempo_bpm))
                            : static_cast<std::size_t>(options.spatial.windows.beat_search);
  out = temporal_align(out, result.beats, std::max<std::size_t>(2, fallback));
  return result;
}

std::string EvalReport::to_json() const {
  const nlohmann::json j = {{"s_ba", s_ba},   {"mdd_h", mdd_h},   {"mdd_f", mdd_f},
                            {"sdd_h", sdd_h}, {"sdd_f", sdd_f},   {"hand_hist", to_vector(hand_hist)},
                            {"foot_hist", to_vector(foot_hist)}};
  return j.dump(2) + "\n";
}

std::vector<std::int64_t> pose_beats_for(const PoseSequence& poses, const BeatTrack& beats) {
  const std::size_t fallback =
      beats.tempo_bpm > 0.0 ? static_cast<std::size_t>(std::lround(60.0 * poses.fps / beats.tempo_bpm)) : 12;
  const auto windows = beat_windows(beats, poses.size(), std::max<std::size_t>(2, fallback));
  std::vector<std::int64_t> out;
  for (std::size_t f : find_pose_beats(poses, windows)) out.push_back(static_cast<std::int64_t>(f));
  return out;
}

EvalReport evaluate(const PoseSequence& poses, const PoseSequence& reference, const BeatTrack& beats, int tolerance) {
  std::vector<std::int64_t> audio;
  for (std::int64_t b : beats.beat_frames)
    if (b >= 0 && static_cast<std::size_t>(b) < poses.size()) audio.push_back(b);
  if (audio.empty()) throw InvariantError("no musical beats fall inside the pose sequence");
  EvalReport r;
  r.s_ba = beat_alignment_score(audio, pose_beats_for(poses, beats), tolerance);
  r.mdd_h = mdd(poses, reference, BodyPart::kHand);
  r.mdd_f = mdd(poses, reference, BodyPart::kFoot);
  r.sdd_h = sdd(poses, reference, BodyPart::kHand);
  r.sdd_f = sdd(poses, reference, BodyPart::kFoot);
  r.hand_hist = movement_histogram(poses, BodyPart::kHand);
  r.foot_hist = movement_histogram(poses, BodyPart::kFoot);
  return r;
}

DemoResult run_demo(const DemoOptions& options, std::ostream* log) {
  const auto say = [&](const std::string& line) {
    if (log) *log << line << '\n';
  };
  const auto& dir = options.out_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  SynthSpec spec;
  spec.n_sources = options.sources;
  spec.duration_s = options.duration_s;
  spec.seed = options.seed;
  write_synth_dataset(synth_dataset(spec), dir / "data");
  say("synth: " + std::to_string(spec.n_sources) + " sources written to " + (dir / "data").string());

  IngestResult ingest = ingest_directory(dir / "data");
  save_database(ingest.database, dir / "fragments.ckdb");
  say("ingest: " + std::to_string(ingest.database.size()) + " fragments");

  const PairedCorpus corpus = load_paired_directory(dir / "data");
  const PairSet pairs = make_training_pairs(corpus.pose_fragments, corpus.audio_fragments, options.seed);
  Hyperparameters hyper;
  hyper.epochs = options.epochs;
  hyper.seed = options.seed;
  const TrainResult trained = train(pairs.pairs, hyper);
  save_model(trained.model, dir / "model.ckmp");
  DemoResult result;
  result.train_accuracy = correlation_accuracy(trained.model, pairs.pairs);
  say("train: " + std::to_string(pairs.pairs.size()) + " pairs, final loss " +
      std::to_string(trained.loss_history.empty() ? 0.0 : trained.loss_history.back()) + ", accuracy " +
      std::to_string(result.train_accuracy));

  const SynthSource query =
      synth_source("query", 120.0, 16.0, detail::mix_seed(options.seed, 0x717565727921), spec);
  save_wav(query.audio, dir / "query.wav");
  save_keypoint_sequence(query.poses, dir / "query_reference.json");
  const AudioClip audio = load_audio(dir / "query.wav");
  const FragmentDatabase db = attach_embeddings(trained.model, load_database(dir / "fragments.ckdb"));
  const GenerateResult generated = generate(trained.model, db, audio);
  result.poses_path = dir / "generated.json";
  save_keypoint_sequence(generated.poses, result.poses_path);
  say("generate: " + std::to_string(generated.poses.size()) + " frames from " +
      std::to_string(generated.fragment_ids.size()) + " fragments");

  result.report = evaluate(generated.poses, query.poses, generated.beats);
  result.report_path = dir / "report.json";
  detail::write_file(result.report_path, result.report.to_json());

  if (options.render) {
    render_video(generated.poses, dir / "frames", generated.poses.fps, options.render_canvas);
    say("render: " + std::to_string(generated.poses.size()) + " frames in " + (dir / "frames").string());
  }
  return result;
}

}  // namespace choreokit
