// choreokit command-line driver.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "choreokit/choreokit.hpp"

namespace fs = std::filesystem;
using namespace choreokit;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kNumericalFailure = 3 };

// Config files list plain `key = value` lines for the chosen subcommand
// (`[train]` sections and `train.key` also work). Underscores in keys read
// as dashes, so `omega_a = 8` sets --omega-a.
class SubcommandConfig : public CLI::ConfigTOML {
 public:
  explicit SubcommandConfig(const CLI::App& app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> items = CLI::ConfigTOML::from_config(input);
    const auto chosen = app_.get_subcommands();
    for (CLI::ConfigItem& item : items) {
      std::replace(item.name.begin(), item.name.end(), '_', '-');
      if (item.parents.empty() && !chosen.empty() && item.name != "config" && item.name != "++" && item.name != "--")
        item.parents.push_back(chosen.front()->get_name());
    }
    return items;
  }

 private:
  const CLI::App& app_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("cannot write " + path.string());
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  if (std::fclose(f) != 0 || !ok) throw IoError("write failed: " + path.string());
}

struct Args {
  // ingest
  fs::path ingest_dir, db_out;
  int duration_s = 4;
  // train
  fs::path pairs_dir, model_out;
  Hyperparameters hyper;
  // generate
  fs::path model_path, db_path, audio_path, poses_out;
  GenerateOptions gen;
  bool render_after = false;
  fs::path render_dir;
  // eval
  fs::path poses_path, ref_path, report_path;
  int tolerance = 2;
  // render
  std::optional<fs::path> gif;
  int canvas_w = 0, canvas_h = 0;
  // demo
  DemoOptions demo;
};

int run_ingest(const Args& a) {
  PreprocessOptions opts;
  opts.duration_s = a.duration_s;
  IngestResult r = ingest_directory(a.ingest_dir, opts);
  for (const SourceStats& s : r.stats)
    std::cout << s.source_id << ": " << s.frames << " frames, " << s.removed << " dropped, " << s.fragments
              << " fragments\n";
  for (const std::string& f : r.failures) std::cerr << "skipped " << f << '\n';
  save_database(r.database, a.db_out);
  std::cout << "wrote " << r.database.size() << " fragments to " << a.db_out.string() << '\n';
  return kOk;
}

int run_train(const Args& a) {
  PreprocessOptions opts;
  opts.duration_s = a.duration_s;
  const PairedCorpus corpus = load_paired_directory(a.pairs_dir, opts);
  const PairSet pairs = make_training_pairs(corpus.pose_fragments, corpus.audio_fragments, a.hyper.seed);
  if (pairs.skipped_negatives > 0)
    std::cerr << "warning: " << pairs.skipped_negatives << " positives have no delayed negative (source too short)\n";
  const int report_every = std::max(1, a.hyper.epochs / 10);
  const TrainResult result = train(pairs.pairs, a.hyper, [&](int epoch, double loss) {
    if ((epoch + 1) % report_every == 0 || epoch + 1 == a.hyper.epochs)
      std::cout << "epoch " << epoch + 1 << "/" << a.hyper.epochs << "  loss " << loss << '\n';
  });
  save_model(result.model, a.model_out);
  std::cout << "pairs " << pairs.pairs.size() << ", training correlation accuracy "
            << correlation_accuracy(result.model, pairs.pairs) << '\n';
  std::cout << "wrote " << a.model_out.string() << '\n';
  return kOk;
}

int run_generate(const Args& a) {
  const ModelParams model = load_model(a.model_path);
  FragmentDatabase db = load_database(a.db_path);
  if (!db.has_embeddings()) db = attach_embeddings(model, std::move(db));
  const GenerateResult r = generate(model, db, load_audio(a.audio_path), a.gen);
  save_keypoint_sequence(r.poses, a.poses_out);
  std::cout << "wrote " << r.poses.size() << " frames (" << r.fragment_ids.size() << " fragments) to "
            << a.poses_out.string() << '\n';
  if (a.render_after) {
    fs::path dir = a.render_dir.empty() ? fs::path(a.poses_out).replace_extension("") : a.render_dir;
    render_video(r.poses, dir, r.poses.fps, r.poses.resolution);
    std::cout << "rendered frames to " << dir.string() << '\n';
  }
  return kOk;
}

int run_eval(const Args& a) {
  const PoseSequence poses = load_keypoint_sequence(a.poses_path);
  const PoseSequence ref = load_keypoint_sequence(a.ref_path);
  const BeatTrack beats = detect_beats(load_audio(a.audio_path), poses.fps);
  const EvalReport report = evaluate(poses, ref, beats, a.tolerance);
  const std::string json = report.to_json();
  if (!a.report_path.empty()) write_text(a.report_path, json);
  std::cout << json;
  return kOk;
}

int run_render(const Args& a) {
  const PoseSequence poses = load_keypoint_sequence(a.poses_path);
  Resolution canvas = poses.resolution;
  if (a.canvas_w > 0 && a.canvas_h > 0) canvas = {a.canvas_w, a.canvas_h};
  const RenderManifest m = render_video(poses, a.render_dir, poses.fps, canvas, {}, a.gif);
  std::cout << "rendered " << m.frame_count << " frames to " << a.render_dir.string() << '\n';
  return kOk;
}

int run_demo_cmd(const Args& a) {
  const DemoResult r = run_demo(a.demo, &std::cerr);
  std::cout << r.report.to_json();
  return kOk;
}

void add_align_options(CLI::App* cmd, Args& a) {
  cmd->add_option("--omega-a", a.gen.spatial.windows.repair, "Repair window (frames)")->capture_default_str();
  cmd->add_option("--omega-b", a.gen.spatial.windows.reference, "Reference window (frames)")->capture_default_str();
  cmd->add_option("--disc-threshold", a.gen.spatial.discontinuity_threshold, "Discontinuity threshold (px)")
      ->capture_default_str();
  cmd->add_option("--tsd-th", a.gen.spatial.volatility_threshold, "Period volatility threshold")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"choreokit: music-to-dance skeleton synthesis"};
  app.set_config("--config", "", "key=value configuration file (command-line flags take precedence)");
  app.config_formatter(std::make_shared<SubcommandConfig>(app));
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  Args a;

  auto* ingest = app.add_subcommand("ingest", "Build a fragment database from keypoint files");
  ingest->add_option("dir", a.ingest_dir, "Directory of keypoint JSON files")->required();
  ingest->add_option("--out", a.db_out, "Database file")->required();
  ingest->add_option("--duration", a.duration_s, "Fragment length in seconds (1-4)")->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "Train the cross-modal matching model");
  train_cmd->add_option("--pairs", a.pairs_dir, "Directory of <id>.json + <id>.wav pairs")->required();
  train_cmd->add_option("--lr", a.hyper.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--dropout", a.hyper.dropout, "Dropout rate")->capture_default_str();
  train_cmd->add_option("--dim", a.hyper.dim, "Embedding dimension")->capture_default_str();
  train_cmd->add_option("--epochs", a.hyper.epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--batch", a.hyper.batch, "Mini-batch size")->capture_default_str();
  train_cmd->add_option("--seed", a.hyper.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--margin", a.hyper.margin, "Margin for non-corresponding pairs")->capture_default_str();
  const std::map<std::string, MarginForm> forms{{"hinge", MarginForm::kHinge}, {"offset", MarginForm::kOffset}};
  train_cmd->add_option("--margin-form", a.hyper.margin_form, "Margin form: hinge or offset")
      ->transform(CLI::CheckedTransformer(forms, CLI::ignore_case))
      ->default_str("hinge");
  train_cmd->add_option("--duration", a.duration_s, "Fragment length in seconds (1-4)")->capture_default_str();
  train_cmd->add_option("--out", a.model_out, "Model file")->required();

  auto* gen = app.add_subcommand("generate", "Synthesize a dance for an audio file");
  gen->add_option("--model", a.model_path, "Model file")->required();
  gen->add_option("--db", a.db_path, "Fragment database")->required();
  gen->add_option("--audio", a.audio_path, "Input WAV")->required();
  gen->add_option("--out", a.poses_out, "Output keypoint JSON")->required();
  add_align_options(gen, a);
  gen->add_flag("--skip-align", a.gen.skip_align, "Emit the raw concatenation");
  gen->add_flag("--render", a.render_after, "Also render frames");
  gen->add_option("--render-dir", a.render_dir, "Frame directory for --render");

  auto* eval = app.add_subcommand("eval", "Score a pose sequence against music and a reference");
  eval->add_option("--poses", a.poses_path, "Generated keypoint JSON")->required();
  eval->add_option("--ref", a.ref_path, "Reference keypoint JSON")->required();
  eval->add_option("--audio", a.audio_path, "Music WAV")->required();
  eval->add_option("--tolerance", a.tolerance, "Beat tolerance (frames)")->capture_default_str();
  eval->add_option("--report", a.report_path, "Report JSON output");

  auto* render = app.add_subcommand("render", "Render a pose sequence to PNG frames");
  render->add_option("--poses", a.poses_path, "Keypoint JSON")->required();
  render->add_option("--out", a.render_dir, "Output directory")->required();
  render->add_option("--gif", a.gif, "Also write an animated GIF");
  render->add_option("--width", a.canvas_w, "Canvas width (default: source width)");
  render->add_option("--height", a.canvas_h, "Canvas height (default: source height)");

  auto* demo = app.add_subcommand("demo", "Synthetic end-to-end run: synth, ingest, train, generate, eval");
  demo->add_option("--seed", a.demo.seed, "Random seed")->capture_default_str();
  demo->add_option("--out", a.demo.out_dir, "Working directory")->capture_default_str();
  demo->add_option("--sources", a.demo.sources, "Synthetic sources")->capture_default_str();
  demo->add_option("--duration", a.demo.duration_s, "Seconds per source")->capture_default_str();
  demo->add_option("--epochs", a.demo.epochs, "Training epochs")->capture_default_str();
  bool no_render = false;
  demo->add_flag("--no-render", no_render, "Skip frame rendering");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  a.demo.render = !no_render;

  try {
    a.gen.spatial.windows.validate();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*ingest) return run_ingest(a);
    if (*train_cmd) return run_train(a);
    if (*gen) return run_generate(a);
    if (*eval) return run_eval(a);
    if (*render) return run_render(a);
    if (*demo) return run_demo_cmd(a);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}
