#include "choreokit/crossmodal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "choreokit/error.hpp"
#include "rng.hpp"

namespace choreokit {

namespace {

Eigen::Map<Eigen::MatrixXd> view(Eigen::MatrixXd& m) { return {m.data(), m.rows(), m.cols()}; }
Eigen::Map<Eigen::MatrixXd> view(Eigen::VectorXd& v) { return {v.data(), v.size(), 1}; }
Eigen::Map<const Eigen::MatrixXd> cview(const Eigen::MatrixXd& m) { return {m.data(), m.rows(), m.cols()}; }
Eigen::Map<const Eigen::MatrixXd> cview(const Eigen::VectorXd& v) { return {v.data(), v.size(), 1}; }

template <typename Model, typename View, typename Fn>
std::vector<View> collect(Model& m, Fn&& wrap) {
  std::vector<View> out;
  const auto lstm = [&](auto& p, const std::string& prefix) {
    out.push_back({prefix + ".input_weights", wrap(p.input_weights), true});
    out.push_back({prefix + ".recurrent_weights", wrap(p.recurrent_weights), true});
    out.push_back({prefix + ".bias", wrap(p.bias), true});
  };
  lstm(m.audio.forward, "audio.forward");
  lstm(m.audio.backward, "audio.backward");
  out.push_back({"audio.projection", wrap(m.audio.projection), true});
  out.push_back({"audio.projection_bias", wrap(m.audio.projection_bias), true});
  out.push_back({"audio.input_mean", wrap(m.audio.input_mean), false});
  out.push_back({"audio.input_scale", wrap(m.audio.input_scale), false});
  out.push_back({"pose.temporal_kernel", wrap(m.pose.temporal_kernel), true});
  out.push_back({"pose.temporal_bias", wrap(m.pose.temporal_bias), true});
  out.push_back({"pose.graph_kernel", wrap(m.pose.graph_kernel), true});
  out.push_back({"pose.adjacency", wrap(m.pose.adjacency), false});
  out.push_back({"pose.projection", wrap(m.pose.projection), true});
  out.push_back({"pose.projection_bias", wrap(m.pose.projection_bias), true});
  return out;
}

void glorot(Eigen::MatrixXd& m, Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& gen) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = detail::uniform(gen, -limit, limit);
}

LstmParams init_lstm(Eigen::Index input, Eigen::Index hidden, std::mt19937_64& gen) {
  LstmParams p;
  p.input_weights.resize(4 * hidden, input);
  p.recurrent_weights.resize(4 * hidden, hidden);
  glorot(p.input_weights, input, hidden, gen);
  glorot(p.recurrent_weights, hidden, hidden, gen);
  p.bias = Eigen::VectorXd::Zero(4 * hidden);
  return p;
}

std::uint64_t sample_seed(std::uint64_t seed, std::size_t position) {
  return detail::mix_seed(seed, static_cast<std::uint64_t>(position));
}

// A contiguous stretch of one source, stitched from its fragments.
struct Run {
  std::vector<PoseFrame> frames;
  PoseSequence meta;  // fps and resolution
};

}  // namespace

std::vector<TensorView> tensors(ModelParams& m) {
  return collect<ModelParams, TensorView>(m, [](auto& x) { return view(x); });
}

std::vector<ConstTensorView> tensors(const ModelParams& m) {
  return collect<const ModelParams, ConstTensorView>(m, [](const auto& x) { return cview(x); });
}

ModelParams zeros_like(const ModelParams& m) {
  ModelParams z = m;
  for (TensorView& t : tensors(z)) t.data.setZero();
  return z;
}

double squared_norm(const ModelParams& grad) {
  double sum = 0.0;
  for (const ConstTensorView& t : tensors(grad))
    if (t.trainable) sum += t.data.squaredNorm();
  return sum;
}

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  if (config.hidden < 1 || config.embedding_dim < 1 || config.mid_channels < 1 || config.out_channels < 1 ||
      config.temporal_kernel < 1 || config.adjacency.rows() != config.adjacency.cols())
    throw InvariantError("invalid model configuration");
  std::mt19937_64 gen(seed);
  ModelParams m;
  m.margin = config.margin;
  m.margin_form = config.margin_form;
  m.duration_s = config.duration_s;
  m.fps = config.fps;

  AudioEncoderParams& a = m.audio;
  a.forward = init_lstm(config.input_dim, config.hidden, gen);
  a.backward = init_lstm(config.input_dim, config.hidden, gen);
  a.projection.resize(config.embedding_dim, 2 * config.hidden);
  glorot(a.projection, 2 * config.hidden, config.embedding_dim, gen);
  a.projection_bias = Eigen::VectorXd::Zero(config.embedding_dim);
  a.input_mean = Eigen::VectorXd::Zero(config.input_dim);
  a.input_scale = Eigen::VectorXd::Ones(config.input_dim);
  a.dropout = config.dropout;

  PoseEncoderParams& p = m.pose;
  p.kernel_size = config.temporal_kernel;
  p.temporal_kernel.resize(config.temporal_kernel * config.pose_channels, config.mid_channels);
  glorot(p.temporal_kernel, config.temporal_kernel * config.pose_channels, config.mid_channels, gen);
  p.temporal_bias = Eigen::VectorXd::Zero(config.mid_channels);
  p.graph_kernel.resize(config.mid_channels, config.out_channels);
  glorot(p.graph_kernel, config.mid_channels, config.out_channels, gen);
  p.adjacency = config.adjacency;
  const auto pooled = config.adjacency.rows() * config.out_channels;
  p.projection.resize(config.embedding_dim, pooled);
  glorot(p.projection, pooled, config.embedding_dim, gen);
  p.projection_bias = Eigen::VectorXd::Zero(config.embedding_dim);
  return m;
}

double matching_loss(const EmbeddingVec& pose_emb, const EmbeddingVec& audio_emb, bool corresponding,
                     double margin, MarginForm form) {
  if (pose_emb.size() != audio_emb.size()) throw InvariantError("embedding dimensions differ");
  const EmbeddingVec diff = pose_emb - audio_emb;
  if (corresponding) return diff.squaredNorm();
  if (form == MarginForm::kOffset) return (diff.array() - margin).square().sum();
  const double gap = margin * std::sqrt(static_cast<double>(diff.size())) - diff.norm();
  return gap > 0.0 ? gap * gap : 0.0;
}

EmbeddingVec matching_loss_gradient(const EmbeddingVec& pose_emb, const EmbeddingVec& audio_emb,
                                    bool corresponding, double margin, MarginForm form) {
  if (pose_emb.size() != audio_emb.size()) throw InvariantError("embedding dimensions differ");
  const EmbeddingVec diff = pose_emb - audio_emb;
  if (corresponding) return 2.0 * diff;
  if (form == MarginForm::kOffset) return (2.0 * (diff.array() - margin)).matrix();
  const double norm = diff.norm();
  const double gap = margin * std::sqrt(static_cast<double>(diff.size())) - norm;
  // At d = 0 every direction is a descent direction; the subgradient 0 is used.
  if (gap <= 0.0 || norm == 0.0) return EmbeddingVec::Zero(diff.size());
  return -2.0 * gap / norm * diff;
}

PairSet make_training_pairs(const std::vector<PoseFragment>& pose_fragments,
                            const std::vector<MfccFragment>& audio_fragments, std::uint64_t rng_seed,
                            DelayRange delays) {
  if (pose_fragments.size() != audio_fragments.size())
    throw InvariantError("pose and audio fragment lists must be index-aligned (" +
                         std::to_string(pose_fragments.size()) + " vs " +
                         std::to_string(audio_fragments.size()) + ")");
  if (!(delays.min_s > 0.0) || delays.max_s < delays.min_s) throw InvariantError("invalid delay range");
  for (std::size_t i = 0; i < pose_fragments.size(); ++i)
    if (pose_fragments[i].source_id != audio_fragments[i].source_id ||
        pose_fragments[i].length() != audio_fragments[i].length())
      throw InvariantError("fragment " + std::to_string(i) + " differs between pose (" + pose_fragments[i].id() +
                           ") and audio (" + audio_fragments[i].id() + ")");

  // Stitch each source's fragments back into contiguous runs so a delayed
  // window can straddle fragment boundaries.
  std::vector<Run> runs;
  std::vector<std::pair<std::size_t, std::size_t>> where(pose_fragments.size());  // run, offset
  std::map<std::string, std::vector<std::size_t>> by_source;
  for (std::size_t i = 0; i < pose_fragments.size(); ++i) by_source[pose_fragments[i].source_id].push_back(i);
  for (auto& [source, idx] : by_source) {
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return pose_fragments[a].start_frame < pose_fragments[b].start_frame; });
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const PoseFragment& frag = pose_fragments[idx[k]];
      const bool extends = k > 0 && !runs.back().frames.empty() &&
                           runs.back().frames.back().frame_index + 1 == frag.frames.frames.front().frame_index;
      if (!extends) {
        runs.emplace_back();
        runs.back().meta.fps = frag.frames.fps;
        runs.back().meta.resolution = frag.frames.resolution;
      }
      where[idx[k]] = {runs.size() - 1, runs.back().frames.size()};
      runs.back().frames.insert(runs.back().frames.end(), frag.frames.frames.begin(), frag.frames.frames.end());
    }
  }

  std::mt19937_64 gen(rng_seed);
  PairSet out;
  for (std::size_t i = 0; i < pose_fragments.size(); ++i) {
    const PoseFragment& pos = pose_fragments[i];
    out.pairs.push_back({audio_fragments[i], pos, true, 0.0});

    const double delay = detail::uniform(gen, delays.min_s, delays.max_s);
    const auto shift = static_cast<std::size_t>(std::lround(delay * pos.frames.fps));
    const Run& run = runs[where[i].first];
    const std::size_t begin = where[i].second + shift;
    if (begin + pos.length() > run.frames.size()) {
      ++out.skipped_negatives;
      continue;
    }
    PoseFragment neg;
    neg.duration_s = pos.duration_s;
    neg.source_id = pos.source_id;
    neg.frames = run.meta;
    neg.frames.frames.assign(run.frames.begin() + static_cast<std::ptrdiff_t>(begin),
                             run.frames.begin() + static_cast<std::ptrdiff_t>(begin + pos.length()));
    neg.start_frame = neg.frames.frames.front().frame_index;
    out.pairs.push_back({audio_fragments[i], std::move(neg), false, static_cast<double>(shift) / pos.frames.fps});
  }
  return out;
}

std::vector<Sample> make_samples(const ModelParams& model, const std::vector<TrainingPair>& pairs) {
  std::vector<Sample> out;
  out.reserve(pairs.size());
  std::map<std::string, std::size_t> keys;
  for (const TrainingPair& p : pairs) {
    Sample s;
    s.audio = audio_input(model.audio, p.audio_fragment);
    s.pose = pose_input(p.pose_fragment);
    s.corresponding = p.corresponding;
    s.audio_key = keys.try_emplace(p.audio_fragment.id(), keys.size()).first->second;
    out.push_back(std::move(s));
  }
  return out;
}

double loss_and_gradient(const ModelParams& model, std::span<const Sample> batch, std::uint64_t dropout_seed,
                         ModelParams* grad) {
  if (batch.empty()) throw InvariantError("empty batch");
  if (grad) *grad = zeros_like(model);
  const AudioEncoderParams& ap = model.audio;

  std::map<std::size_t, Eigen::Index> column;
  std::vector<Eigen::MatrixXd> inputs;
  for (const Sample& s : batch)
    if (column.try_emplace(s.audio_key, static_cast<Eigen::Index>(inputs.size())).second) inputs.push_back(s.audio);
  AudioBatchCache audio_cache;
  const Eigen::MatrixXd states = audio_states(ap, inputs, grad ? &audio_cache : nullptr);
  Eigen::MatrixXd d_states = Eigen::MatrixXd::Zero(states.rows(), states.cols());

  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  PoseForwardCache pose_cache;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Sample& s = batch[b];
    const Eigen::Index col = column.at(s.audio_key);
    const Eigen::VectorXd mask = dropout_mask(states.rows(), ap.dropout, sample_seed(dropout_seed, b));
    const Eigen::VectorXd state = states.col(col).cwiseProduct(mask);
    const EmbeddingVec a = ap.projection * state + ap.projection_bias;
    const EmbeddingVec p = pose_forward(model.pose, s.pose, grad ? &pose_cache : nullptr);
    loss += scale * matching_loss(p, a, s.corresponding, model.margin, model.margin_form);
    if (!grad) continue;

    const EmbeddingVec dp = scale * matching_loss_gradient(p, a, s.corresponding, model.margin, model.margin_form);
    const EmbeddingVec da = -dp;
    grad->audio.projection.noalias() += da * state.transpose();
    grad->audio.projection_bias += da;
    d_states.col(col) += (ap.projection.transpose() * da).cwiseProduct(mask);
    pose_backward(model.pose, pose_cache, dp, grad->pose);
  }
  if (grad) audio_states_backward(ap, audio_cache, d_states, grad->audio);
  return loss;
}

void fit_input_normalization(ModelParams& model, const std::vector<TrainingPair>& pairs) {
  const auto dim = static_cast<Eigen::Index>(kMfccDim);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim), sq = Eigen::VectorXd::Zero(dim);
  double count = 0.0;
  std::map<std::string, bool> seen;
  for (const TrainingPair& p : pairs) {
    if (!seen.try_emplace(p.audio_fragment.id(), true).second) continue;
    for (const MfccVector& f : p.audio_fragment.frames) {
      const Eigen::Map<const Eigen::VectorXd> v(f.data(), dim);
      sum += v;
      sq += v.cwiseAbs2();
      count += 1.0;
    }
  }
  if (count == 0.0) return;
  model.audio.input_mean = sum / count;
  const Eigen::ArrayXd var = (sq / count).array() - model.audio.input_mean.array().square();
  model.audio.input_scale = (var > 1e-12).select(var.max(1e-300).rsqrt(), 1.0).matrix();
}

TrainResult train(const std::vector<TrainingPair>& pairs, const Hyperparameters& hyper,
                  const EpochCallback& on_epoch) {
  if (pairs.empty()) throw InvariantError("no training pairs");
  ModelConfig config;
  config.hidden = hyper.hidden;
  config.embedding_dim = hyper.dim;
  config.dropout = hyper.dropout;
  config.margin = hyper.margin;
  config.margin_form = hyper.margin_form;
  config.duration_s = pairs.front().pose_fragment.duration_s;
  config.fps = pairs.front().pose_fragment.frames.fps;
  ModelParams initial = init_model(config, hyper.seed);
  fit_input_normalization(initial, pairs);
  return train(pairs, hyper, std::move(initial), on_epoch);
}

TrainResult train(const std::vector<TrainingPair>& pairs, const Hyperparameters& hyper, ModelParams initial,
                  const EpochCallback& on_epoch) {
  if (pairs.empty()) throw InvariantError("no training pairs");
  if (hyper.epochs < 0 || hyper.batch < 1 || !(hyper.lr > 0.0))
    throw InvariantError("invalid hyperparameters");
  TrainResult result{std::move(initial), {}};
  if (hyper.epochs == 0) return result;
  ModelParams& model = result.model;
  model.audio.dropout = hyper.dropout;
  const std::vector<Sample> samples = make_samples(model, pairs);

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  ModelParams m1 = zeros_like(model), m2 = zeros_like(model), grad = zeros_like(model);
  std::mt19937_64 gen(detail::mix_seed(hyper.seed, 0x7261696e));
  // Batches are filled with whole audio groups (a positive and its delayed
  // negative share the audio fragment), so each recurrent pass is shared.
  std::vector<std::vector<std::size_t>> groups;
  std::map<std::size_t, std::size_t> group_of;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto [it, fresh] = group_of.try_emplace(samples[i].audio_key, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  std::vector<std::size_t> order(groups.size());
  std::vector<Sample> batch;
  std::uint64_t step = 0;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    detail::shuffle(order, gen);
    double epoch_loss = 0.0;
    std::size_t next = 0, batch_index = 0;
    while (next < order.size()) {
      batch.clear();
      while (next < order.size() && batch.size() < hyper.batch)
        for (std::size_t k : groups[order[next++]]) batch.push_back(samples[k]);
      const double loss = loss_and_gradient(model, batch, gen(), &grad);
      const double norm = std::sqrt(squared_norm(grad));
      if (!std::isfinite(loss) || !std::isfinite(norm)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", batch " << batch_index << " (loss " << loss
            << ", gradient norm " << norm << ", parameter norm " << std::sqrt(squared_norm(model)) << ")";
        throw NumericalError(msg.str());
      }
      epoch_loss += loss * static_cast<double>(batch.size());
      ++batch_index;

      const double clip = hyper.clip_norm > 0.0 && norm > hyper.clip_norm ? hyper.clip_norm / norm : 1.0;
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      auto w = tensors(model);
      auto g = tensors(grad);
      auto a = tensors(m1);
      auto v = tensors(m2);
      for (std::size_t t = 0; t < w.size(); ++t) {
        if (!w[t].trainable) continue;
        a[t].data = kBeta1 * a[t].data + (1.0 - kBeta1) * clip * g[t].data;
        v[t].data = kBeta2 * v[t].data + (1.0 - kBeta2) * (clip * g[t].data).cwiseAbs2();
        w[t].data.array() -= hyper.lr * (a[t].data.array() / c1) / ((v[t].data.array() / c2).sqrt() + kEps);
      }
    }
    epoch_loss /= static_cast<double>(samples.size());
    result.loss_history.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return result;
}

double correlation_accuracy(const ModelParams& model, const std::vector<TrainingPair>& pairs, double threshold) {
  if (pairs.empty()) throw InvariantError("correlation accuracy of an empty pair list");
  std::map<std::string, EmbeddingVec> audio_cache;
  std::size_t correct = 0;
  for (const TrainingPair& p : pairs) {
    auto it = audio_cache.find(p.audio_fragment.id());
    if (it == audio_cache.end())
      it = audio_cache.emplace(p.audio_fragment.id(), audio_encode(model.audio, p.audio_fragment)).first;
    const EmbeddingVec pose = pose_encode(model.pose, p.pose_fragment);
    const bool judged = (pose - it->second).norm() < threshold;
    if (judged == p.corresponding) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

FragmentDatabase attach_embeddings(const ModelParams& model, FragmentDatabase db) {
  for (PoseFragment& f : db.fragments) f.embedding = pose_encode(model.pose, f);
  return db;
}

Retrieval nearest_fragment(const FragmentDatabase& db, const EmbeddingVec& query) {
  if (db.empty()) throw InvariantError("cannot retrieve from an empty database");
  Retrieval best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < db.size(); ++i) {
    const auto& emb = db.fragments[i].embedding;
    if (!emb) throw InvariantError("fragment " + db.fragments[i].id() + " has no embedding");
    if (emb->size() != query.size())
      throw InvariantError("embedding dimension " + std::to_string(emb->size()) + " does not match query dimension " +
                           std::to_string(query.size()));
    const double d = (*emb - query).norm();
    if (d < best.distance) best = {i, d};
  }
  return best;
}

Retrieval retrieve(const ModelParams& model, const FragmentDatabase& db, const MfccFragment& audio_frag) {
  if (db.empty()) throw InvariantError("cannot retrieve from an empty database");
  if (audio_frag.length() != db.frames_per_fragment())
    throw InvariantError("audio fragment has " + std::to_string(audio_frag.length()) + " frames, database expects " +
                         std::to_string(db.frames_per_fragment()));
  return nearest_fragment(db, audio_encode(model.audio, audio_frag));
}

}  // namespace choreokit
