#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "choreokit/audio_encoder.hpp"
#include "choreokit/database.hpp"
#include "choreokit/mfcc.hpp"
#include "choreokit/pose.hpp"
#include "choreokit/pose_encoder.hpp"

namespace choreokit {

inline constexpr const char* kModelVersionTag = "choreokit-matchnet-1";

// How the margin enters the loss of a non-corresponding pair with
// embedding difference d = p - a in D dimensions:
//   kHinge:  max(0, margin * sqrt(D) - |d|)^2
//   kOffset: |d - margin * 1|^2
// Both vanish at d = margin * 1. kOffset asks every negative to differ in
// one fixed direction, which cannot be met when negatives occur in both
// orders; kHinge only asks for distance.
enum class MarginForm { kHinge = 0, kOffset = 1 };

struct ModelParams {
  AudioEncoderParams audio;
  PoseEncoderParams pose;
  double margin = 1.0;
  MarginForm margin_form = MarginForm::kHinge;
  int duration_s = 4;
  int fps = kDefaultFps;
  std::string version = kModelVersionTag;

  Eigen::Index embedding_dim() const { return audio.embedding_dim(); }
};

// A named view on one parameter block. Vectors are exposed as n x 1.
struct TensorView {
  std::string name;
  Eigen::Map<Eigen::MatrixXd> data;
  bool trainable;
};
struct ConstTensorView {
  std::string name;
  Eigen::Map<const Eigen::MatrixXd> data;
  bool trainable;
};

std::vector<TensorView> tensors(ModelParams& m);
std::vector<ConstTensorView> tensors(const ModelParams& m);

// A zero-valued model of identical shapes (used as gradient storage).
ModelParams zeros_like(const ModelParams& m);
double squared_norm(const ModelParams& grad);  // over trainable tensors

struct ModelConfig {
  Eigen::Index input_dim = kMfccDim;
  Eigen::Index hidden = 100;
  Eigen::Index embedding_dim = 16;
  Eigen::Index pose_channels = 2;
  Eigen::Index mid_channels = 16;
  Eigen::Index out_channels = 32;
  int temporal_kernel = 9;
  Eigen::MatrixXd adjacency = coco_adjacency();
  double dropout = 0.1;
  double margin = 1.0;
  MarginForm margin_form = MarginForm::kHinge;
  int duration_s = 4;
  int fps = kDefaultFps;
};

// Glorot-uniform weights, zero biases, unit input scaling.
ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

// Squared Euclidean distance for corresponding pairs; the margin term of
// `form` otherwise.
double matching_loss(const EmbeddingVec& pose_emb, const EmbeddingVec& audio_emb,
                     bool corresponding, double margin, MarginForm form = MarginForm::kHinge);

// d loss / d pose_emb (the gradient w.r.t. audio_emb is its negation).
EmbeddingVec matching_loss_gradient(const EmbeddingVec& pose_emb,
                                    const EmbeddingVec& audio_emb, bool corresponding,
                                    double margin, MarginForm form = MarginForm::kHinge);

struct TrainingPair {
  MfccFragment audio_fragment;
  PoseFragment pose_fragment;
  bool corresponding = true;
  double delay_s = 0.0;
};

struct DelayRange {
  double min_s = 2.0;
  double max_s = 5.0;
};

struct PairSet {
  std::vector<TrainingPair> pairs;
  std::size_t skipped_negatives = 0;
};

// One positive per index-aligned (pose, audio) fragment and one negative
// whose pose window starts delay_s later in the same source, with delay_s
// uniform in `delays`. Sources are reassembled from contiguous fragments;
// positives whose delayed window does not fit are counted as skipped.
PairSet make_training_pairs(const std::vector<PoseFragment>& pose_fragments,
                            const std::vector<MfccFragment>& audio_fragments,
                            std::uint64_t rng_seed, DelayRange delays = {});

// Encoder-ready form of a pair.
struct Sample {
  Eigen::MatrixXd audio;  // standardized MFCC, I x T
  Eigen::MatrixXd pose;   // (T*J) x C
  bool corresponding = true;
  // Samples sharing an audio fragment share its LSTM pass.
  std::size_t audio_key = 0;
};

std::vector<Sample> make_samples(const ModelParams& model,
                                 const std::vector<TrainingPair>& pairs);

// Mean matching loss over `batch` in train mode (dropout masks derived from
// dropout_seed and each sample's position), and its gradient when `grad` is
// non-null. All audio inputs in the batch must have equal length.
double loss_and_gradient(const ModelParams& model, std::span<const Sample> batch,
                         std::uint64_t dropout_seed, ModelParams* grad);

struct Hyperparameters {
  double lr = 1e-4;
  double dropout = 0.1;
  Eigen::Index dim = 16;
  int epochs = 500;
  std::size_t batch = 16;
  std::uint64_t seed = 7;
  Eigen::Index hidden = 100;
  double margin = 1.0;
  MarginForm margin_form = MarginForm::kHinge;
  double clip_norm = 5.0;
};

struct TrainResult {
  ModelParams model;
  std::vector<double> loss_history;  // mean loss per epoch
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

// Mini-batch Adam on the mean matching loss with global gradient-norm
// clipping. Deterministic for a given seed. Throws NumericalError on a
// non-finite loss.
TrainResult train(const std::vector<TrainingPair>& pairs, const Hyperparameters& hyper,
                  const EpochCallback& on_epoch = {});
TrainResult train(const std::vector<TrainingPair>& pairs, const Hyperparameters& hyper,
                  ModelParams initial, const EpochCallback& on_epoch = {});

// Sets the audio standardization from the MFCC frames of `pairs`.
void fit_input_normalization(ModelParams& model, const std::vector<TrainingPair>& pairs);

// Fraction of pairs judged correctly, "corresponding" meaning an embedding
// distance below `threshold` (inference mode).
double correlation_accuracy(const ModelParams& model, const std::vector<TrainingPair>& pairs,
                            double threshold = 1.0);

// Pose embedding for every fragment (overwrites existing ones).
FragmentDatabase attach_embeddings(const ModelParams& model, FragmentDatabase db);

struct Retrieval {
  std::size_t index = 0;
  double distance = 0.0;
};

// Linear scan for the stored embedding closest to `query`; ties go to the
// lowest index.
Retrieval nearest_fragment(const FragmentDatabase& db, const EmbeddingVec& query);

Retrieval retrieve(const ModelParams& model, const FragmentDatabase& db,
                   const MfccFragment& audio_frag);

}  // namespace choreokit
