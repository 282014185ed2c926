#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "choreokit/mfcc.hpp"
#include "choreokit/pose.hpp"

namespace choreokit {

// One direction of an LSTM. Gate blocks are stacked [input, forget, cell,
// output] along the rows.
struct LstmParams {
  Eigen::MatrixXd input_weights;      // 4H x I
  Eigen::MatrixXd recurrent_weights;  // 4H x H
  Eigen::VectorXd bias;               // 4H

  Eigen::Index hidden_size() const { return recurrent_weights.cols(); }
  Eigen::Index input_size() const { return input_weights.cols(); }
};

// Bidirectional LSTM over the MFCC frames; the last forward state and the
// last backward state (i.e. at frame 0) are concatenated and projected.
struct AudioEncoderParams {
  LstmParams forward;
  LstmParams backward;
  Eigen::MatrixXd projection;       // D x 2H
  Eigen::VectorXd projection_bias;  // D
  // Per-coefficient standardization applied to the raw MFCC frames. Fixed
  // from the training corpus, not learned.
  Eigen::VectorXd input_mean;   // I
  Eigen::VectorXd input_scale;  // I
  double dropout = 0.1;

  Eigen::Index hidden_size() const { return forward.hidden_size(); }
  Eigen::Index embedding_dim() const { return projection.rows(); }
};

// Standardized input, I x T.
Eigen::MatrixXd audio_input(const AudioEncoderParams& params, const MfccFragment& frag);

// Bernoulli keep-mask (1 = keep) of the given size, drawn from `seed`.
Eigen::VectorXd dropout_mask(Eigen::Index size, double rate, std::uint64_t seed);

EmbeddingVec audio_encode(const AudioEncoderParams& params, const MfccFragment& frag,
                          bool train_mode = false, std::uint64_t rng_seed = 0);

// --- batched forward/backward used by training -----------------------------

// Sequences are laid out time-major: column t*B + b holds step t of batch
// element b (steps in processing order).
struct LstmCache {
  Eigen::Index batch = 0;
  Eigen::MatrixXd inputs;   // I x (T*B)
  Eigen::MatrixXd gates;    // 4H x (T*B), activations
  Eigen::MatrixXd cells;    // H x (T*B)
  Eigen::MatrixXd hiddens;  // H x (T*B)
};

// Runs the cell from zero state and returns the final hidden state (H x B).
Eigen::MatrixXd lstm_forward(const LstmParams& p, const Eigen::MatrixXd& inputs, Eigen::Index batch,
                             LstmCache* cache);

// Backpropagates a gradient on the final hidden state; accumulates into grad.
void lstm_backward(const LstmParams& p, const LstmCache& cache,
                   const Eigen::MatrixXd& d_final_hidden, LstmParams& grad);

struct AudioBatchCache {
  LstmCache forward;
  LstmCache backward;
  Eigen::MatrixXd states;  // 2H x B concatenated final states
};

// `inputs` are standardized fragments (I x T each), all of equal length.
// Returns the 2H x B matrix of concatenated final states (before dropout).
Eigen::MatrixXd audio_states(const AudioEncoderParams& params,
                             const std::vector<Eigen::MatrixXd>& inputs,
                             AudioBatchCache* cache);

void audio_states_backward(const AudioEncoderParams& params, const AudioBatchCache& cache,
                           const Eigen::MatrixXd& d_states, AudioEncoderParams& grad);

}  // namespace choreokit
