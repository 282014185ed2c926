#pragma once

#include <Eigen/Core>

#include "choreokit/pose.hpp"

namespace choreokit {

// Single spatio-temporal graph block:
//   temporal conv  g_te = W_c * p + b1        (kernel K along time)
//   graph conv     g_sp = L^-1/2 (A + I) L^-1/2 g_te W_g
//   ReLU, global average pool over time per joint and channel,
//   projection + b2.
// Inputs are (T*J) x C matrices with row t*J + j.
struct PoseEncoderParams {
  Eigen::MatrixXd temporal_kernel;  // (K*C_in) x C_mid, row k*C_in + c
  Eigen::VectorXd temporal_bias;    // C_mid
  Eigen::MatrixXd graph_kernel;     // C_mid x C_out
  Eigen::MatrixXd adjacency;        // J x J, symmetric 0/1, zero diagonal
  Eigen::MatrixXd projection;       // D x (J*C_out), column j*C_out + o
  Eigen::VectorXd projection_bias;  // D
  int kernel_size = 9;

  Eigen::Index in_channels() const { return temporal_kernel.rows() / kernel_size; }
  Eigen::Index joints() const { return adjacency.rows(); }
  Eigen::Index embedding_dim() const { return projection.rows(); }
};

// 0/1 adjacency of the COCO-18 skeleton.
Eigen::MatrixXd coco_adjacency();

// L^-1/2 (A + I) L^-1/2 with L_ii = sum_j (A_ij + I_ij).
Eigen::MatrixXd normalized_adjacency(const Eigen::MatrixXd& adjacency);

// Encoder input for an 18-joint fragment: coordinates scaled to unit body
// height (normalize_fragment with target 1) and centred on the neck in each
// frame. Returns (T*18) x 2.
Eigen::MatrixXd pose_input(const PoseFragment& frag);

EmbeddingVec pose_encode(const PoseEncoderParams& params, const PoseFragment& frag);
EmbeddingVec pose_encode_input(const PoseEncoderParams& params, const Eigen::MatrixXd& input);

struct PoseForwardCache {
  Eigen::MatrixXd columns;     // (T*J) x (K*C_in)
  Eigen::MatrixXd propagated;  // (T*J) x C_mid, normalized adjacency applied
  Eigen::MatrixXd pre_relu;    // (T*J) x C_out
  Eigen::VectorXd pooled;      // J*C_out
};

EmbeddingVec pose_forward(const PoseEncoderParams& params, const Eigen::MatrixXd& input,
                          PoseForwardCache* cache);

void pose_backward(const PoseEncoderParams& params, const PoseForwardCache& cache,
                   const EmbeddingVec& d_embedding, PoseEncoderParams& grad);

}  // namespace choreokit
