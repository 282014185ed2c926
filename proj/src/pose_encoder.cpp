#include "choreokit/pose_encoder.hpp"

#include <cmath>
#include <string>

#include "choreokit/error.hpp"
#include "choreokit/pose_processing.hpp"
#include "choreokit/skeleton.hpp"

namespace choreokit {

namespace {

void check_shapes(const PoseEncoderParams& p, const Eigen::MatrixXd& input) {
  const Eigen::Index j = p.joints();
  if (p.kernel_size < 1 || p.temporal_kernel.rows() % p.kernel_size != 0)
    throw InvariantError("temporal kernel rows must be a multiple of the kernel size");
  if (p.temporal_bias.size() != p.temporal_kernel.cols() || p.graph_kernel.rows() != p.temporal_kernel.cols() ||
      p.projection.cols() != j * p.graph_kernel.cols() || p.projection_bias.size() != p.projection.rows() ||
      p.adjacency.cols() != j)
    throw InvariantError("pose encoder parameter shapes are inconsistent");
  if (input.cols() != p.in_channels() || j == 0 || input.rows() == 0 || input.rows() % j != 0)
    throw SchemaError("pose input must be (T*" + std::to_string(j) + ") x " +
                      std::to_string(p.in_channels()) + ", got " + std::to_string(input.rows()) + " x " +
                      std::to_string(input.cols()));
}

// Rows t*J + j of the result hold the K temporal neighbours of (t, j),
// zero-padded at the ends.
Eigen::MatrixXd im2col(const Eigen::MatrixXd& x, Eigen::Index joints, int kernel) {
  const Eigen::Index steps = x.rows() / joints, c = x.cols();
  const Eigen::Index half = kernel / 2;
  Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(x.rows(), kernel * c);
  for (Eigen::Index k = 0; k < kernel; ++k) {
    const Eigen::Index shift = k - half;
    const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
    const Eigen::Index t1 = std::min<Eigen::Index>(steps, steps - shift);
    if (t1 <= t0) continue;
    cols.block(t0 * joints, k * c, (t1 - t0) * joints, c) = x.middleRows((t0 + shift) * joints, (t1 - t0) * joints);
  }
  return cols;
}

// Row t*J + j of a column-major (T*J) x C matrix is row j of a J x (T*C)
// view, so the per-frame graph products collapse into one product.
Eigen::MatrixXd propagate(const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& x) {
  const Eigen::Index j = a_hat.rows();
  Eigen::MatrixXd out(x.rows(), x.cols());
  Eigen::Map<Eigen::MatrixXd>(out.data(), j, x.size() / j).noalias() =
      a_hat * Eigen::Map<const Eigen::MatrixXd>(x.data(), j, x.size() / j);
  return out;
}

// Time average of ReLU(pre) per (joint, channel), entry j*C + o.
Eigen::VectorXd pool(const Eigen::MatrixXd& pre, Eigen::Index joints) {
  const Eigen::Index steps = pre.rows() / joints, channels = pre.cols();
  Eigen::MatrixXd per_joint(channels, joints);
  for (Eigen::Index o = 0; o < channels; ++o)
    per_joint.row(o) = Eigen::Map<const Eigen::MatrixXd>(pre.col(o).data(), joints, steps)
                           .cwiseMax(0.0)
                           .rowwise()
                           .sum()
                           .transpose();
  return Eigen::Map<const Eigen::VectorXd>(per_joint.data(), per_joint.size()) / static_cast<double>(steps);
}

}  // namespace

Eigen::MatrixXd coco_adjacency() {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(kNumJoints, kNumJoints);
  for (const auto& [u, v] : kSkeletonEdges) {
    a(index(u), index(v)) = 1.0;
    a(index(v), index(u)) = 1.0;
  }
  return a;
}

Eigen::MatrixXd normalized_adjacency(const Eigen::MatrixXd& adjacency) {
  const Eigen::MatrixXd a = adjacency + Eigen::MatrixXd::Identity(adjacency.rows(), adjacency.cols());
  const Eigen::VectorXd inv_sqrt = a.rowwise().sum().array().rsqrt().matrix();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

Eigen::MatrixXd pose_input(const PoseFragment& frag) {
  if (frag.frames.empty()) throw InvariantError("pose fragment " + frag.id() + " has no frames");
  const PoseFragment unit = normalize_fragment(frag, 1.0);
  const auto steps = static_cast<Eigen::Index>(unit.frames.size());
  const auto joints = static_cast<Eigen::Index>(kNumJoints);
  Eigen::MatrixXd x(steps * joints, 2);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const PoseFrame& f = unit.frames.frames[static_cast<std::size_t>(t)];
    const Keypoint& neck = f[Joint::kNeck];
    for (Eigen::Index j = 0; j < joints; ++j) {
      const Keypoint& k = f.keypoints[static_cast<std::size_t>(j)];
      x(t * joints + j, 0) = k.x - neck.x;
      x(t * joints + j, 1) = k.y - neck.y;
    }
  }
  return x;
}

EmbeddingVec pose_forward(const PoseEncoderParams& params, const Eigen::MatrixXd& input,
                          PoseForwardCache* cache) {
  check_shapes(params, input);
  const Eigen::MatrixXd a_hat = normalized_adjacency(params.adjacency);
  Eigen::MatrixXd columns = im2col(input, params.joints(), params.kernel_size);
  Eigen::MatrixXd temporal = columns * params.temporal_kernel;
  temporal.rowwise() += params.temporal_bias.transpose();
  Eigen::MatrixXd propagated = propagate(a_hat, temporal);
  Eigen::MatrixXd pre = propagated * params.graph_kernel;
  Eigen::VectorXd pooled = pool(pre, params.joints());
  EmbeddingVec out = params.projection * pooled + params.projection_bias;
  if (cache) {
    cache->columns = std::move(columns);
    cache->propagated = std::move(propagated);
    cache->pre_relu = std::move(pre);
    cache->pooled = pooled;
  }
  return out;
}

void pose_backward(const PoseEncoderParams& params, const PoseForwardCache& cache,
                   const EmbeddingVec& d_embedding, PoseEncoderParams& grad) {
  const Eigen::MatrixXd a_hat = normalized_adjacency(params.adjacency);
  grad.projection.noalias() += d_embedding * cache.pooled.transpose();
  grad.projection_bias += d_embedding;
  const Eigen::Index joints = params.joints(), channels = cache.pre_relu.cols();
  const Eigen::Index steps = cache.pre_relu.rows() / joints;
  const Eigen::VectorXd d_pooled = params.projection.transpose() * d_embedding / static_cast<double>(steps);
  const Eigen::Map<const Eigen::MatrixXd> d_per_joint(d_pooled.data(), channels, joints);
  Eigen::MatrixXd d_pre(cache.pre_relu.rows(), channels);
  for (Eigen::Index o = 0; o < channels; ++o) {
    const Eigen::Map<const Eigen::ArrayXXd> pre(cache.pre_relu.col(o).data(), joints, steps);
    Eigen::Map<Eigen::ArrayXXd>(d_pre.col(o).data(), joints, steps) =
        (pre > 0.0).select(d_per_joint.row(o).transpose().array().replicate(1, steps), 0.0);
  }
  grad.graph_kernel.noalias() += cache.propagated.transpose() * d_pre;
  // The normalized adjacency is symmetric, so it is its own transpose.
  const Eigen::MatrixXd d_temporal = propagate(a_hat, d_pre * params.graph_kernel.transpose());
  grad.temporal_kernel.noalias() += cache.columns.transpose() * d_temporal;
  grad.temporal_bias += d_temporal.colwise().sum().transpose();
}

EmbeddingVec pose_encode_input(const PoseEncoderParams& params, const Eigen::MatrixXd& input) {
  return pose_forward(params, input, nullptr);
}

EmbeddingVec pose_encode(const PoseEncoderParams& params, const PoseFragment& frag) {
  return pose_encode_input(params, pose_input(frag));
}

}  // namespace choreokit
