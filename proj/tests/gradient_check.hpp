#pragma once

// Central-difference check of loss_and_gradient on a tiny model.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "choreokit/crossmodal.hpp"

namespace testing_support {

struct GradientCheck {
  double max_relative_error = 0.0;
  std::string worst;  // "tensor[index]"
  std::size_t checked = 0;
};

inline Eigen::MatrixXd path_graph(Eigen::Index joints) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(joints, joints);
  for (Eigen::Index j = 0; j + 1 < joints; ++j) a(j, j + 1) = a(j + 1, j) = 1.0;
  return a;
}

// hidden 4, 2-frame fragments, 3-joint path graph, one positive and one
// negative sample sharing an audio fragment plus an unrelated positive.
inline GradientCheck check_tiny_model_gradients(std::uint64_t seed,
                                                choreokit::MarginForm form = choreokit::MarginForm::kHinge,
                                                double step = 1e-5) {
  choreokit::ModelConfig config;
  config.hidden = 4;
  config.embedding_dim = 3;
  config.mid_channels = 3;
  config.out_channels = 4;
  config.temporal_kernel = 3;
  config.adjacency = path_graph(3);
  config.dropout = 0.25;
  config.margin_form = form;
  choreokit::ModelParams model = choreokit::init_model(config, seed);

  std::mt19937_64 gen(seed ^ 0x5eed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Biases start at zero; give them values so their gradients are generic.
  for (auto& t : choreokit::tensors(model))
    if (t.trainable)
      for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data.data()[i] += 0.3 * normal(gen);

  const auto random_matrix = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(gen);
    return m;
  };
  std::vector<choreokit::Sample> batch(3);
  batch[0].audio = random_matrix(13, 2);
  batch[0].pose = random_matrix(6, 2);
  batch[0].corresponding = true;
  batch[0].audio_key = 0;
  batch[1].audio = batch[0].audio;
  batch[1].pose = random_matrix(6, 2);
  batch[1].corresponding = false;
  batch[1].audio_key = 0;
  batch[2].audio = random_matrix(13, 2);
  batch[2].pose = random_matrix(6, 2);
  batch[2].corresponding = true;
  batch[2].audio_key = 1;

  const std::uint64_t dropout_seed = seed + 17;
  choreokit::ModelParams grad = choreokit::zeros_like(model);
  choreokit::loss_and_gradient(model, batch, dropout_seed, &grad);

  GradientCheck result;
  auto params = choreokit::tensors(model);
  const auto grads = choreokit::tensors(std::as_const(grad));
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (!params[t].trainable) continue;
    for (Eigen::Index i = 0; i < params[t].data.size(); ++i) {
      double& w = params[t].data.data()[i];
      const double saved = w;
      w = saved + step;
      const double up = choreokit::loss_and_gradient(model, batch, dropout_seed, nullptr);
      w = saved - step;
      const double down = choreokit::loss_and_gradient(model, batch, dropout_seed, nullptr);
      w = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = grads[t].data.data()[i];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      const double rel = std::abs(numeric - analytic) / scale;
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst = params[t].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace testing_support
