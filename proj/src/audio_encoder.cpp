#include "choreokit/audio_encoder.hpp"

#include <cmath>
#include <string>

#include "choreokit/error.hpp"
#include "rng.hpp"

namespace choreokit {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

void check_shapes(const LstmParams& p) {
  const Eigen::Index h = p.hidden_size();
  if (p.input_weights.rows() != 4 * h || p.recurrent_weights.rows() != 4 * h || p.bias.size() != 4 * h)
    throw InvariantError("LSTM parameter shapes are inconsistent");
}

Eigen::MatrixXd time_major(const std::vector<Eigen::MatrixXd>& inputs, bool reverse) {
  const Eigen::Index steps = inputs.front().cols();
  const Eigen::Index dim = inputs.front().rows();
  const auto batch = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd out(dim, steps * batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Eigen::MatrixXd& x = inputs[static_cast<std::size_t>(b)];
    if (x.cols() != steps || x.rows() != dim)
      throw InvariantError("audio fragments in one batch must have equal shape");
    for (Eigen::Index t = 0; t < steps; ++t) out.col((reverse ? steps - 1 - t : t) * batch + b) = x.col(t);
  }
  return out;
}

}  // namespace

Eigen::MatrixXd audio_input(const AudioEncoderParams& params, const MfccFragment& frag) {
  if (frag.frames.empty()) throw InvariantError("audio fragment " + frag.id() + " has no frames");
  const Eigen::Index dim = params.forward.input_size();
  if (dim != static_cast<Eigen::Index>(kMfccDim) || params.input_mean.size() != dim ||
      params.input_scale.size() != dim)
    throw InvariantError("audio encoder expects " + std::to_string(kMfccDim) + "-d input");
  Eigen::MatrixXd x(dim, static_cast<Eigen::Index>(frag.frames.size()));
  for (std::size_t t = 0; t < frag.frames.size(); ++t)
    for (Eigen::Index c = 0; c < dim; ++c)
      x(c, static_cast<Eigen::Index>(t)) =
          (frag.frames[t][static_cast<std::size_t>(c)] - params.input_mean(c)) * params.input_scale(c);
  return x;
}

Eigen::VectorXd dropout_mask(Eigen::Index size, double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0) throw InvariantError("dropout rate must be in [0, 1)");
  std::mt19937_64 gen(seed);
  Eigen::VectorXd mask(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    mask(i) = detail::uniform01(gen) < rate ? 0.0 : 1.0;
  }
  return mask;
}

Eigen::MatrixXd lstm_forward(const LstmParams& p, const Eigen::MatrixXd& inputs, Eigen::Index batch,
                             LstmCache* cache) {
  check_shapes(p);
  if (batch < 1 || inputs.cols() % batch != 0) throw InvariantError("LSTM input columns must be a multiple of the batch");
  const Eigen::Index h = p.hidden_size();
  const Eigen::Index steps = inputs.cols() / batch;
  // Input contributions for every step at once; only the recurrence is sequential.
  Eigen::MatrixXd gates = p.input_weights * inputs;
  gates.colwise() += p.bias;
  Eigen::MatrixXd cells(h, inputs.cols()), hiddens(h, inputs.cols());
  Eigen::MatrixXd hidden = Eigen::MatrixXd::Zero(h, batch);
  Eigen::MatrixXd cell = Eigen::MatrixXd::Zero(h, batch);
  for (Eigen::Index t = 0; t < steps; ++t) {
    auto z = gates.middleCols(t * batch, batch);
    z.noalias() += p.recurrent_weights * hidden;
    z.topRows(2 * h) = sigmoid(z.topRows(2 * h));
    z.middleRows(2 * h, h) = z.middleRows(2 * h, h).array().tanh().matrix();
    z.bottomRows(h) = sigmoid(z.bottomRows(h));
    cell = (z.middleRows(h, h).array() * cell.array() + z.topRows(h).array() * z.middleRows(2 * h, h).array()).matrix();
    hidden = (z.bottomRows(h).array() * cell.array().tanh()).matrix();
    cells.middleCols(t * batch, batch) = cell;
    hiddens.middleCols(t * batch, batch) = hidden;
  }
  if (cache) {
    cache->batch = batch;
    cache->inputs = inputs;
    cache->gates = std::move(gates);
    cache->cells = std::move(cells);
    cache->hiddens = std::move(hiddens);
  }
  return hidden;
}

void lstm_backward(const LstmParams& p, const LstmCache& cache,
                   const Eigen::MatrixXd& d_final_hidden, LstmParams& grad) {
  const Eigen::Index h = p.hidden_size();
  const Eigen::Index batch = cache.batch;
  const Eigen::Index steps = batch > 0 ? cache.gates.cols() / batch : 0;
  if (steps == 0) return;
  Eigen::MatrixXd dh = d_final_hidden;
  Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(h, batch);
  Eigen::MatrixXd dz_all(4 * h, steps * batch);

  for (Eigen::Index t = steps; t-- > 0;) {
    const auto act = cache.gates.middleCols(t * batch, batch);
    const auto i = act.topRows(h).array();
    const auto f = act.middleRows(h, h).array();
    const auto g = act.middleRows(2 * h, h).array();
    const auto o = act.bottomRows(h).array();
    const Eigen::ArrayXXd tc = cache.cells.middleCols(t * batch, batch).array().tanh();
    auto dz = dz_all.middleCols(t * batch, batch);

    dc.array() += dh.array() * o * (1.0 - tc * tc);
    dz.bottomRows(h) = (dh.array() * tc * o * (1.0 - o)).matrix();
    dz.topRows(h) = (dc.array() * g * i * (1.0 - i)).matrix();
    if (t > 0) {
      dz.middleRows(h, h) = (dc.array() * cache.cells.middleCols((t - 1) * batch, batch).array() * f * (1.0 - f)).matrix();
    } else {
      dz.middleRows(h, h).setZero();
    }
    dz.middleRows(2 * h, h) = (dc.array() * i * (1.0 - g * g)).matrix();
    dc.array() *= f;
    dh.noalias() = p.recurrent_weights.transpose() * dz;
  }
  grad.input_weights.noalias() += dz_all * cache.inputs.transpose();
  if (steps > 1)
    grad.recurrent_weights.noalias() +=
        dz_all.rightCols((steps - 1) * batch) * cache.hiddens.leftCols((steps - 1) * batch).transpose();
  grad.bias += dz_all.rowwise().sum();
}

Eigen::MatrixXd audio_states(const AudioEncoderParams& params,
                             const std::vector<Eigen::MatrixXd>& inputs,
                             AudioBatchCache* cache) {
  if (inputs.empty()) return Eigen::MatrixXd(2 * params.hidden_size(), 0);
  if (inputs.front().cols() < 1) throw InvariantError("audio fragment has no frames");
  const auto batch = static_cast<Eigen::Index>(inputs.size());
  const Eigen::Index h = params.hidden_size();
  Eigen::MatrixXd states(2 * h, batch);
  states.topRows(h) = lstm_forward(params.forward, time_major(inputs, false), batch, cache ? &cache->forward : nullptr);
  states.bottomRows(h) = lstm_forward(params.backward, time_major(inputs, true), batch, cache ? &cache->backward : nullptr);
  if (cache) cache->states = states;
  return states;
}

void audio_states_backward(const AudioEncoderParams& params, const AudioBatchCache& cache,
                           const Eigen::MatrixXd& d_states, AudioEncoderParams& grad) {
  const Eigen::Index h = params.hidden_size();
  lstm_backward(params.forward, cache.forward, d_states.topRows(h), grad.forward);
  lstm_backward(params.backward, cache.backward, d_states.bottomRows(h), grad.backward);
}

EmbeddingVec audio_encode(const AudioEncoderParams& params, const MfccFragment& frag,
                          bool train_mode, std::uint64_t rng_seed) {
  if (params.projection.cols() != 2 * params.hidden_size() ||
      params.projection_bias.size() != params.projection.rows())
    throw InvariantError("audio projection shape does not match the hidden size");
  const Eigen::MatrixXd x = audio_input(params, frag);
  Eigen::VectorXd state = audio_states(params, {x}, nullptr).col(0);
  if (train_mode) {
    state.array() *= dropout_mask(state.size(), params.dropout, rng_seed).array();
  } else {
    state *= 1.0 - params.dropout;
  }
  return params.projection * state + params.projection_bias;
}

}  // namespace choreokit
