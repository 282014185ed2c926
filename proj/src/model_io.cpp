#include "choreokit/model_io.hpp"

#include <cmath>
#include <map>

#include "binary_io.hpp"
#include "choreokit/error.hpp"
#include "file_util.hpp"

namespace choreokit {

namespace {

constexpr std::string_view kMagic = "CKMP";
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 28;

void put_tensor(detail::ByteWriter& w, const std::string& name, const Eigen::MatrixXd& m) {
  w.str(name);
  w.u32(2);
  w.u64(static_cast<std::uint64_t>(m.rows()));
  w.u64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
}

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

}  // namespace

std::string serialize_model(const ModelParams& model) {
  const auto views = tensors(model);
  const std::map<std::string, double> meta{
      {"meta.margin", model.margin},
      {"meta.margin_form", static_cast<double>(model.margin_form)},
      {"meta.dropout", model.audio.dropout},
      {"meta.duration_s", static_cast<double>(model.duration_s)},
      {"meta.fps", static_cast<double>(model.fps)},
      {"meta.kernel_size", static_cast<double>(model.pose.kernel_size)},
  };
  detail::ByteWriter w;
  w.raw(kMagic);
  w.u32(kModelFileVersion);
  w.u32(static_cast<std::uint32_t>(views.size() + meta.size()));
  for (const auto& [name, value] : meta) put_tensor(w, name, scalar(value));
  for (const ConstTensorView& t : views) put_tensor(w, t.name, t.data);
  return std::move(w.bytes());
}

ModelParams deserialize_model(const std::string& bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < 4 || r.raw(4) != kMagic) throw FormatError("not a choreokit model file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kModelFileVersion)
    throw FormatError("incompatible model version " + std::to_string(version) + " (expected " +
                      std::to_string(kModelFileVersion) + ")");
  const std::uint32_t count = r.u32();
  std::map<std::string, Eigen::MatrixXd> loaded;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    if (r.u32() != 2) throw FormatError("tensor " + name + ": only rank-2 tensors are supported");
    const std::uint64_t rows = r.u64(), cols = r.u64();
    if (rows > kMaxElements || cols > kMaxElements || rows * cols > kMaxElements || rows * cols * 8 > r.remaining())
      throw FormatError("tensor " + name + ": implausible shape or truncated payload");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index a = 0; a < m.rows(); ++a)
      for (Eigen::Index b = 0; b < m.cols(); ++b) m(a, b) = r.f64();
    if (!m.allFinite()) throw FormatError("tensor " + name + " contains non-finite values");
    if (!loaded.emplace(std::move(name), std::move(m)).second) throw FormatError("duplicate tensor in model file");
  }
  if (!r.at_end()) throw FormatError("trailing bytes after model tensors");

  const auto take = [&](const std::string& name) -> Eigen::MatrixXd& {
    auto it = loaded.find(name);
    if (it == loaded.end()) throw FormatError("model file lacks tensor " + name);
    return it->second;
  };
  const auto vec = [&](const std::string& name) -> Eigen::VectorXd {
    const Eigen::MatrixXd& m = take(name);
    if (m.cols() != 1) throw FormatError(name + " must be a column vector");
    return m.col(0);
  };
  const auto meta = [&](const std::string& name) {
    const Eigen::MatrixXd& m = take(name);
    if (m.size() != 1) throw FormatError(name + " must be 1x1");
    return m(0, 0);
  };

  ModelParams model;
  model.margin = meta("meta.margin");
  const double form = meta("meta.margin_form");
  if (form != 0.0 && form != 1.0) throw FormatError("unknown margin form " + std::to_string(form));
  model.margin_form = static_cast<MarginForm>(static_cast<int>(form));
  model.audio.dropout = meta("meta.dropout");
  model.duration_s = static_cast<int>(std::lround(meta("meta.duration_s")));
  model.fps = static_cast<int>(std::lround(meta("meta.fps")));
  model.pose.kernel_size = static_cast<int>(std::lround(meta("meta.kernel_size")));

  model.audio.forward.input_weights = take("audio.forward.input_weights");
  model.audio.forward.recurrent_weights = take("audio.forward.recurrent_weights");
  model.audio.forward.bias = vec("audio.forward.bias");
  model.audio.backward.input_weights = take("audio.backward.input_weights");
  model.audio.backward.recurrent_weights = take("audio.backward.recurrent_weights");
  model.audio.backward.bias = vec("audio.backward.bias");
  model.audio.projection = take("audio.projection");
  model.audio.projection_bias = vec("audio.projection_bias");
  model.audio.input_mean = vec("audio.input_mean");
  model.audio.input_scale = vec("audio.input_scale");
  model.pose.temporal_kernel = take("pose.temporal_kernel");
  model.pose.temporal_bias = vec("pose.temporal_bias");
  model.pose.graph_kernel = take("pose.graph_kernel");
  model.pose.adjacency = take("pose.adjacency");
  model.pose.projection = take("pose.projection");
  model.pose.projection_bias = vec("pose.projection_bias");

  const Eigen::Index h = model.audio.hidden_size();
  const auto lstm_ok = [&](const LstmParams& p) {
    return p.recurrent_weights.rows() == 4 * h && p.recurrent_weights.cols() == h && p.input_weights.rows() == 4 * h &&
           p.input_weights.cols() == static_cast<Eigen::Index>(kMfccDim) && p.bias.size() == 4 * h;
  };
  const PoseEncoderParams& pp = model.pose;
  const bool ok = lstm_ok(model.audio.forward) && lstm_ok(model.audio.backward) &&
                  model.audio.projection.cols() == 2 * h &&
                  model.audio.projection_bias.size() == model.audio.projection.rows() &&
                  model.audio.input_mean.size() == static_cast<Eigen::Index>(kMfccDim) &&
                  model.audio.input_scale.size() == static_cast<Eigen::Index>(kMfccDim) && pp.kernel_size >= 1 &&
                  pp.temporal_kernel.rows() % pp.kernel_size == 0 && pp.temporal_bias.size() == pp.temporal_kernel.cols() &&
                  pp.graph_kernel.rows() == pp.temporal_kernel.cols() && pp.adjacency.rows() == pp.adjacency.cols() &&
                  pp.projection.cols() == pp.adjacency.rows() * pp.graph_kernel.cols() && pp.projection_bias.size() == pp.projection.rows() &&
                  pp.projection.rows() == model.audio.projection.rows() && model.fps > 0 && model.duration_s > 0;
  if (!ok) throw FormatError("model tensors have inconsistent shapes");
  return model;
}

void save_model(const ModelParams& model, const std::filesystem::path& path) {
  detail::write_file(path, serialize_model(model));
}

ModelParams load_model(const std::filesystem::path& path) {
  try {
    return deserialize_model(detail::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace choreokit
