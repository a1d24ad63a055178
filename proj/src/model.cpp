#include "nsgf/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nsgf/kernels.hpp"
#include "nsgf/parallel.hpp"

namespace nsgf {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Network make_network(int in, int hidden, int out, int layers, std::size_t& offset) {
  Network net;
  for (int l = 0; l < layers; ++l) {
    LayerSpec s;
    s.in = l == 0 ? in : hidden;
    s.out = l == layers - 1 ? out : hidden;
    s.sine = true;
    s.weight_offset = offset;
    offset += static_cast<std::size_t>(s.in) * s.out;
    s.bias_offset = offset;
    offset += s.out;
    net.layers.push_back(s);
  }
  return net;
}

}  // namespace

void Architecture::validate() const {
  if (feature_dim < 0 || grid_res < 2 || hidden < 1 || backbone_layers < 1 || head_layers < 1) {
    throw InputError("invalid network architecture dimensions");
  }
  if (!(omega0 > 0.0)) throw InputError("omega0 must be positive");
  if (!(max_width > 0.0 && max_width < 1.0)) throw InputError("max_width must lie in (0,1)");
  for (int a = 0; a < 3; ++a) {
    if (!(bbox_max[a] > bbox_min[a])) throw InputError("feature grid bbox is empty");
  }
}

std::size_t NsgfModel::grid_size() const {
  return static_cast<std::size_t>(arch_.grid_res) * arch_.grid_res * arch_.grid_res * arch_.feature_dim;
}

void NsgfModel::build_layout() {
  arch_.validate();
  std::size_t offset = grid_size();
  backbone_ = make_network(3 + arch_.feature_dim, arch_.hidden, arch_.hidden, arch_.backbone_layers, offset);
  rot_head_ = make_network(arch_.hidden, arch_.hidden, 6, arch_.head_layers, offset);
  width_head_ = make_network(arch_.hidden, arch_.hidden, 1, arch_.head_layers, offset);
  validity_head_ = make_network(arch_.hidden, arch_.hidden, 1, arch_.head_layers, offset);
  // Head outputs are linear.
  for (Network* n : {&rot_head_, &width_head_, &validity_head_}) n->layers.back().sine = false;
  params_.resize(offset);
}

NsgfModel::NsgfModel(const Architecture& arch, std::uint64_t seed) : arch_(arch) {
  build_layout();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> feature(0.0, 0.01);
  for (std::size_t i = 0; i < grid_size(); ++i) params_[i] = feature(rng);
  auto init = [&](const Network& net, bool first_is_input) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const LayerSpec& s = net.layers[l];
      const double bound = (first_is_input && l == 0) ? 1.0 / s.in : std::sqrt(6.0 / s.in) / arch_.omega0;
      std::uniform_real_distribution<double> w(-bound, bound);
      for (std::size_t i = 0; i < static_cast<std::size_t>(s.in) * s.out; ++i) params_[s.weight_offset + i] = w(rng);
      const double bb = 1.0 / std::sqrt(static_cast<double>(s.in));
      std::uniform_real_distribution<double> b(-bb, bb);
      for (int i = 0; i < s.out; ++i) params_[s.bias_offset + i] = b(rng);
    }
  };
  init(backbone_, true);
  init(rot_head_, false);
  init(width_head_, false);
  init(validity_head_, false);
}

NsgfModel::NsgfModel(const Architecture& arch, std::vector<double> params) : arch_(arch) {
  build_layout();
  if (params.size() != params_.size()) {
    throw InputError("model parameter blob has " + std::to_string(params.size()) + " values, architecture needs " +
                     std::to_string(params_.size()));
  }
  params_ = std::move(params);
}

bool NsgfModel::finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

ForwardPass::ForwardPass(const NsgfModel& model, std::span<const Vec3> points, bool keep_derivatives)
    : model_(model), batch_(points.size()), keep_derivatives_(keep_derivatives) {
  const Architecture& arch = model.architecture();
  const int f = arch.feature_dim;
  const int width = 3 + f;
  const int g = arch.grid_res;
  const Vec3 extent = arch.bbox_max - arch.bbox_min;
  const auto params = model.parameters();
  input_.assign(batch_ * width, 0.0);
  corner_.resize(batch_);
  weight_.resize(batch_);
  for (std::size_t i = 0; i < batch_; ++i) {
    const Vec3 u = ((points[i] - arch.bbox_min).array() / extent.array()).matrix();
    double* row = input_.data() + i * width;
    for (int a = 0; a < 3; ++a) row[a] = 2.0 * u[a] - 1.0;
    int base[3];
    double frac[3];
    for (int a = 0; a < 3; ++a) {
      const double x = std::clamp(u[a], 0.0, 1.0) * (g - 1);
      base[a] = std::clamp(static_cast<int>(std::floor(x)), 0, g - 2);
      frac[a] = x - base[a];
    }
    for (int c = 0; c < 8; ++c) {
      const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
      const std::size_t node =
          (static_cast<std::size_t>(base[2] + dz) * g + (base[1] + dy)) * g + (base[0] + dx);
      corner_[i][c] = node * f;
      weight_[i][c] = (dx ? frac[0] : 1.0 - frac[0]) * (dy ? frac[1] : 1.0 - frac[1]) * (dz ? frac[2] : 1.0 - frac[2]);
      for (int ch = 0; ch < f; ++ch) row[3 + ch] += weight_[i][c] * params[corner_[i][c] + ch];
    }
  }
  backbone_.net = &model.backbone();
  rot_.net = &model.rotation_head();
  width_.net = &model.width_head();
  validity_.net = &model.validity_head();
  run(backbone_, input_);
  const auto& feature = backbone_.outputs.back();
  run(rot_, feature);
  run(width_, feature);
  run(validity_, feature);
}

void ForwardPass::run(Activations& acts, const std::vector<double>& input) const {
  const auto params = model_.parameters();
  const double omega = model_.architecture().omega0;
  const std::vector<double>* x = &input;
  acts.outputs.resize(acts.net->layers.size());
  acts.dact.resize(acts.net->layers.size());
  for (std::size_t l = 0; l < acts.net->layers.size(); ++l) {
    const LayerSpec& s = acts.net->layers[l];
    std::vector<double>& y = acts.outputs[l];
    y.resize(batch_ * s.out);
    for (std::size_t i = 0; i < batch_; ++i) {
      std::copy_n(params.data() + s.bias_offset, s.out, y.data() + i * s.out);
    }
    kernels::GemmArgs g;
    g.m = batch_;
    g.n = s.out;
    g.k = s.in;
    g.a = x->data();
    g.a_row_stride = s.in;
    g.a_col_stride = 1;
    g.b = params.data() + s.weight_offset;
    g.ldb = s.out;
    g.c = y.data();
    g.ldc = s.out;
    g.accumulate = true;
    kernels::gemm(g);
    if (s.sine) {
      if (keep_derivatives_) {
        std::vector<double>& d = acts.dact[l];
        d.resize(y.size());
        for (std::size_t q = 0; q < y.size(); ++q) {
          const double z = omega * y[q];
          y[q] = std::sin(z);
          d[q] = omega * std::cos(z);
        }
      } else {
        for (double& v : y) v = std::sin(omega * v);
      }
    }
    x = &y;
  }
}

void ForwardPass::reverse(const Activations& acts, const std::vector<double>& input, std::vector<double> d_out,
                          std::span<double> grad, std::vector<double>& d_input) const {
  const auto params = model_.parameters();
  std::vector<double> transposed;
  for (std::size_t li = acts.net->layers.size(); li-- > 0;) {
    const LayerSpec& s = acts.net->layers[li];
    const std::vector<double>& x = li == 0 ? input : acts.outputs[li - 1];
    if (s.sine) kernels::multiply_inplace(d_out.size(), d_out.data(), acts.dact[li].data());
    // dW (in x out) += X^T dZ
    kernels::GemmArgs gw;
    gw.m = s.in;
    gw.n = s.out;
    gw.k = batch_;
    gw.a = x.data();
    gw.a_row_stride = 1;
    gw.a_col_stride = s.in;
    gw.b = d_out.data();
    gw.ldb = s.out;
    gw.c = grad.data() + s.weight_offset;
    gw.ldc = s.out;
    gw.accumulate = true;
    kernels::gemm(gw);
    kernels::column_sum_accumulate(batch_, s.out, d_out.data(), s.out, grad.data() + s.bias_offset);
    // dX = dZ W^T, with W^T materialized as (out x in).
    transposed.resize(static_cast<std::size_t>(s.in) * s.out);
    const double* w = params.data() + s.weight_offset;
    for (int r = 0; r < s.in; ++r) {
      for (int c = 0; c < s.out; ++c) transposed[static_cast<std::size_t>(c) * s.in + r] = w[static_cast<std::size_t>(r) * s.out + c];
    }
    std::vector<double> d_x(batch_ * s.in);
    kernels::GemmArgs gx;
    gx.m = batch_;
    gx.n = s.in;
    gx.k = s.out;
    gx.a = d_out.data();
    gx.a_row_stride = s.out;
    gx.a_col_stride = 1;
    gx.b = transposed.data();
    gx.ldb = s.in;
    gx.c = d_x.data();
    gx.ldc = s.in;
    gx.accumulate = false;
    kernels::gemm(gx);
    d_out = std::move(d_x);
  }
  d_input = std::move(d_out);
}

void ForwardPass::backward(std::span<const double> d_rot6, std::span<const double> d_width_logit,
                           std::span<const double> d_validity, std::span<double> grad) const {
  if (!keep_derivatives_) throw std::logic_error("ForwardPass::backward on an inference-only pass");
  const auto& feature = backbone_.outputs.back();
  std::vector<double> d_feature, d_head;
  reverse(rot_, feature, {d_rot6.begin(), d_rot6.end()}, grad, d_feature);
  reverse(width_, feature, {d_width_logit.begin(), d_width_logit.end()}, grad, d_head);
  for (std::size_t q = 0; q < d_feature.size(); ++q) d_feature[q] += d_head[q];
  reverse(validity_, feature, {d_validity.begin(), d_validity.end()}, grad, d_head);
  for (std::size_t q = 0; q < d_feature.size(); ++q) d_feature[q] += d_head[q];
  std::vector<double> d_input;
  reverse(backbone_, input_, std::move(d_feature), grad, d_input);
  const int f = model_.architecture().feature_dim;
  const int width = 3 + f;
  for (std::size_t i = 0; i < batch_; ++i) {
    const double* row = d_input.data() + i * width + 3;
    for (int c = 0; c < 8; ++c) {
      const double w = weight_[i][c];
      if (w == 0.0) continue;
      double* dst = grad.data() + corner_[i][c];
      for (int ch = 0; ch < f; ++ch) dst[ch] += w * row[ch];
    }
  }
}

std::vector<RawPrediction> query(const NsgfModel& model, std::span<const Vec3> points) {
  std::vector<RawPrediction> out(points.size());
  const double max_width = model.architecture().max_width;
  parallel_for_chunks(points.size(), 256, [&](std::size_t begin, std::size_t end) {
    const ForwardPass pass(model, points.subspan(begin, end - begin), false);
    const auto rot = pass.rot6();
    const auto wl = pass.width_logit();
    const auto val = pass.validity();
    for (std::size_t i = 0; i < end - begin; ++i) {
      RawPrediction& p = out[begin + i];
      p.validity = val[i];
      std::copy_n(rot.data() + 6 * i, 6, p.rot6.begin());
      p.width_logit = wl[i];
      p.width_coarse = sigmoid(wl[i]) * max_width;
      try {
        p.frame = rot6d_to_frame(p.rot6);
      } catch (const InputError&) {
        // Degenerate rotation output: report an invalid grasp.
        p.frame = {Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitY().cross(Vec3::UnitZ())};
        p.validity = -std::abs(p.validity) - 1.0;
      }
    }
  });
  return out;
}

}  // namespace nsgf
