#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nsgf/rotation.hpp"

namespace nsgf {

// Shape of the grasp field network.
struct Architecture {
  int feature_dim = 16;      // channels of the trainable feature grid
  int grid_res = 16;         // feature grid nodes per axis
  int hidden = 128;
  int backbone_layers = 8;   // sine layers; the last one emits the shared feature
  int head_layers = 4;       // per head: head_layers-1 sine layers + linear output
  double omega0 = 30.0;
  double max_width = 0.25;   // w_coarse = sigmoid(logit) * max_width
  Vec3 bbox_min{-0.6, -0.6, -0.6};
  Vec3 bbox_max{0.6, 0.6, 0.6};

  void validate() const;
  bool operator==(const Architecture&) const = default;
};

struct LayerSpec {
  int in = 0, out = 0;
  bool sine = true;
  std::size_t weight_offset = 0;  // in x out, row-major (input-major)
  std::size_t bias_offset = 0;
};

struct Network {
  std::vector<LayerSpec> layers;
  int input_dim() const { return layers.front().in; }
  int output_dim() const { return layers.back().out; }
};

// Per-point network outputs before any geometric post-processing.
struct RawPrediction {
  double validity = 0.0;  // logit q, valid iff q > 0
  Rot6 rot6{};
  double width_logit = 0.0;
  GraspFrame frame;
  double width_coarse = 0.0;
};

// Neural surface grasping field: a sine-activated MLP fed with the
// normalized point and a 16-channel feature trilinearly sampled from a
// trainable grid. All parameters live in one flat vector, in this order:
//   feature grid (x fastest, channels innermost), backbone, rotation head,
//   width head, validity head; each layer stores weights then bias.
class NsgfModel {
 public:
  NsgfModel() = default;
  NsgfModel(const Architecture& arch, std::uint64_t seed);
  // Wraps existing parameters (deserialization); sizes must match.
  NsgfModel(const Architecture& arch, std::vector<double> params);

  const Architecture& architecture() const { return arch_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::size_t grid_size() const;  // number of feature-grid scalars
  const Network& backbone() const { return backbone_; }
  const Network& rotation_head() const { return rot_head_; }
  const Network& width_head() const { return width_head_; }
  const Network& validity_head() const { return validity_head_; }

  bool finite() const;

 private:
  void build_layout();

  Architecture arch_;
  Network backbone_, rot_head_, width_head_, validity_head_;
  std::vector<double> params_;
};

// Batched, order-preserving evaluation; parallel over fixed chunks.
std::vector<RawPrediction> query(const NsgfModel& model, std::span<const Vec3> points);

// Training-time forward/backward over a batch. Holds every activation needed
// by the reverse pass.
class ForwardPass {
 public:
  ForwardPass(const NsgfModel& model, std::span<const Vec3> points, bool keep_derivatives = true);

  std::size_t batch() const { return batch_; }
  // Raw head outputs, row per point.
  std::span<const double> rot6() const { return rot_.outputs.back(); }
  std::span<const double> width_logit() const { return width_.outputs.back(); }
  std::span<const double> validity() const { return validity_.outputs.back(); }

  // Accumulates dL/dparams into `grad` (parameter_count long) given the
  // loss gradients with respect to the three head outputs.
  void backward(std::span<const double> d_rot6, std::span<const double> d_width_logit,
                std::span<const double> d_validity, std::span<double> grad) const;

 private:
  struct Activations {
    const Network* net = nullptr;
    std::vector<std::vector<double>> outputs;  // per layer, batch x out
    std::vector<std::vector<double>> dact;     // per sine layer, omega * cos
  };
  void run(Activations& acts, const std::vector<double>& input) const;
  void reverse(const Activations& acts, const std::vector<double>& input, std::vector<double> d_out,
               std::span<double> grad, std::vector<double>& d_input) const;

  const NsgfModel& model_;
  std::size_t batch_;
  bool keep_derivatives_;
  std::vector<double> input_;                       // batch x (3 + F)
  std::vector<std::array<std::size_t, 8>> corner_;  // feature grid node per corner
  std::vector<std::array<double, 8>> weight_;
  Activations backbone_, rot_, width_, validity_;
};

}  // namespace nsgf
