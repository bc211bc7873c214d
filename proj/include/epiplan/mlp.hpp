#ifndef EPIPLAN_MLP_HPP_
#define EPIPLAN_MLP_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "epiplan/rng.hpp"
#include "json.hpp"

namespace epiplan {

enum class Activation { Tanh, Relu, Identity };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct Layer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
  Activation activation = Activation::Identity;
};

// Plain feedforward net. Batched evaluation treats each column of a matrix
// as one sample.
struct Mlp {
  std::vector<Layer> layers;

  int input_dim() const { return static_cast<int>(layers.front().w.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().w.rows()); }
  std::size_t parameter_count() const;
};

// sizes = {in, hidden..., out}; activations has sizes.size()-1 entries.
Mlp make_mlp(const std::vector<int>& sizes,
             const std::vector<Activation>& activations);

// Orthogonal rows/columns scaled by gain; the cited PPO setup. Biases zero.
void orthogonal_init(Layer& layer, double gain, Rng& rng);
// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
void uniform_fanin_init(Layer& layer, Rng& rng);

// Values cached by a forward pass, needed to run the backward pass.
struct ForwardTrace {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;   // z = W a + b per layer
  std::vector<Eigen::MatrixXd> post;  // a = act(z) per layer
};

Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& input);
Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& input,
                        ForwardTrace& trace);
Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input);

struct LayerGrads {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

struct MlpGrads {
  std::vector<LayerGrads> layers;

  static MlpGrads zeros_like(const Mlp& net);
  void add_scaled(const MlpGrads& other, double scale);
  void scale(double factor);
  double squared_norm() const;
};

// Exact reverse-mode gradients of a scalar loss with output gradient
// dLdOutput (columns align with trace columns). Optionally also returns the
// gradient w.r.t. the network input (needed when a sampled action feeds
// another network).
MlpGrads backward(const Mlp& net, const ForwardTrace& trace,
                  const Eigen::MatrixXd& dl_doutput,
                  Eigen::MatrixXd* dl_dinput = nullptr);

// Flat parameter views, ordered layer by layer (weights column-major, then
// bias). Adam and checkpointing work on these.
std::vector<double> flatten_params(const Mlp& net);
void unflatten_params(std::span<const double> flat, Mlp& net);
std::vector<double> flatten_grads(const MlpGrads& grads);

// Bias-corrected Adam with PyTorch's epsilon placement. Throws runtime_error
// on non-finite gradients.
class Adam {
 public:
  Adam(std::size_t n_params, double learning_rate, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  void step(std::span<double> params, std::span<const double> grads);
  void set_learning_rate(double lr) { lr_ = lr; }
  double learning_rate() const { return lr_; }
  std::int64_t timestep() const { return t_; }

  nlohmann::json to_json() const;
  static Adam from_json(const nlohmann::json& j);

 private:
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
  double lr_, beta1_, beta2_, eps_;
};

// Rescales grads in place so the global L2 norm is at most max_norm;
// returns the pre-clip norm.
double clip_grad_norm(std::span<double> grads, double max_norm);

nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace epiplan

#endif  // EPIPLAN_MLP_HPP_
