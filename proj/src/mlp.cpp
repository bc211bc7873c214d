#include "epiplan/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace epiplan {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Tanh:
      return "tanh";
    case Activation::Relu:
      return "relu";
    case Activation::Identity:
      return "identity";
  }
  return "?";
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  if (name == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation: " + name);
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    n += static_cast<std::size_t>(layer.w.size()) +
         static_cast<std::size_t>(layer.b.size());
  }
  return n;
}

Mlp make_mlp(const std::vector<int>& sizes,
             const std::vector<Activation>& activations) {
  if (sizes.size() < 2 || activations.size() != sizes.size() - 1) {
    throw std::invalid_argument("make_mlp: sizes/activations mismatch");
  }
  Mlp net;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Layer layer;
    layer.w = Eigen::MatrixXd::Zero(sizes[l + 1], sizes[l]);
    layer.b = Eigen::VectorXd::Zero(sizes[l + 1]);
    layer.activation = activations[l];
    net.layers.push_back(std::move(layer));
  }
  return net;
}

void orthogonal_init(Layer& layer, double gain, Rng& rng) {
  const auto rows = layer.w.rows();
  const auto cols = layer.w.cols();
  const bool tall = rows >= cols;
  const auto r = tall ? rows : cols;
  const auto c = tall ? cols : rows;

  Eigen::MatrixXd g(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) {
      g(i, j) = rng.normal();
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(r, c);
  const Eigen::MatrixXd r_mat =
      qr.matrixQR().topRows(c).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < c; ++j) {
    if (r_mat(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  layer.w = gain * (tall ? q : Eigen::MatrixXd(q.transpose()));
  layer.b.setZero();
}

void uniform_fanin_init(Layer& layer, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(layer.w.cols()));
  for (Eigen::Index j = 0; j < layer.w.cols(); ++j) {
    for (Eigen::Index i = 0; i < layer.w.rows(); ++i) {
      layer.w(i, j) = bound * (2.0 * rng.uniform() - 1.0);
    }
  }
  layer.b.setZero();
}

namespace {

Eigen::MatrixXd apply_activation(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::Tanh:
      return z.array().tanh();
    case Activation::Relu:
      return z.cwiseMax(0.0);
    case Activation::Identity:
      return z;
  }
  return z;
}

// dL/dz from dL/da, using whichever of z/a is cheapest.
Eigen::MatrixXd activation_backward(Activation act, const Eigen::MatrixXd& z,
                                    const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& da) {
  switch (act) {
    case Activation::Tanh:
      return da.array() * (1.0 - a.array().square());
    case Activation::Relu:
      return (z.array() > 0.0).select(da, Eigen::MatrixXd::Zero(da.rows(), da.cols()));
    case Activation::Identity:
      return da;
  }
  return da;
}

}  // namespace

Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& input) {
  if (input.rows() != net.input_dim()) {
    throw std::invalid_argument("forward: input has wrong dimension");
  }
  Eigen::MatrixXd a = input;
  for (const auto& layer : net.layers) {
    Eigen::MatrixXd z = (layer.w * a).colwise() + layer.b;
    a = apply_activation(layer.activation, z);
  }
  return a;
}

Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& input,
                        ForwardTrace& trace) {
  if (input.rows() != net.input_dim()) {
    throw std::invalid_argument("forward: input has wrong dimension");
  }
  trace.input = input;
  trace.pre.clear();
  trace.post.clear();
  Eigen::MatrixXd a = input;
  for (const auto& layer : net.layers) {
    Eigen::MatrixXd z = (layer.w * a).colwise() + layer.b;
    a = apply_activation(layer.activation, z);
    trace.pre.push_back(z);
    trace.post.push_back(a);
  }
  return a;
}

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input) {
  return forward(net, Eigen::MatrixXd(input)).col(0);
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
  MlpGrads g;
  for (const auto& layer : net.layers) {
    g.layers.push_back({Eigen::MatrixXd::Zero(layer.w.rows(), layer.w.cols()),
                        Eigen::VectorXd::Zero(layer.b.size())});
  }
  return g;
}

void MlpGrads::add_scaled(const MlpGrads& other, double s) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].w += s * other.layers[l].w;
    layers[l].b += s * other.layers[l].b;
  }
}

void MlpGrads::scale(double factor) {
  for (auto& layer : layers) {
    layer.w *= factor;
    layer.b *= factor;
  }
}

double MlpGrads::squared_norm() const {
  double sq = 0.0;
  for (const auto& layer : layers) {
    sq += layer.w.squaredNorm() + layer.b.squaredNorm();
  }
  return sq;
}

MlpGrads backward(const Mlp& net, const ForwardTrace& trace,
                  const Eigen::MatrixXd& dl_doutput,
                  Eigen::MatrixXd* dl_dinput) {
  const auto n_layers = net.layers.size();
  if (trace.pre.size() != n_layers ||
      dl_doutput.rows() != net.output_dim() ||
      dl_doutput.cols() != trace.input.cols()) {
    throw std::invalid_argument("backward: trace/gradient shape mismatch");
  }
  MlpGrads grads;
  grads.layers.resize(n_layers);

  Eigen::MatrixXd da = dl_doutput;
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& layer = net.layers[l];
    const Eigen::MatrixXd dz =
        activation_backward(layer.activation, trace.pre[l], trace.post[l], da);
    const Eigen::MatrixXd& a_prev = l == 0 ? trace.input : trace.post[l - 1];
    grads.layers[l].w = dz * a_prev.transpose();
    grads.layers[l].b = dz.rowwise().sum();
    if (l > 0 || dl_dinput != nullptr) {
      da = layer.w.transpose() * dz;
    }
  }
  if (dl_dinput != nullptr) {
    *dl_dinput = da;
  }
  return grads;
}

std::vector<double> flatten_params(const Mlp& net) {
  std::vector<double> flat;
  flat.reserve(net.parameter_count());
  for (const auto& layer : net.layers) {
    flat.insert(flat.end(), layer.w.data(), layer.w.data() + layer.w.size());
    flat.insert(flat.end(), layer.b.data(), layer.b.data() + layer.b.size());
  }
  return flat;
}

void unflatten_params(std::span<const double> flat, Mlp& net) {
  std::size_t offset = 0;
  for (auto& layer : net.layers) {
    std::copy(flat.begin() + offset, flat.begin() + offset + layer.w.size(),
              layer.w.data());
    offset += layer.w.size();
    std::copy(flat.begin() + offset, flat.begin() + offset + layer.b.size(),
              layer.b.data());
    offset += layer.b.size();
  }
  if (offset != flat.size()) {
    throw std::invalid_argument("unflatten_params: size mismatch");
  }
}

std::vector<double> flatten_grads(const MlpGrads& grads) {
  std::vector<double> flat;
  for (const auto& layer : grads.layers) {
    flat.insert(flat.end(), layer.w.data(), layer.w.data() + layer.w.size());
    flat.insert(flat.end(), layer.b.data(), layer.b.data() + layer.b.size());
  }
  return flat;
}

Adam::Adam(std::size_t n_params, double learning_rate, double beta1,
           double beta2, double eps)
    : m_(n_params, 0.0),
      v_(n_params, 0.0),
      lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("Adam::step: size mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    if (!std::isfinite(g)) {
      throw std::runtime_error("Adam::step: non-finite gradient");
    }
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

nlohmann::json Adam::to_json() const {
  return {{"m", m_}, {"v", v_}, {"t", t_},      {"lr", lr_},
          {"beta1", beta1_},   {"beta2", beta2_}, {"eps", eps_}};
}

Adam Adam::from_json(const nlohmann::json& j) {
  Adam adam(j.at("m").size(), j.at("lr").get<double>(),
            j.at("beta1").get<double>(), j.at("beta2").get<double>(),
            j.at("eps").get<double>());
  adam.m_ = j.at("m").get<std::vector<double>>();
  adam.v_ = j.at("v").get<std::vector<double>>();
  adam.t_ = j.at("t").get<std::int64_t>();
  return adam;
}

double clip_grad_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

nlohmann::json mlp_to_json(const Mlp& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : net.layers) {
    std::vector<double> w_rowmajor;
    w_rowmajor.reserve(layer.w.size());
    for (Eigen::Index i = 0; i < layer.w.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.w.cols(); ++j) {
        w_rowmajor.push_back(layer.w(i, j));
      }
    }
    layers.push_back({{"in", layer.w.cols()},
                      {"out", layer.w.rows()},
                      {"activation", activation_name(layer.activation)},
                      {"w", w_rowmajor},
                      {"b", std::vector<double>(layer.b.data(),
                                                layer.b.data() + layer.b.size())}});
  }
  return {{"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net;
  for (const auto& lj : j.at("layers")) {
    const int in = lj.at("in").get<int>();
    const int out = lj.at("out").get<int>();
    Layer layer;
    layer.w = Eigen::MatrixXd(out, in);
    layer.b = Eigen::VectorXd(out);
    layer.activation = activation_from_name(lj.at("activation").get<std::string>());
    const auto w = lj.at("w").get<std::vector<double>>();
    const auto b = lj.at("b").get<std::vector<double>>();
    if (static_cast<int>(w.size()) != in * out ||
        static_cast<int>(b.size()) != out) {
      throw std::invalid_argument("mlp_from_json: shape mismatch");
    }
    for (int i = 0; i < out; ++i) {
      for (int k = 0; k < in; ++k) {
        layer.w(i, k) = w[static_cast<std::size_t>(i) * in + k];
      }
    }
    std::copy(b.begin(), b.end(), layer.b.data());
    net.layers.push_back(std::move(layer));
  }
  return net;
}

}  // namespace epiplan
