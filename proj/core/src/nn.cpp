#include "dsn/nn.hpp"

#include <algorithm>
#include <cmath>

#include "dsn/error.hpp"

namespace dsn {

int Mlp::input_dim() const {
  require(!layers.empty(), "Mlp: no layers");
  return layers.front().w.cols;
}

int Mlp::output_dim() const {
  require(!layers.empty(), "Mlp: no layers");
  return layers.back().w.rows;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.w.data.size() + layer.b.size();
  return n;
}

std::vector<double> Mlp::params() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (const auto& layer : layers) {
    flat.insert(flat.end(), layer.w.data.begin(), layer.w.data.end());
    flat.insert(flat.end(), layer.b.begin(), layer.b.end());
  }
  return flat;
}

void Mlp::set_params(const std::vector<double>& flat) {
  require(flat.size() == param_count(), "Mlp::set_params: size mismatch");
  std::size_t pos = 0;
  for (auto& layer : layers) {
    std::copy_n(flat.begin() + pos, layer.w.data.size(), layer.w.data.begin());
    pos += layer.w.data.size();
    std::copy_n(flat.begin() + pos, layer.b.size(), layer.b.begin());
    pos += layer.b.size();
  }
}

Mlp Mlp::make(int input, const std::vector<int>& hidden, int output, Prng& rng) {
  require(input > 0 && output > 0, "Mlp::make: dims must be positive");
  Mlp net;
  int in = input;
  for (int h : hidden) {
    require(h > 0, "Mlp::make: hidden dims must be positive");
    Layer layer;
    layer.w = Mat(h, in);
    glorot_init(layer.w, rng);
    layer.b.assign(h, 0.0);
    layer.act = Activation::kRelu;
    net.layers.push_back(std::move(layer));
    in = h;
  }
  Layer out;
  out.w = Mat(output, in);
  glorot_init(out.w, rng);
  out.b.assign(output, 0.0);
  out.act = Activation::kIdentity;
  net.layers.push_back(std::move(out));
  return net;
}

Activations forward(const Mlp& net, const std::vector<double>& input) {
  require(!net.layers.empty(), "forward: net has no layers");
  require(static_cast<int>(input.size()) == net.input_dim(),
          "forward: input size mismatch");
  Activations acts;
  acts.reserve(net.layers.size() + 1);
  acts.push_back(input);
  for (const auto& layer : net.layers) {
    const auto& x = acts.back();
    std::vector<double> y(layer.w.rows);
    for (int r = 0; r < layer.w.rows; ++r) {
      double acc = layer.b[r];
      const double* wrow = layer.w.data.data() + static_cast<std::size_t>(r) * layer.w.cols;
      for (int c = 0; c < layer.w.cols; ++c) acc += wrow[c] * x[c];
      y[r] = (layer.act == Activation::kRelu) ? std::max(0.0, acc) : acc;
    }
    acts.push_back(std::move(y));
  }
  return acts;
}

Gradients backward(const Mlp& net, const Activations& acts,
                   const std::vector<double>& grad_output) {
  require(acts.size() == net.layers.size() + 1, "backward: activations mismatch");
  require(static_cast<int>(grad_output.size()) == net.output_dim(),
          "backward: grad_output size mismatch");

  Gradients out;
  out.params.assign(net.param_count(), 0.0);

  std::vector<std::size_t> offsets(net.layers.size());
  std::size_t pos = 0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    offsets[l] = pos;
    pos += net.layers[l].w.data.size() + net.layers[l].b.size();
  }

  std::vector<double> grad = grad_output;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer& layer = net.layers[li];
    const auto& x = acts[li];
    const auto& y = acts[li + 1];
    std::vector<double> dz(layer.w.rows);
    for (int r = 0; r < layer.w.rows; ++r) {
      dz[r] = (layer.act == Activation::kRelu && y[r] <= 0.0) ? 0.0 : grad[r];
    }
    double* dw = out.params.data() + offsets[li];
    double* db = dw + layer.w.data.size();
    for (int r = 0; r < layer.w.rows; ++r) {
      double* dwrow = dw + static_cast<std::size_t>(r) * layer.w.cols;
      for (int c = 0; c < layer.w.cols; ++c) dwrow[c] = dz[r] * x[c];
      db[r] = dz[r];
    }
    std::vector<double> prev(layer.w.cols, 0.0);
    for (int r = 0; r < layer.w.rows; ++r) {
      if (dz[r] == 0.0) continue;
      const double* wrow = layer.w.data.data() + static_cast<std::size_t>(r) * layer.w.cols;
      for (int c = 0; c < layer.w.cols; ++c) prev[c] += wrow[c] * dz[r];
    }
    grad = std::move(prev);
  }
  out.input = std::move(grad);
  return out;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  require(!logits.empty(), "softmax: empty input");
  double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - top);
    sum += probs[i];
  }
  for (auto& p : probs) p /= sum;
  return probs;
}

double cross_entropy(const std::vector<double>& probs, int label) {
  require(label >= 0 && label < static_cast<int>(probs.size()),
          "cross_entropy: label out of range");
  return -std::log(std::max(probs[label], kLogEps));
}

void glorot_init(Mat& w, Prng& rng) {
  require(w.rows > 0 && w.cols > 0, "glorot_init: empty matrix");
  double s = std::sqrt(6.0 / (w.rows + w.cols));
  for (auto& v : w.data) v = rng.uniform(-s, s);
}

void sgd_step(std::vector<double>& params, const std::vector<double>& grads,
              SgdState& state, Direction direction) {
  require(params.size() == grads.size(), "sgd_step: size mismatch");
  if (state.velocity.empty()) state.velocity.assign(params.size(), 0.0);
  require(state.velocity.size() == params.size(), "sgd_step: velocity size mismatch");
  require(state.weight_decay >= 0.0, "sgd_step: negative weight decay");

  if (direction == Direction::kMinimize) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      double g = grads[i] + 2.0 * state.weight_decay * params[i];
      state.velocity[i] = state.momentum * state.velocity[i] + g;
      params[i] -= state.learning_rate * state.velocity[i];
    }
  } else {
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.velocity[i] = state.momentum * state.velocity[i] + grads[i];
      params[i] += state.learning_rate * state.velocity[i];
    }
  }
}

int argmax_index(const std::vector<double>& values) {
  require(!values.empty(), "argmax_index: empty input");
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace dsn
