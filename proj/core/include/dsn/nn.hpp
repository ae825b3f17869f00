#pragma once

#include <cstddef>
#include <vector>

#include "dsn/prng.hpp"

namespace dsn {

inline constexpr double kLogEps = 1e-12;

// Dense row-major matrix of doubles.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

enum class Activation { kIdentity, kRelu };

struct Layer {
  Mat w;
  std::vector<double> b;
  Activation act = Activation::kIdentity;
};

// Fully connected net. Canonical flat parameter order: for each layer in
// sequence, W row-major then b. Checkpoints, gradients, and optimizer state
// all use this order.
struct Mlp {
  std::vector<Layer> layers;

  int input_dim() const;
  int output_dim() const;
  std::size_t param_count() const;
  std::vector<double> params() const;
  void set_params(const std::vector<double>& flat);

  // Glorot-uniform weights, zero biases, relu on hidden layers, identity output.
  static Mlp make(int input, const std::vector<int>& hidden, int output, Prng& rng);
};

// activations[0] is the input; activations[i + 1] is layer i's post-activation
// output. The last entry has length net.output_dim().
using Activations = std::vector<std::vector<double>>;

Activations forward(const Mlp& net, const std::vector<double>& input);

struct Gradients {
  std::vector<double> params;  // canonical flat order
  std::vector<double> input;
};

// Exact reverse-mode gradients for the activations produced by forward() on
// the same net. grad_output is d(scalar objective)/d(net output).
Gradients backward(const Mlp& net, const Activations& acts,
                   const std::vector<double>& grad_output);

// Max-subtracted, overflow-safe softmax.
std::vector<double> softmax(const std::vector<double>& logits);

// -log(max(probs[label], 1e-12)).
double cross_entropy(const std::vector<double>& probs, int label);

// Uniform in [-s, s], s = sqrt(6 / (fan_in + fan_out)) with fan_in = cols,
// fan_out = rows. Fills in row-major order.
void glorot_init(Mat& w, Prng& rng);

enum class Direction { kMinimize, kMaximize };

// SGD with classical momentum: v <- momentum * v + g. Minimizing subtracts
// learning_rate * v and augments g with 2 * weight_decay * param; maximizing
// adds learning_rate * v and never applies decay.
struct SgdState {
  double learning_rate = 0.01;
  double momentum = 0.0;
  double weight_decay = 0.0;
  std::vector<double> velocity;  // sized on first use
};

void sgd_step(std::vector<double>& params, const std::vector<double>& grads,
              SgdState& state, Direction direction);

int argmax_index(const std::vector<double>& values);  // ties -> lowest index

}  // namespace dsn
