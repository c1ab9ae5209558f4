#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "deepair/numerics/tape.hpp"

// Differentiable operations. Each takes the tape to record on; outputs need
// a gradient iff any input does.
namespace deepair::ops {

enum class Mode { train, eval };

Var add(Tape& tape, const Var& a, const Var& b);
Var sub(Tape& tape, const Var& a, const Var& b);
Var mul(Tape& tape, const Var& a, const Var& b);
Var scale(Tape& tape, const Var& a, double factor);
Var sum(Tape& tape, const Var& a);
Var mean(Tape& tape, const Var& a);
Var reshape(Tape& tape, const Var& a, Shape shape);

Var relu(Tape& tape, const Var& a);
Var sigmoid(Tape& tape, const Var& a);
Var tanh(Tape& tape, const Var& a);

// Cross-correlation, stride 1, zero padding. Input is [C,H,W] or [B,C,H,W];
// kernel is [C_out,C_in,k,k] with k in {1,3}; padding must be (k-1)/2.
// bias may be null.
Var conv2d(Tape& tape, const Var& input, const Var& kernel, const Var& bias, std::size_t padding);

// Per-pixel affine map across channels, weight [C_out,C_in]. Routed through
// conv2d with a 1x1 kernel, so the two agree bit for bit.
Var conv1x1(Tape& tape, const Var& input, const Var& weight, const Var& bias);

struct BatchNormState {
  static constexpr double kEpsilon = 1e-5;
  static constexpr double kMomentum = 0.1;

  explicit BatchNormState(std::size_t channels)
      : running_mean(Shape{channels}, 0.0), running_var(Shape{channels}, 1.0) {}

  Tensor running_mean;
  Tensor running_var;
  bool initialized = false;  // set by the first train-mode call
};

// Input [C,H,W] or [B,C,H,W]; statistics are per channel over B*H*W values.
// Train mode updates the running statistics (unbiased variance).
Var batch_norm(Tape& tape, const Var& input, const Var& gamma, const Var& beta, BatchNormState& state,
               Mode mode);

// [C,H,W] -> [C] or [B,C,H,W] -> [B,C].
Var global_avg_pool(Tape& tape, const Var& input);

// [B,C,H,W] -> [B,C] picking pixel (H/2, W/2).
Var center_pixel(Tape& tape, const Var& input);

// y = x W^T + b for x [in] or [B,in], weight [out,in]; bias may be null.
Var linear(Tape& tape, const Var& x, const Var& weight, const Var& bias);

// Rows of a [R,D] tensor, in the given order.
Var select_rows(Tape& tape, const Var& x, std::vector<std::size_t> rows);

// Mean of squared differences over all elements.
Var mse_loss(Tape& tape, const Var& prediction, const Tensor& target);

struct LstmWeights {
  Var w_i, w_f, w_o, w_c;  // [hidden, input]
  Var u_i, u_f, u_o, u_c;  // [hidden, hidden]
  Var b_i, b_f, b_o, b_c;  // [hidden]
};

struct LstmState {
  Var h;
  Var c;
};

// Standard LSTM cell; x is [in] or [B,in], state [hidden] or [B,hidden].
//   i = sig(W_i x + U_i h + b_i), f, o likewise
//   c' = f * c + i * tanh(W_c x + U_c h + b_c),  h' = tanh(c') * o
LstmState lstm_step(Tape& tape, const Var& x, const Var& h_prev, const Var& c_prev, const LstmWeights& weights);

}  // namespace deepair::ops
