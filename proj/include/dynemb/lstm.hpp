#pragma once

#include "dynemb/rng.hpp"
#include "dynemb/types.hpp"

namespace dynemb {

// Gate parameters of a single LSTM layer. Each gate weight acts on the
// concatenation [x; h_prev].
struct LstmParams {
  int input_dim = 0;
  int hidden_dim = 0;
  Matrix w_input, w_forget, w_output, w_candidate;  // hidden_dim x (input_dim + hidden_dim)
  Vector b_input, b_forget, b_output, b_candidate;  // hidden_dim

  static LstmParams zero(int input_dim, int hidden_dim);
  // uniform(-1/sqrt(hidden_dim), 1/sqrt(hidden_dim)) weights, forget-gate
  // bias 1, other biases 0.
  static LstmParams init(int input_dim, int hidden_dim, SeededRng& rng);
};

// Hidden state h is the dynamic student embedding; fresh students start at
// all-zeros.
struct StudentState {
  Vector h;
  Vector cell;

  static StudentState zero(int hidden_dim) {
    return {Vector::Zero(hidden_dim), Vector::Zero(hidden_dim)};
  }
};

// Standard recurrence: sigmoid gates, tanh candidate and output squashing.
StudentState lstm_step(const LstmParams& p, const StudentState& st, const Vector& x);

// Forward pass values needed by the backward pass.
struct LstmStepCache {
  Vector z;       // [x; h_prev]
  Vector c_prev;
  Vector gate_i, gate_f, gate_o, gate_g;
  Vector c, tanh_c, h;
};

StudentState lstm_step_cached(const LstmParams& p, const StudentState& st, const Vector& x,
                              LstmStepCache& cache);

// Backpropagates one step. dh/dc carry the loss gradients flowing into this
// step's outputs; on return dx, dh_prev, dc_prev hold the gradients for the
// inputs and `grads` accumulates the parameter gradients.
void lstm_step_backward(const LstmParams& p, const LstmStepCache& cache, const Vector& dh,
                        const Vector& dc, LstmParams& grads, Vector& dx, Vector& dh_prev,
                        Vector& dc_prev);

}  // namespace dynemb
