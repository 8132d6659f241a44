#include "dynemb/lstm.hpp"

#include "dynemb/errors.hpp"
#include "dynemb/math.hpp"

#include <cmath>

namespace dynemb {

namespace {

Vector sigmoid_vec(const Vector& a) {
  return a.unaryExpr([](double v) { return logistic(v); });
}

Vector tanh_vec(const Vector& a) {
  return a.unaryExpr([](double v) { return std::tanh(v); });
}

}  // namespace

LstmParams LstmParams::zero(int input_dim, int hidden_dim) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  const int cols = input_dim + hidden_dim;
  p.w_input = Matrix::Zero(hidden_dim, cols);
  p.w_forget = Matrix::Zero(hidden_dim, cols);
  p.w_output = Matrix::Zero(hidden_dim, cols);
  p.w_candidate = Matrix::Zero(hidden_dim, cols);
  p.b_input = Vector::Zero(hidden_dim);
  p.b_forget = Vector::Zero(hidden_dim);
  p.b_output = Vector::Zero(hidden_dim);
  p.b_candidate = Vector::Zero(hidden_dim);
  return p;
}

LstmParams LstmParams::init(int input_dim, int hidden_dim, SeededRng& rng) {
  LstmParams p = zero(input_dim, hidden_dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (Matrix* w : {&p.w_input, &p.w_forget, &p.w_output, &p.w_candidate}) {
    for (Index i = 0; i < w->rows(); ++i)
      for (Index j = 0; j < w->cols(); ++j) (*w)(i, j) = rng.uniform(-bound, bound);
  }
  p.b_forget.setConstant(1.0);  // open forget gates so memory survives early training
  return p;
}

StudentState lstm_step_cached(const LstmParams& p, const StudentState& st, const Vector& x,
                              LstmStepCache& cache) {
  if (x.size() != p.input_dim) throw DimensionError("lstm_step: input dimension mismatch");
  if (st.h.size() != p.hidden_dim) throw DimensionError("lstm_step: state dimension mismatch");

  cache.z.resize(p.input_dim + p.hidden_dim);
  cache.z.head(p.input_dim) = x;
  cache.z.tail(p.hidden_dim) = st.h;
  cache.c_prev = st.cell;

  cache.gate_i = sigmoid_vec(p.w_input * cache.z + p.b_input);
  cache.gate_f = sigmoid_vec(p.w_forget * cache.z + p.b_forget);
  cache.gate_o = sigmoid_vec(p.w_output * cache.z + p.b_output);
  cache.gate_g = tanh_vec(p.w_candidate * cache.z + p.b_candidate);

  cache.c = cache.gate_f.cwiseProduct(st.cell) + cache.gate_i.cwiseProduct(cache.gate_g);
  cache.tanh_c = tanh_vec(cache.c);
  cache.h = cache.gate_o.cwiseProduct(cache.tanh_c);
  return {cache.h, cache.c};
}

StudentState lstm_step(const LstmParams& p, const StudentState& st, const Vector& x) {
  LstmStepCache cache;
  return lstm_step_cached(p, st, x, cache);
}

void lstm_step_backward(const LstmParams& p, const LstmStepCache& cache, const Vector& dh,
                        const Vector& dc, LstmParams& grads, Vector& dx, Vector& dh_prev,
                        Vector& dc_prev) {
  const Vector one = Vector::Ones(p.hidden_dim);

  const Vector dct =
      dc + dh.cwiseProduct(cache.gate_o).cwiseProduct(one - cache.tanh_c.cwiseProduct(cache.tanh_c));
  const Vector d_o = dh.cwiseProduct(cache.tanh_c);
  const Vector d_i = dct.cwiseProduct(cache.gate_g);
  const Vector d_g = dct.cwiseProduct(cache.gate_i);
  const Vector d_f = dct.cwiseProduct(cache.c_prev);
  dc_prev = dct.cwiseProduct(cache.gate_f);

  const Vector da_i = d_i.cwiseProduct(cache.gate_i).cwiseProduct(one - cache.gate_i);
  const Vector da_f = d_f.cwiseProduct(cache.gate_f).cwiseProduct(one - cache.gate_f);
  const Vector da_o = d_o.cwiseProduct(cache.gate_o).cwiseProduct(one - cache.gate_o);
  const Vector da_g = d_g.cwiseProduct(one - cache.gate_g.cwiseProduct(cache.gate_g));

  grads.w_input.noalias() += da_i * cache.z.transpose();
  grads.w_forget.noalias() += da_f * cache.z.transpose();
  grads.w_output.noalias() += da_o * cache.z.transpose();
  grads.w_candidate.noalias() += da_g * cache.z.transpose();
  grads.b_input += da_i;
  grads.b_forget += da_f;
  grads.b_output += da_o;
  grads.b_candidate += da_g;

  Vector dz = p.w_input.transpose() * da_i;
  dz.noalias() += p.w_forget.transpose() * da_f;
  dz.noalias() += p.w_output.transpose() * da_o;
  dz.noalias() += p.w_candidate.transpose() * da_g;
  dx = dz.head(p.input_dim);
  dh_prev = dz.tail(p.hidden_dim);
}

}  // namespace dynemb
