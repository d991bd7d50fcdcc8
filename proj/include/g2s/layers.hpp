#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "g2s/autodiff.hpp"
#include "g2s/errors.hpp"
#include "g2s/params.hpp"

namespace g2s {

enum class Activation { relu, tanh, sigmoid, none };

inline Var activate(const Var& x, Activation act) {
  switch (act) {
    case Activation::relu: return relu(x);
    case Activation::tanh: return tanh(x);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::none: return x;
  }
  throw ArgumentError("unknown activation");
}

/// act(x W + b) for x [n,in], W [in,out], b [out].
inline Var dense_layer(const Var& x, const Var& w, const Var& b, Activation act) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  if (xv.cols() != wv.rows() || bv.size() != wv.cols()) {
    throw DimensionError("dense_layer shape mismatch: x " + shape_str(xv.shape) + ", W " + shape_str(wv.shape) +
                         ", b " + shape_str(bv.shape));
  }
  return activate(add_row(matmul(x, w), b), act);
}

struct LstmState {
  Var h;
  Var c;
};

/// Single LSTM step. `w` maps CONCAT(x, h) to the four gates laid out as
/// [input, forget, cell, output]; both `x` and `h` are single rows.
inline LstmState lstm_step(const Var& x, const LstmState& prev, const Var& w, const Var& b) {
  const std::size_t hidden = prev.h.cols();
  if (w.cols() != 4 * hidden || w.rows() != x.cols() + hidden) {
    throw DimensionError("lstm weights " + shape_str(w.value().shape) + " do not fit input " +
                         shape_str(x.value().shape) + " and hidden " + std::to_string(hidden));
  }
  Var gates = add_row(matmul(concat_cols({x, prev.h}), w), b);
  Var i = sigmoid(slice_cols(gates, 0, hidden));
  Var f = sigmoid(slice_cols(gates, hidden, hidden));
  Var g = tanh(slice_cols(gates, 2 * hidden, hidden));
  Var o = sigmoid(slice_cols(gates, 3 * hidden, hidden));
  Var c = add(mul(f, prev.c), mul(i, g));
  Var h = mul(o, tanh(c));
  return {h, c};
}

/// Registers LSTM weights `<prefix>.W` [in+hidden, 4*hidden] and `<prefix>.b`.
inline void add_lstm_params(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t hidden,
                            Rng& rng) {
  params.add(prefix + ".W", xavier_uniform(in + hidden, 4 * hidden, rng));
  params.add(prefix + ".b", Tensor(Shape{4 * hidden}));
}

inline void add_dense_params(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t out,
                             Rng& rng) {
  params.add(prefix + ".W", xavier_uniform(in, out, rng));
  params.add(prefix + ".b", Tensor(Shape{out}));
}

}  // namespace g2s
