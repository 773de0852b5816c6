// ops.hpp
// Layer primitives with explicit backward passes. Every function checks
// shapes and throws ShapeError naming the offending dims.
#pragma once

#include "proxsense/nn/tensor.hpp"

#include <span>
#include <vector>

namespace proxsense::nn {

// --- linear: y = x W + b;  x [B, in], W [in, out], b [out] ---

Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b);

struct LinearGrads {
    Tensor dx, dw, db;
};
LinearGrads linear_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, bool need_dx = true);

// --- conv1d: stride 1, no padding ---
// x [B, Cin, L], kernel [Cout, Cin, k], bias [Cout] -> [B, Cout, L - (k-1)*dilation]

Tensor conv1d_forward(const Tensor& x, const Tensor& kernel, const Tensor& bias, std::size_t dilation = 1);

struct Conv1dGrads {
    Tensor dx, dkernel, dbias;
};
Conv1dGrads conv1d_backward(const Tensor& x, const Tensor& kernel, std::size_t dilation, const Tensor& grad_out,
                            bool need_dx = true);

// --- maxpool1d: window 2, non-overlapping, odd tail dropped ---

struct MaxPoolResult {
    Tensor out;
    std::vector<std::size_t> argmax;  // position along L for each output element
};
MaxPoolResult maxpool1d(const Tensor& x);
Tensor maxpool1d_backward(const Tensor& grad_out, std::span<const std::size_t> argmax, std::size_t input_length);

// --- GRU cell ---
// W [in, 3H], U [H, 3H], b [3H]; gate blocks ordered (update z, reset r, candidate).
//   z = sigmoid(x Wz + h Uz + bz)
//   r = sigmoid(x Wr + h Ur + br)
//   c = tanh(x Wc + (r * h) Uc + bc)
//   h' = (1 - z) * h + z * c

struct GruStepCache {
    Tensor x, h_prev, z, r, cand;
};

Tensor gru_step(const Tensor& x, const Tensor& h, const Tensor& w, const Tensor& u, const Tensor& b,
                GruStepCache* cache = nullptr);

struct GruStepGrads {
    Tensor dx, dh_prev;
};
// Accumulates parameter gradients into dw, du, db.
GruStepGrads gru_step_backward(const GruStepCache& cache, const Tensor& w, const Tensor& u, const Tensor& dh_next,
                               Tensor& dw, Tensor& du, Tensor& db);

// --- losses ---

Tensor softmax(const Tensor& logits);  // row-wise over [B, C]

struct LossResult {
    double loss = 0.0;
    Tensor grad;  // d loss / d input
};

// Mean over the batch of -sum(target * log softmax(logits)); targets are
// rows of a [B, C] tensor holding a distribution (hard or soft).
LossResult softmax_cross_entropy(const Tensor& logits, const Tensor& targets);

// Mean of (pred - target)^2 over [B, 1] predictions.
LossResult mse_loss(const Tensor& pred, std::span<const double> target);

// --- Adam ---

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long t = 0;
    std::vector<Tensor> m, v;
};

// One update of every parameter from its .grad; lazily sizes m and v.
void adam_step(std::span<Parameter* const> params, AdamState& state, double lr);

}  // namespace proxsense::nn
