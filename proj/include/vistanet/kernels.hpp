#pragma once

#include "vistanet/tensor.hpp"

namespace vistanet::kernels {

// Dense 2-D convolution kernels over CHW tensors. The functions in this
// namespace parallelize with OpenMP over independent output elements, so the
// result is bit-identical to the serial reference for any thread count: each
// element is reduced by one thread in a fixed loop order.
//
// kernels::serial holds the naive reference implementations. Tests assert
// exact equality between the two and the benchmark target times them against
// each other.

int conv_out_dim(int in, int k, int stride, int pad);

// x: {IC,H,W}, w: {OC,IC,KH,KW}, b: {OC} -> {OC,OH,OW}
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                      int stride, int pad);

// gy: {OC,OH,OW}, w as above -> gx: {IC,H,W} (gather form)
Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w,
                             int in_h, int in_w, int stride, int pad);

// gy: {OC,OH,OW}, x: {IC,H,W} -> gw: {OC,IC,KH,KW}
Tensor conv2d_backward_weight(const Tensor& gy, const Tensor& x,
                              int kh, int kw, int stride, int pad);

// gy: {OC,OH,OW} -> gb: {OC}
Tensor conv2d_backward_bias(const Tensor& gy);

// Non-overlapping block average: {H,W} -> {h,w}; H, W must be integer
// multiples of h, w.
Tensor block_mean(const Tensor& m, int out_h, int out_w);

// {C,H,W} -> {C,2H,2W} nearest neighbour, and its adjoint.
Tensor upsample2x_forward(const Tensor& x);
Tensor upsample2x_backward(const Tensor& gy);

// Sum of n doubles. Deterministic mode accumulates serially in index order;
// fast mode uses an OpenMP reduction whose association order may vary.
double reduce_sum(const double* v, int64_t n, bool deterministic);

namespace serial {

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                      int stride, int pad);
Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w,
                             int in_h, int in_w, int stride, int pad);
Tensor conv2d_backward_weight(const Tensor& gy, const Tensor& x,
                              int kh, int kw, int stride, int pad);
Tensor block_mean(const Tensor& m, int out_h, int out_w);

}  // namespace serial

}  // namespace vistanet::kernels
