#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "vistanet/tensor.hpp"

namespace vistanet::autodiff {

// Reverse-mode tape over Tensor values. Graphs are built eagerly per forward
// pass and freed when the last Var handle goes out of scope; parameters are
// long-lived leaf Vars owned by the model.

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;  // allocated on first accumulation
    bool requires_grad = false;
    bool grad_ready = false;
    std::vector<Var> parents;
    // Reads this->grad and accumulates into parents' grads.
    std::function<void(Node&)> backward_fn;

    void accumulate(const Tensor& g);
};

Var leaf(Tensor value, bool requires_grad);
Var constant(Tensor value);

// Lower-bound clamp applied to probabilities inside the loss ops.
inline constexpr double kProbEps = 1e-7;

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var relu(const Var& x);
Var softplus(const Var& x);
Var sigmoid(const Var& x);
Var add(const Var& a, const Var& b);
Var scale(const Var& x, double c);
Var global_avg_pool(const Var& x);               // {C,H,W} -> {C}
Var affine(const Var& x, const Var& w, const Var& b);  // {K,C}*{C}+{K} -> {K}
Var softmax(const Var& x);                       // rank-1
Var upsample2x(const Var& x);
Var concat_channels(const Var& a, const Var& b);
Var reshape(const Var& x, std::vector<int> shape);
Var mul_mask(const Var& x, const Tensor& mask);  // {C,h,w} scaled per-pixel by {h,w}

// -log of the (clamped) probability at true_index; probs is rank-1.
Var nll_from_probs(const Var& probs, int true_index);
// Mean per-pixel binary cross-entropy between pred {H,W} in [0,1] and a
// binary target of the same shape.
Var bce_mean(const Var& pred, const Tensor& target, bool deterministic = true);

// Backpropagate from a scalar root. Parameter grads accumulate across calls
// until cleared by the owner.
void backward(const Var& root);

}  // namespace vistanet::autodiff
