#include "vistanet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "vistanet/kernels.hpp"

namespace vistanet::autodiff {

void Node::accumulate(const Tensor& g) {
    if (!grad_ready) {
        grad = Tensor(value.shape());
        grad_ready = true;
    }
    check(g.same_shape(grad), "autodiff: gradient shape mismatch");
    double* dst = grad.data();
    const double* src = g.data();
    const int64_t n = grad.size();
    for (int64_t i = 0; i < n; ++i) dst[i] += src[i];
}

Var leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

Var constant(Tensor value) { return leaf(std::move(value), false); }

namespace {

Var make_op(Tensor value, std::vector<Var> parents,
            std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    n->requires_grad =
        std::any_of(n->parents.begin(), n->parents.end(),
                    [](const Var& p) { return p->requires_grad; });
    if (n->requires_grad) n->backward_fn = std::move(backward_fn);
    return n;
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    Tensor y = kernels::conv2d_forward(x->value, w->value, b->value, stride, pad);
    Var xp = x, wp = w, bp = b;
    return make_op(std::move(y), {x, w, b}, [xp, wp, bp, stride, pad](Node& n) {
        if (xp->requires_grad) {
            xp->accumulate(kernels::conv2d_backward_input(
                n.grad, wp->value, xp->value.dim(1), xp->value.dim(2), stride, pad));
        }
        if (wp->requires_grad) {
            wp->accumulate(kernels::conv2d_backward_weight(
                n.grad, xp->value, wp->value.dim(2), wp->value.dim(3), stride, pad));
        }
        if (bp->requires_grad) {
            bp->accumulate(kernels::conv2d_backward_bias(n.grad));
        }
    });
}

Var relu(const Var& x) {
    Tensor y(x->value.shape());
    const int64_t n = y.size();
    for (int64_t i = 0; i < n; ++i) y[i] = x->value[i] > 0.0 ? x->value[i] : 0.0;
    Var xp = x;
    return make_op(std::move(y), {x}, [xp](Node& n) {
        Tensor g(xp->value.shape());
        for (int64_t i = 0; i < g.size(); ++i)
            g[i] = xp->value[i] > 0.0 ? n.grad[i] : 0.0;
        xp->accumulate(g);
    });
}

Var softplus(const Var& x) {
    Tensor y(x->value.shape());
    const int64_t n = y.size();
    for (int64_t i = 0; i < n; ++i) {
        const double v = x->value[i];
        // overflow-safe: softplus(v) = max(v,0) + log1p(exp(-|v|))
        y[i] = std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
    }
    Var xp = x;
    return make_op(std::move(y), {x}, [xp](Node& n) {
        Tensor g(xp->value.shape());
        for (int64_t i = 0; i < g.size(); ++i) {
            const double s = 1.0 / (1.0 + std::exp(-xp->value[i]));
            g[i] = n.grad[i] * s;
        }
        xp->accumulate(g);
    });
}

Var sigmoid(const Var& x) {
    Tensor y(x->value.shape());
    const int64_t n = y.size();
    for (int64_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x->value[i]));
    Var xp = x;
    return make_op(std::move(y), {x}, [xp](Node& n) {
        Tensor g(xp->value.shape());
        for (int64_t i = 0; i < g.size(); ++i) {
            const double s = 1.0 / (1.0 + std::exp(-xp->value[i]));
            g[i] = n.grad[i] * s * (1.0 - s);
        }
        xp->accumulate(g);
    });
}

Var add(const Var& a, const Var& b) {
    check(a->value.same_shape(b->value), "add: shape mismatch");
    Tensor y(a->value.shape());
    for (int64_t i = 0; i < y.size(); ++i) y[i] = a->value[i] + b->value[i];
    Var ap = a, bp = b;
    return make_op(std::move(y), {a, b}, [ap, bp](Node& n) {
        if (ap->requires_grad) ap->accumulate(n.grad);
        if (bp->requires_grad) bp->accumulate(n.grad);
    });
}

Var scale(const Var& x, double c) {
    Tensor y(x->value.shape());
    for (int64_t i = 0; i < y.size(); ++i) y[i] = x->value[i] * c;
    Var xp = x;
    return make_op(std::move(y), {x}, [xp, c](Node& n) {
        Tensor g(xp->value.shape());
        for (int64_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] * c;
        xp->accumulate(g);
    });
}

Var global_avg_pool(const Var& x) {
    check(x->value.rank() == 3, "global_avg_pool: input must be {C,H,W}");
    const int c_n = x->value.dim(0);
    const int64_t plane = static_cast<int64_t>(x->value.dim(1)) * x->value.dim(2);
    Tensor y({c_n});
    for (int c = 0; c < c_n; ++c) {
        const double* p = x->value.data() + c * plane;
        double acc = 0.0;
        for (int64_t i = 0; i < plane; ++i) acc += p[i];
        y[c] = acc / static_cast<double>(plane);
    }
    Var xp = x;
    return make_op(std::move(y), {x}, [xp, plane](Node& n) {
        Tensor g(xp->value.shape());
        const double inv = 1.0 / static_cast<double>(plane);
        for (int c = 0; c < xp->value.dim(0); ++c) {
            const double gc = n.grad[c] * inv;
            double* gp = g.data() + c * plane;
            for (int64_t i = 0; i < plane; ++i) gp[i] = gc;
        }
        xp->accumulate(g);
    });
}

Var affine(const Var& x, const Var& w, const Var& b) {
    check(x->value.rank() == 1 && w->value.rank() == 2 && b->value.rank() == 1,
          "affine: bad ranks");
    const int k_n = w->value.dim(0), c_n = w->value.dim(1);
    check(x->value.dim(0) == c_n && b->value.dim(0) == k_n, "affine: shape mismatch");
    Tensor y({k_n});
    for (int k = 0; k < k_n; ++k) {
        double acc = b->value[k];
        const double* row = w->value.data() + static_cast<size_t>(k) * c_n;
        for (int c = 0; c < c_n; ++c) acc += row[c] * x->value[c];
        y[k] = acc;
    }
    Var xp = x, wp = w, bp = b;
    return make_op(std::move(y), {x, w, b}, [xp, wp, bp, k_n, c_n](Node& n) {
        if (xp->requires_grad) {
            Tensor gx({c_n});
            for (int c = 0; c < c_n; ++c) {
                double acc = 0.0;
                for (int k = 0; k < k_n; ++k)
                    acc += n.grad[k] * wp->value[static_cast<int64_t>(k) * c_n + c];
                gx[c] = acc;
            }
            xp->accumulate(gx);
        }
        if (wp->requires_grad) {
            Tensor gw({k_n, c_n});
            for (int k = 0; k < k_n; ++k)
                for (int c = 0; c < c_n; ++c)
                    gw[static_cast<int64_t>(k) * c_n + c] = n.grad[k] * xp->value[c];
            wp->accumulate(gw);
        }
        if (bp->requires_grad) bp->accumulate(n.grad);
    });
}

Var softmax(const Var& x) {
    check(x->value.rank() == 1, "softmax: input must be rank-1");
    const int n_el = x->value.dim(0);
    double mx = x->value[0];
    for (int i = 1; i < n_el; ++i) mx = std::max(mx, x->value[i]);
    Tensor y({n_el});
    double z = 0.0;
    for (int i = 0; i < n_el; ++i) {
        y[i] = std::exp(x->value[i] - mx);
        z += y[i];
    }
    for (int i = 0; i < n_el; ++i) y[i] /= z;
    Var xp = x;
    return make_op(std::move(y), {x}, [xp, n_el](Node& n) {
        double dot = 0.0;
        for (int i = 0; i < n_el; ++i) dot += n.grad[i] * n.value[i];
        Tensor g({n_el});
        for (int i = 0; i < n_el; ++i) g[i] = n.value[i] * (n.grad[i] - dot);
        xp->accumulate(g);
    });
}

Var upsample2x(const Var& x) {
    Tensor y = kernels::upsample2x_forward(x->value);
    Var xp = x;
    return make_op(std::move(y), {x}, [xp](Node& n) {
        xp->accumulate(kernels::upsample2x_backward(n.grad));
    });
}

Var concat_channels(const Var& a, const Var& b) {
    check(a->value.rank() == 3 && b->value.rank() == 3 &&
              a->value.dim(1) == b->value.dim(1) && a->value.dim(2) == b->value.dim(2),
          "concat_channels: spatial dims must agree");
    const int ca = a->value.dim(0), cb = b->value.dim(0);
    const int h = a->value.dim(1), w = a->value.dim(2);
    Tensor y({ca + cb, h, w});
    std::copy(a->value.data(), a->value.data() + a->value.size(), y.data());
    std::copy(b->value.data(), b->value.data() + b->value.size(),
              y.data() + a->value.size());
    Var ap = a, bp = b;
    return make_op(std::move(y), {a, b}, [ap, bp, ca, cb, h, w](Node& n) {
        if (ap->requires_grad) {
            Tensor g({ca, h, w});
            std::copy(n.grad.data(), n.grad.data() + g.size(), g.data());
            ap->accumulate(g);
        }
        if (bp->requires_grad) {
            Tensor g({cb, h, w});
            std::copy(n.grad.data() + static_cast<int64_t>(ca) * h * w,
                      n.grad.data() + n.grad.size(), g.data());
            bp->accumulate(g);
        }
    });
}

Var reshape(const Var& x, std::vector<int> shape) {
    check(Tensor::count(shape) == x->value.size(), "reshape: element count mismatch");
    Tensor y(shape, std::vector<double>(x->value.data(), x->value.data() + x->value.size()));
    Var xp = x;
    return make_op(std::move(y), {x}, [xp](Node& n) {
        Tensor g(xp->value.shape(),
                 std::vector<double>(n.grad.data(), n.grad.data() + n.grad.size()));
        xp->accumulate(g);
    });
}

Var mul_mask(const Var& x, const Tensor& mask) {
    check(x->value.rank() == 3 && mask.rank() == 2 &&
              x->value.dim(1) == mask.dim(0) && x->value.dim(2) == mask.dim(1),
          "mul_mask: shape mismatch");
    const int c_n = x->value.dim(0);
    const int64_t plane = static_cast<int64_t>(mask.dim(0)) * mask.dim(1);
    Tensor y(x->value.shape());
    for (int c = 0; c < c_n; ++c)
        for (int64_t i = 0; i < plane; ++i)
            y[c * plane + i] = x->value[c * plane + i] * mask[i];
    Var xp = x;
    Tensor m = mask;
    return make_op(std::move(y), {x}, [xp, m, c_n, plane](Node& n) {
        Tensor g(xp->value.shape());
        for (int c = 0; c < c_n; ++c)
            for (int64_t i = 0; i < plane; ++i)
                g[c * plane + i] = n.grad[c * plane + i] * m[i];
        xp->accumulate(g);
    });
}

Var nll_from_probs(const Var& probs, int true_index) {
    check(probs->value.rank() == 1 && true_index >= 0 &&
              true_index < probs->value.dim(0),
          "nll_from_probs: bad index");
    const double p = probs->value[true_index];
    check(std::isfinite(p), "nll_from_probs: non-finite probability");
    const double clamped = std::clamp(p, kProbEps, 1.0 - kProbEps);
    Tensor y = Tensor::scalar(-std::log(clamped));
    Var pp = probs;
    return make_op(std::move(y), {probs}, [pp, true_index](Node& n) {
        Tensor g(pp->value.shape());
        const double p = pp->value[true_index];
        if (p > kProbEps && p < 1.0 - kProbEps)
            g[true_index] = -n.grad[0] / p;
        pp->accumulate(g);
    });
}

Var bce_mean(const Var& pred, const Tensor& target, bool deterministic) {
    check(pred->value.same_shape(target), "bce_mean: shape mismatch");
    const int64_t n_el = pred->value.size();
    check(n_el > 0, "bce_mean: empty input");
    Tensor terms({static_cast<int>(n_el)});
    for (int64_t i = 0; i < n_el; ++i) {
        const double p = std::clamp(pred->value[i], kProbEps, 1.0 - kProbEps);
        const double t = target[i];
        terms[i] = -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
    }
    const double sum = kernels::reduce_sum(terms.data(), n_el, deterministic);
    Tensor y = Tensor::scalar(sum / static_cast<double>(n_el));
    Var pp = pred;
    Tensor tgt = target;
    return make_op(std::move(y), {pred}, [pp, tgt, n_el](Node& n) {
        Tensor g(pp->value.shape());
        const double inv = n.grad[0] / static_cast<double>(n_el);
        for (int64_t i = 0; i < n_el; ++i) {
            const double raw = pp->value[i];
            if (raw <= kProbEps || raw >= 1.0 - kProbEps) continue;
            g[i] = inv * (-tgt[i] / raw + (1.0 - tgt[i]) / (1.0 - raw));
        }
        pp->accumulate(g);
    });
}

void backward(const Var& root) {
    check(root->value.size() == 1, "backward: root must be scalar");
    // iterative post-order DFS
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    Tensor one(root->value.shape());
    one.fill(1.0);
    root->accumulate(one);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad_ready) n->backward_fn(*n);
    }
}

}  // namespace vistanet::autodiff
