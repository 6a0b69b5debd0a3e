#include "vistanet/kernels.hpp"

namespace vistanet::kernels {

int conv_out_dim(int in, int k, int stride, int pad) {
    int span = in + 2 * pad - k;
    check(span >= 0, "conv: kernel larger than padded input");
    return span / stride + 1;
}

namespace {

void check_conv_args(const Tensor& x, const Tensor& w, int stride, int pad) {
    check(x.rank() == 3, "conv: input must be {C,H,W}");
    check(w.rank() == 4, "conv: weight must be {OC,IC,KH,KW}");
    check(w.dim(1) == x.dim(0), "conv: input channel mismatch");
    check(stride >= 1 && pad >= 0, "conv: bad stride/pad");
}

// One output position, serial inner reduction. Shared by the parallel and
// reference paths so both produce identical floating-point results.
inline double conv_dot(const double* x, const double* w, int ic_n, int in_h,
                       int in_w, int kh_n, int kw_n, int oh, int ow,
                       int stride, int pad) {
    double acc = 0.0;
    const int ih0 = oh * stride - pad;
    const int iw0 = ow * stride - pad;
    for (int ic = 0; ic < ic_n; ++ic) {
        const double* xc = x + static_cast<size_t>(ic) * in_h * in_w;
        const double* wc = w + static_cast<size_t>(ic) * kh_n * kw_n;
        for (int kh = 0; kh < kh_n; ++kh) {
            const int ih = ih0 + kh;
            if (ih < 0 || ih >= in_h) continue;
            const double* xrow = xc + static_cast<size_t>(ih) * in_w;
            const double* wrow = wc + static_cast<size_t>(kh) * kw_n;
            for (int kw = 0; kw < kw_n; ++kw) {
                const int iw = iw0 + kw;
                if (iw < 0 || iw >= in_w) continue;
                acc += xrow[iw] * wrow[kw];
            }
        }
    }
    return acc;
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                      int stride, int pad) {
    check_conv_args(x, w, stride, pad);
    const int ic_n = x.dim(0), in_h = x.dim(1), in_w = x.dim(2);
    const int oc_n = w.dim(0), kh_n = w.dim(2), kw_n = w.dim(3);
    check(b.rank() == 1 && b.dim(0) == oc_n, "conv: bias shape mismatch");
    const int oh_n = conv_out_dim(in_h, kh_n, stride, pad);
    const int ow_n = conv_out_dim(in_w, kw_n, stride, pad);

    Tensor y({oc_n, oh_n, ow_n});
    const int64_t work = static_cast<int64_t>(oc_n) * oh_n * ow_n * ic_n * kh_n * kw_n;

#pragma omp parallel for collapse(2) schedule(static) if (work > 16384)
    for (int oc = 0; oc < oc_n; ++oc) {
        for (int oh = 0; oh < oh_n; ++oh) {
            const double* wk = w.data() + static_cast<size_t>(oc) * ic_n * kh_n * kw_n;
            double* yrow = y.data() + (static_cast<size_t>(oc) * oh_n + oh) * ow_n;
            for (int ow = 0; ow < ow_n; ++ow) {
                yrow[ow] = b[oc] + conv_dot(x.data(), wk, ic_n, in_h, in_w,
                                            kh_n, kw_n, oh, ow, stride, pad);
            }
        }
    }
    return y;
}

Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w,
                             int in_h, int in_w, int stride, int pad) {
    const int oc_n = w.dim(0), ic_n = w.dim(1), kh_n = w.dim(2), kw_n = w.dim(3);
    const int oh_n = gy.dim(1), ow_n = gy.dim(2);
    check(gy.dim(0) == oc_n, "conv backward: channel mismatch");

    Tensor gx({ic_n, in_h, in_w});
    const int64_t work = static_cast<int64_t>(ic_n) * in_h * in_w * oc_n * kh_n * kw_n;

#pragma omp parallel for collapse(2) schedule(static) if (work > 16384)
    for (int ic = 0; ic < ic_n; ++ic) {
        for (int ih = 0; ih < in_h; ++ih) {
            double* gxrow = gx.data() + (static_cast<size_t>(ic) * in_h + ih) * in_w;
            for (int iw = 0; iw < in_w; ++iw) {
                double acc = 0.0;
                for (int oc = 0; oc < oc_n; ++oc) {
                    const double* gyc = gy.data() + static_cast<size_t>(oc) * oh_n * ow_n;
                    const double* wc =
                        w.data() + (static_cast<size_t>(oc) * ic_n + ic) * kh_n * kw_n;
                    for (int kh = 0; kh < kh_n; ++kh) {
                        const int num_h = ih + pad - kh;
                        if (num_h < 0 || num_h % stride != 0) continue;
                        const int oh = num_h / stride;
                        if (oh >= oh_n) continue;
                        for (int kw = 0; kw < kw_n; ++kw) {
                            const int num_w = iw + pad - kw;
                            if (num_w < 0 || num_w % stride != 0) continue;
                            const int ow = num_w / stride;
                            if (ow >= ow_n) continue;
                            acc += gyc[static_cast<size_t>(oh) * ow_n + ow] *
                                   wc[static_cast<size_t>(kh) * kw_n + kw];
                        }
                    }
                }
                gxrow[iw] = acc;
            }
        }
    }
    return gx;
}

Tensor conv2d_backward_weight(const Tensor& gy, const Tensor& x,
                              int kh, int kw, int stride, int pad) {
    const int oc_n = gy.dim(0), oh_n = gy.dim(1), ow_n = gy.dim(2);
    const int ic_n = x.dim(0), in_h = x.dim(1), in_w = x.dim(2);

    Tensor gw({oc_n, ic_n, kh, kw});
    const int64_t work = static_cast<int64_t>(oc_n) * ic_n * kh * kw * oh_n * ow_n;

#pragma omp parallel for collapse(2) schedule(static) if (work > 16384)
    for (int oc = 0; oc < oc_n; ++oc) {
        for (int ic = 0; ic < ic_n; ++ic) {
            const double* gyc = gy.data() + static_cast<size_t>(oc) * oh_n * ow_n;
            const double* xc = x.data() + static_cast<size_t>(ic) * in_h * in_w;
            double* gwc = gw.data() + (static_cast<size_t>(oc) * ic_n + ic) * kh * kw;
            for (int r = 0; r < kh; ++r) {
                for (int c = 0; c < kw; ++c) {
                    double acc = 0.0;
                    for (int oh = 0; oh < oh_n; ++oh) {
                        const int ih = oh * stride - pad + r;
                        if (ih < 0 || ih >= in_h) continue;
                        for (int ow = 0; ow < ow_n; ++ow) {
                            const int iw = ow * stride - pad + c;
                            if (iw < 0 || iw >= in_w) continue;
                            acc += gyc[static_cast<size_t>(oh) * ow_n + ow] *
                                   xc[static_cast<size_t>(ih) * in_w + iw];
                        }
                    }
                    gwc[static_cast<size_t>(r) * kw + c] = acc;
                }
            }
        }
    }
    return gw;
}

Tensor conv2d_backward_bias(const Tensor& gy) {
    const int oc_n = gy.dim(0);
    const int64_t plane = static_cast<int64_t>(gy.dim(1)) * gy.dim(2);
    Tensor gb({oc_n});
#pragma omp parallel for schedule(static) if (oc_n * plane > 16384)
    for (int oc = 0; oc < oc_n; ++oc) {
        const double* p = gy.data() + oc * plane;
        double acc = 0.0;
        for (int64_t i = 0; i < plane; ++i) acc += p[i];
        gb[oc] = acc;
    }
    return gb;
}

Tensor block_mean(const Tensor& m, int out_h, int out_w) {
    check(m.rank() == 2, "block_mean: input must be {H,W}");
    const int in_h = m.dim(0), in_w = m.dim(1);
    check(out_h > 0 && out_w > 0 && in_h % out_h == 0 && in_w % out_w == 0,
          "block_mean: dims must be integer multiples of the target");
    const int bh = in_h / out_h, bw = in_w / out_w;
    const double inv_area = 1.0 / (static_cast<double>(bh) * bw);

    Tensor out({out_h, out_w});
#pragma omp parallel for collapse(2) schedule(static) if (in_h * in_w > 16384)
    for (int i = 0; i < out_h; ++i) {
        for (int j = 0; j < out_w; ++j) {
            double acc = 0.0;
            for (int r = i * bh; r < (i + 1) * bh; ++r) {
                const double* row = m.data() + static_cast<size_t>(r) * in_w;
                for (int c = j * bw; c < (j + 1) * bw; ++c) acc += row[c];
            }
            out.at(i, j) = acc * inv_area;
        }
    }
    return out;
}

Tensor upsample2x_forward(const Tensor& x) {
    check(x.rank() == 3, "upsample2x: input must be {C,H,W}");
    const int c_n = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor y({c_n, 2 * h, 2 * w});
#pragma omp parallel for collapse(2) schedule(static) if (x.size() > 8192)
    for (int c = 0; c < c_n; ++c) {
        for (int i = 0; i < 2 * h; ++i) {
            const double* xrow = x.data() + (static_cast<size_t>(c) * h + i / 2) * w;
            double* yrow = y.data() + (static_cast<size_t>(c) * 2 * h + i) * 2 * w;
            for (int j = 0; j < 2 * w; ++j) yrow[j] = xrow[j / 2];
        }
    }
    return y;
}

Tensor upsample2x_backward(const Tensor& gy) {
    check(gy.rank() == 3 && gy.dim(1) % 2 == 0 && gy.dim(2) % 2 == 0,
          "upsample2x_backward: bad shape");
    const int c_n = gy.dim(0), h = gy.dim(1) / 2, w = gy.dim(2) / 2;
    Tensor gx({c_n, h, w});
#pragma omp parallel for collapse(2) schedule(static) if (gy.size() > 8192)
    for (int c = 0; c < c_n; ++c) {
        for (int i = 0; i < h; ++i) {
            double* gxrow = gx.data() + (static_cast<size_t>(c) * h + i) * w;
            for (int j = 0; j < w; ++j) {
                const double* g0 =
                    gy.data() + (static_cast<size_t>(c) * 2 * h + 2 * i) * 2 * w + 2 * j;
                const double* g1 = g0 + 2 * static_cast<size_t>(w);
                gxrow[j] = g0[0] + g0[1] + g1[0] + g1[1];
            }
        }
    }
    return gx;
}

double reduce_sum(const double* v, int64_t n, bool deterministic) {
    if (deterministic || n < 4096) {
        double acc = 0.0;
        for (int64_t i = 0; i < n; ++i) acc += v[i];
        return acc;
    }
    double acc = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : acc)
    for (int64_t i = 0; i < n; ++i) acc += v[i];
    return acc;
}

namespace serial {

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                      int stride, int pad) {
    check_conv_args(x, w, stride, pad);
    const int ic_n = x.dim(0), in_h = x.dim(1), in_w = x.dim(2);
    const int oc_n = w.dim(0), kh_n = w.dim(2), kw_n = w.dim(3);
    const int oh_n = conv_out_dim(in_h, kh_n, stride, pad);
    const int ow_n = conv_out_dim(in_w, kw_n, stride, pad);
    Tensor y({oc_n, oh_n, ow_n});
    for (int oc = 0; oc < oc_n; ++oc)
        for (int oh = 0; oh < oh_n; ++oh)
            for (int ow = 0; ow < ow_n; ++ow)
                y.at(oc, oh, ow) =
                    b[oc] + conv_dot(x.data(),
                                     w.data() + static_cast<size_t>(oc) * ic_n * kh_n * kw_n,
                                     ic_n, in_h, in_w, kh_n, kw_n, oh, ow, stride, pad);
    return y;
}

Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w,
                             int in_h, int in_w, int stride, int pad) {
    const int oc_n = w.dim(0), ic_n = w.dim(1), kh_n = w.dim(2), kw_n = w.dim(3);
    const int oh_n = gy.dim(1), ow_n = gy.dim(2);
    Tensor gx({ic_n, in_h, in_w});
    for (int ic = 0; ic < ic_n; ++ic)
        for (int ih = 0; ih < in_h; ++ih)
            for (int iw = 0; iw < in_w; ++iw) {
                double acc = 0.0;
                for (int oc = 0; oc < oc_n; ++oc)
                    for (int kh = 0; kh < kh_n; ++kh)
                        for (int kw = 0; kw < kw_n; ++kw) {
                            const int nh = ih + pad - kh, nw = iw + pad - kw;
                            if (nh < 0 || nw < 0 || nh % stride || nw % stride) continue;
                            const int oh = nh / stride, ow = nw / stride;
                            if (oh >= oh_n || ow >= ow_n) continue;
                            acc += gy.at(oc, oh, ow) * w[((static_cast<int64_t>(oc) * ic_n + ic) * kh_n + kh) * kw_n + kw];
                        }
                gx.at(ic, ih, iw) = acc;
            }
    return gx;
}

Tensor conv2d_backward_weight(const Tensor& gy, const Tensor& x,
                              int kh, int kw, int stride, int pad) {
    const int oc_n = gy.dim(0), oh_n = gy.dim(1), ow_n = gy.dim(2);
    const int ic_n = x.dim(0), in_h = x.dim(1), in_w = x.dim(2);
    Tensor gw({oc_n, ic_n, kh, kw});
    for (int oc = 0; oc < oc_n; ++oc)
        for (int ic = 0; ic < ic_n; ++ic)
            for (int r = 0; r < kh; ++r)
                for (int c = 0; c < kw; ++c) {
                    double acc = 0.0;
                    for (int oh = 0; oh < oh_n; ++oh)
                        for (int ow = 0; ow < ow_n; ++ow) {
                            const int ih = oh * stride - pad + r;
                            const int iw = ow * stride - pad + c;
                            if (ih < 0 || ih >= in_h || iw < 0 || iw >= in_w) continue;
                            acc += gy.at(oc, oh, ow) * x.at(ic, ih, iw);
                        }
                    gw[((static_cast<int64_t>(oc) * ic_n + ic) * kh + r) * kw + c] = acc;
                }
    return gw;
}

Tensor block_mean(const Tensor& m, int out_h, int out_w) {
    const int in_h = m.dim(0), in_w = m.dim(1);
    check(in_h % out_h == 0 && in_w % out_w == 0,
          "block_mean: dims must be integer multiples of the target");
    const int bh = in_h / out_h, bw = in_w / out_w;
    const double inv_area = 1.0 / (static_cast<double>(bh) * bw);
    Tensor out({out_h, out_w});
    for (int i = 0; i < out_h; ++i)
        for (int j = 0; j < out_w; ++j) {
            double acc = 0.0;
            for (int r = i * bh; r < (i + 1) * bh; ++r)
                for (int c = j * bw; c < (j + 1) * bw; ++c) acc += m.at(r, c);
            out.at(i, j) = acc * inv_area;
        }
    return out;
}

}  // namespace serial

}  // namespace vistanet::kernels
