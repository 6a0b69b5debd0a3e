#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <jpeglib.h>

#include <cmath>
#include <functional>

#include "vistanet/autodiff.hpp"
#include "vistanet/image_io.hpp"
#include "vistanet/kernels.hpp"
#include "vistanet/rng.hpp"
#include "testutil.hpp"

using namespace vistanet;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) return false;
    for (int64_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

}  // namespace

TEST_CASE("rng: seeded streams reproduce exactly") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c(42), d(43);
    bool all_same = true;
    for (int i = 0; i < 20; ++i) all_same &= (c.next_u64() == d.next_u64());
    CHECK_FALSE(all_same);
}

TEST_CASE("rng: named substreams are independent and stable") {
    Rng base(42);
    Rng s1 = base.substream("shuffle/1");
    Rng s2 = base.substream("shuffle/2");
    CHECK(s1.next_u64() != s2.next_u64());

    // substreams do not depend on parent state consumption
    Rng base2(42);
    base2.next_u64();
    CHECK(Rng(42).substream("x").next_u64() == base2.substream("x").next_u64());
}

TEST_CASE("rng: global seed drives named streams") {
    set_seed(42);
    const uint64_t v42 = named_stream("init/member0").next_u64();
    set_seed(43);
    const uint64_t v43 = named_stream("init/member0").next_u64();
    set_seed(42);
    CHECK(named_stream("init/member0").next_u64() == v42);
    CHECK(v42 != v43);
}

TEST_CASE("rng: uniform_int covers range and shuffle permutes") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const int64_t v = rng.uniform_int(-3, 5);
        CHECK(v >= -3);
        CHECK(v <= 5);
    }
    std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
    auto sorted = v;
    rng.shuffle(v);
    auto resorted = v;
    std::sort(resorted.begin(), resorted.end());
    CHECK(resorted == sorted);
}

TEST_CASE("kernels: openmp conv matches serial reference bit-for-bit") {
    Rng rng(11);
    for (int trial = 0; trial < 12; ++trial) {
        const int ic = static_cast<int>(rng.uniform_int(1, 5));
        const int oc = static_cast<int>(rng.uniform_int(1, 6));
        const int h = static_cast<int>(rng.uniform_int(5, 17));
        const int w = static_cast<int>(rng.uniform_int(5, 17));
        const int k = rng.uniform() < 0.3 ? 1 : 3;
        const int stride = static_cast<int>(rng.uniform_int(1, 2));
        const int pad = k == 3 ? 1 : 0;

        Tensor x = random_tensor({ic, h, w}, rng);
        Tensor wgt = random_tensor({oc, ic, k, k}, rng);
        Tensor b = random_tensor({oc}, rng);

        Tensor y_par = kernels::conv2d_forward(x, wgt, b, stride, pad);
        Tensor y_ser = kernels::serial::conv2d_forward(x, wgt, b, stride, pad);
        CHECK(bit_equal(y_par, y_ser));

        Tensor gy = random_tensor(y_par.shape(), rng);
        CHECK(bit_equal(kernels::conv2d_backward_input(gy, wgt, h, w, stride, pad),
                        kernels::serial::conv2d_backward_input(gy, wgt, h, w, stride, pad)));
        CHECK(bit_equal(kernels::conv2d_backward_weight(gy, x, k, k, stride, pad),
                        kernels::serial::conv2d_backward_weight(gy, x, k, k, stride, pad)));
    }
}

TEST_CASE("kernels: block_mean matches serial reference bit-for-bit") {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const int oh = static_cast<int>(rng.uniform_int(1, 6));
        const int ow = static_cast<int>(rng.uniform_int(1, 6));
        const int bh = static_cast<int>(rng.uniform_int(1, 5));
        const int bw = static_cast<int>(rng.uniform_int(1, 5));
        Tensor m = random_tensor({oh * bh, ow * bw}, rng, 0.0, 1.0);
        CHECK(bit_equal(kernels::block_mean(m, oh, ow),
                        kernels::serial::block_mean(m, oh, ow)));
    }
}

TEST_CASE("kernels: upsample2x backward is the adjoint of forward") {
    Rng rng(17);
    Tensor x = random_tensor({3, 5, 4}, rng);
    Tensor y = random_tensor({3, 10, 8}, rng);
    const Tensor up = kernels::upsample2x_forward(x);
    const Tensor down = kernels::upsample2x_backward(y);
    double lhs = 0.0, rhs = 0.0;
    for (int64_t i = 0; i < up.size(); ++i) lhs += up[i] * y[i];
    for (int64_t i = 0; i < x.size(); ++i) rhs += x[i] * down[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("kernels: reduce_sum fast mode agrees with deterministic mode") {
    Rng rng(19);
    std::vector<double> v(10000);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    const double det = kernels::reduce_sum(v.data(), static_cast<int64_t>(v.size()), true);
    const double fast = kernels::reduce_sum(v.data(), static_cast<int64_t>(v.size()), false);
    CHECK(det == doctest::Approx(fast).epsilon(1e-12));
}

namespace {

// central finite differences through a scalar-valued graph of one leaf
void fd_check(const std::function<autodiff::Var(const autodiff::Var&)>& fn,
              Tensor input, double tol = 1e-6) {
    using namespace autodiff;
    Var x = leaf(input, true);
    Var y = fn(x);
    REQUIRE(y->value.size() == 1);
    backward(y);
    REQUIRE(x->grad_ready);

    const double h = 1e-5;
    const int64_t step = std::max<int64_t>(1, input.size() / 7);
    for (int64_t i = 0; i < input.size(); i += step) {
        Tensor plus = input, minus = input;
        plus[i] += h;
        minus[i] -= h;
        const double fp = fn(leaf(plus, false))->value[0];
        const double fm = fn(leaf(minus, false))->value[0];
        const double numeric = (fp - fm) / (2 * h);
        CHECK(x->grad[i] == doctest::Approx(numeric).epsilon(tol));
    }
}

// scalar readout used by the op-level checks
autodiff::Var bce_readout(const autodiff::Var& v) {
    Tensor target(std::vector<int>{static_cast<int>(v->value.size())});
    target.fill(0.25);
    auto flat = autodiff::reshape(v, {static_cast<int>(v->value.size())});
    return autodiff::bce_mean(autodiff::sigmoid(flat), target);
}

}  // namespace

TEST_CASE("autodiff: per-op gradients match finite differences") {
    Rng rng(23);

    SUBCASE("conv2d chain") {
        Tensor x = random_tensor({2, 6, 6}, rng, -0.5, 0.5);
        Tensor w = random_tensor({3, 2, 3, 3}, rng, -0.5, 0.5);
        Tensor b = random_tensor({3}, rng, -0.2, 0.2);
        fd_check(
            [&](const autodiff::Var& v) {
                return bce_readout(autodiff::conv2d(v, autodiff::constant(w),
                                                    autodiff::constant(b), 1, 1));
            },
            x, 1e-5);
    }

    SUBCASE("softplus / gap / affine / softmax / nll chain") {
        Tensor x = random_tensor({3, 4, 4}, rng, -1.0, 1.0);
        Tensor w = random_tensor({2, 3}, rng, -0.8, 0.8);
        Tensor b = random_tensor({2}, rng, -0.2, 0.2);
        fd_check(
            [&](const autodiff::Var& v) {
                auto probs = autodiff::softmax(autodiff::affine(
                    autodiff::global_avg_pool(autodiff::softplus(v)),
                    autodiff::constant(w), autodiff::constant(b)));
                return autodiff::nll_from_probs(probs, 1);
            },
            x, 1e-5);
    }

    SUBCASE("upsample / concat / mul_mask chain") {
        Tensor x = random_tensor({2, 3, 3}, rng);
        Tensor mask = random_tensor({6, 6}, rng, 0.0, 1.0);
        fd_check(
            [&](const autodiff::Var& v) {
                auto up = autodiff::upsample2x(v);
                auto cat = autodiff::concat_channels(up, up);
                return bce_readout(autodiff::mul_mask(cat, mask));
            },
            x, 1e-5);
    }

    SUBCASE("conv weight and bias gradients") {
        Tensor x = random_tensor({2, 5, 5}, rng, -0.5, 0.5);
        Tensor w = random_tensor({2, 2, 3, 3}, rng, -0.5, 0.5);
        Tensor b = random_tensor({2}, rng, -0.2, 0.2);
        fd_check(
            [&](const autodiff::Var& v) {
                return bce_readout(autodiff::conv2d(autodiff::constant(x), v,
                                                    autodiff::constant(b), 2, 1));
            },
            w, 1e-5);
        fd_check(
            [&](const autodiff::Var& v) {
                return bce_readout(autodiff::conv2d(autodiff::constant(x),
                                                    autodiff::constant(w), v, 2, 1));
            },
            b, 1e-5);
    }
}

TEST_CASE("autodiff: gradients accumulate across shared subgraphs") {
    using namespace autodiff;
    // y = relu(x) used twice: grad should be the sum of both paths
    Tensor xv(std::vector<int>{3});
    xv[0] = 1.0;
    xv[1] = 2.0;
    xv[2] = 3.0;
    Var x = leaf(xv, true);
    Var r = relu(x);
    Var doubled = add(r, r);
    Tensor target(std::vector<int>{3});
    target.fill(1.0);
    Var loss = bce_mean(sigmoid(doubled), target);
    backward(loss);
    REQUIRE(x->grad_ready);
    // numeric check on one coordinate
    const double h = 1e-6;
    Tensor plus = xv;
    plus[1] += h;
    Tensor minus = xv;
    minus[1] -= h;
    auto eval = [&](const Tensor& t) {
        Var xx = leaf(t, false);
        return bce_mean(sigmoid(add(relu(xx), relu(xx))), target)->value[0];
    };
    CHECK(x->grad[1] == doctest::Approx((eval(plus) - eval(minus)) / (2 * h)).epsilon(1e-5));
}

TEST_CASE("image io: rgb and gray png round-trips are exact") {
    testutil::TempDir tmp("png");
    Rng rng(29);

    RawImage img;
    img.width = 21;
    img.height = 13;
    img.channels = 3;
    img.pixels.resize(21 * 13 * 3);
    for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.uniform_int(0, 255));

    const std::string path = (tmp.path() / "t.png").string();
    write_png(path, img);
    RawImage back = read_image(path);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.pixels == img.pixels);

    RawImage gray;
    gray.width = 9;
    gray.height = 7;
    gray.channels = 1;
    gray.pixels.resize(63);
    for (auto& p : gray.pixels) p = static_cast<uint8_t>(rng.uniform_int(0, 255));
    const std::string gpath = (tmp.path() / "g.png").string();
    write_png(gpath, gray);
    RawImage gback = read_image(gpath, /*force_gray=*/true);
    CHECK(gback.pixels == gray.pixels);
}

TEST_CASE("image io: jpeg files decode") {
    testutil::TempDir tmp("jpeg");
    const int w = 32, h = 24;
    std::vector<uint8_t> rgb(static_cast<size_t>(w) * h * 3);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            rgb[(static_cast<size_t>(r) * w + c) * 3 + 0] = static_cast<uint8_t>(c * 8);
            rgb[(static_cast<size_t>(r) * w + c) * 3 + 1] = static_cast<uint8_t>(r * 10);
            rgb[(static_cast<size_t>(r) * w + c) * 3 + 2] = 128;
        }

    const std::string path = (tmp.path() / "t.jpg").string();
    {
        jpeg_compress_struct cinfo;
        jpeg_error_mgr jerr;
        cinfo.err = jpeg_std_error(&jerr);
        jpeg_create_compress(&cinfo);
        FILE* fp = fopen(path.c_str(), "wb");
        REQUIRE(fp != nullptr);
        jpeg_stdio_dest(&cinfo, fp);
        cinfo.image_width = w;
        cinfo.image_height = h;
        cinfo.input_components = 3;
        cinfo.in_color_space = JCS_RGB;
        jpeg_set_defaults(&cinfo);
        jpeg_set_quality(&cinfo, 95, TRUE);
        jpeg_start_compress(&cinfo, TRUE);
        while (cinfo.next_scanline < cinfo.image_height) {
            JSAMPROW row = rgb.data() + static_cast<size_t>(cinfo.next_scanline) * w * 3;
            jpeg_write_scanlines(&cinfo, &row, 1);
        }
        jpeg_finish_compress(&cinfo);
        jpeg_destroy_compress(&cinfo);
        fclose(fp);
    }

    RawImage back = read_image(path);
    CHECK(back.width == w);
    CHECK(back.height == h);
    CHECK(back.channels == 3);
    double err = 0.0;
    for (size_t i = 0; i < rgb.size(); ++i)
        err += std::abs(static_cast<double>(back.pixels[i]) - rgb[i]);
    CHECK(err / static_cast<double>(rgb.size()) < 8.0);  // lossy but close
}

TEST_CASE("image io: unreadable files raise") {
    testutil::TempDir tmp("bad");
    const std::string path = (tmp.path() / "junk.png").string();
    std::ofstream(path) << "this is not an image";
    CHECK_THROWS_AS(read_image(path), Error);
    CHECK_THROWS_AS(read_image((tmp.path() / "absent.png").string()), Error);
}
