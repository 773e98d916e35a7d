#include <doctest.h>

#include "gradcheck.hpp"
#include "hjsc/nn.hpp"

using namespace hjsc;
using namespace hjsc::nn;

namespace {

// Scalar probe loss: weighted sum of the output so d loss/d out is a fixed
// tensor and layer backward() can be exercised exactly.
template <class S>
double probe_loss(const Batch<S>& out, const Batch<S>& weights) {
    return (out.m.array() * weights.m.array()).sum();
}

template <class L>
void check_layer(L& layer, Batch<double> in, Rng rng) {
    Batch<double> out = layer.forward(in);
    Batch<double> weights = out;
    for (std::ptrdiff_t j = 0; j < weights.m.cols(); ++j)
        for (int i = 0; i < weights.m.rows(); ++i) weights.m(i, j) = rng.normal();

    std::vector<ParamTensor<double>*> params;
    layer.collect(params);
    zero_grads(params);
    Batch<double> gin = layer.backward(weights);

    auto loss_fn = [&]() { return probe_loss(layer.forward(in), weights); };

    // parameter gradients
    auto rp = testutil::check_param_gradients<double>(params, loss_fn, rng.stream("coords"), 16, 1e-5);
    CHECK(rp.max_rel_err < 1e-5);

    // input gradients on a sample of coordinates
    Rng coords = rng.stream("in");
    double max_rel = 0.0;
    for (int t = 0; t < 24; ++t) {
        const std::ptrdiff_t idx = std::ptrdiff_t(coords.below(std::uint64_t(in.m.size())));
        const double saved = in.m.data()[idx];
        const double step = 1e-5;
        in.m.data()[idx] = saved + step;
        const double lp = loss_fn();
        in.m.data()[idx] = saved - step;
        const double lm = loss_fn();
        in.m.data()[idx] = saved;
        const double numeric = (lp - lm) / (2.0 * step);
        const double analytic = gin.m.data()[idx];
        const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
        max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
    }
    CHECK(max_rel < 1e-5);
}

}  // namespace

TEST_CASE("conv2d forward matches direct convolution") {
    Rng rng(11);
    Conv2d<double> conv("c", 2, 3, 3, 1, 1, rng.stream("init"));
    Batch<double> in = random_batch<double>(2, 2, 5, 4, rng, -1.0, 1.0);
    Batch<double> out = conv.forward(in);
    REQUIRE(out.c == 3);
    REQUIRE(out.h == 5);
    REQUIRE(out.w == 4);

    std::vector<ParamTensor<double>*> params;
    conv.collect(params);
    const auto& W = params[0]->value;
    const auto& b = params[1]->value;
    // direct dense evaluation at a few positions
    Rng pick(3);
    for (int t = 0; t < 20; ++t) {
        const int i = int(pick.below(2)), co = int(pick.below(3));
        const int y = int(pick.below(5)), x = int(pick.below(4));
        double acc = b(co, 0);
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx)
                for (int ci = 0; ci < 2; ++ci) {
                    const int iy = y + ky - 1, ix = x + kx - 1;
                    if (iy < 0 || iy >= 5 || ix < 0 || ix >= 4) continue;
                    acc += W(co, (ky * 3 + kx) * 2 + ci) * in.at(i, ci, iy, ix);
                }
        CHECK(out.at(i, co, y, x) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("conv2d gradients (stride 1 and 2)") {
    Rng rng(21);
    SUBCASE("stride 1") {
        Conv2d<double> conv("c", 3, 4, 3, 1, 1, rng.stream("i1"));
        check_layer(conv, random_batch<double>(2, 3, 6, 6, rng, -1.0, 1.0), rng.stream("g1"));
    }
    SUBCASE("stride 2") {
        Conv2d<double> conv("c", 3, 5, 3, 2, 1, rng.stream("i2"));
        check_layer(conv, random_batch<double>(2, 3, 8, 8, rng, -1.0, 1.0), rng.stream("g2"));
    }
    SUBCASE("1x1") {
        Conv2d<double> conv("c", 4, 2, 1, 1, 0, rng.stream("i3"));
        check_layer(conv, random_batch<double>(3, 4, 4, 4, rng, -1.0, 1.0), rng.stream("g3"));
    }
}

TEST_CASE("prelu, sigmoid, pixel shuffle, resblock gradients") {
    Rng rng(31);
    SUBCASE("prelu") {
        PReLU<double> act("a", 3);
        check_layer(act, random_batch<double>(2, 3, 4, 4, rng, -1.0, 1.0), rng.stream("g"));
    }
    SUBCASE("sigmoid") {
        Sigmoid<double> act;
        check_layer(act, random_batch<double>(2, 3, 4, 4, rng, -2.0, 2.0), rng.stream("g"));
    }
    SUBCASE("pixel shuffle is an exact permutation") {
        PixelShuffle<double> ps(2);
        Batch<double> in = random_batch<double>(2, 8, 3, 3, rng, -1.0, 1.0);
        Batch<double> out = ps.forward(in);
        REQUIRE(out.c == 2);
        REQUIRE(out.h == 6);
        REQUIRE(out.w == 6);
        CHECK(out.at(1, 0, 3, 5) == in.at(1, 0 * 4 + 1 * 2 + 1, 1, 2));
        Batch<double> back = ps.backward(out);
        CHECK((back.m - in.m).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("resblock") {
        ResBlock<double> rb("r", 3, rng.stream("i"));
        check_layer(rb, random_batch<double>(2, 3, 4, 4, rng, -1.0, 1.0), rng.stream("g"));
    }
    SUBCASE("power normalize") {
        PowerNormalize<double> pn;
        Batch<double> in = random_batch<double>(2, 4, 4, 4, rng, -1.0, 1.0);
        Batch<double> out = pn.forward(in);
        for (int i = 0; i < 2; ++i)
            CHECK(out.image(i).squaredNorm() == doctest::Approx(4 * 4 * 4 / 2.0).epsilon(1e-12));
        check_layer(pn, in, rng.stream("g"));
    }
}

TEST_CASE("adam reduces a quadratic") {
    ParamTensor<double> p;
    p.name = "x";
    p.value = MatrixX<double>::Constant(4, 1, 5.0);
    p.zero_grad();
    Adam<double> opt({&p}, 0.1);
    for (int it = 0; it < 400; ++it) {
        p.grad = 2.0 * p.value;  // d/dx of sum x^2
        opt.step();
        p.zero_grad();
    }
    CHECK(p.value.cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("sequential composes and collects") {
    Rng rng(41);
    Sequential<double> seq;
    seq.add<Conv2d<double>>("c1", 2, 4, 3, 2, 1, rng.stream("c1"));
    seq.add<PReLU<double>>("a", 4);
    seq.add<Conv2d<double>>("c2", 4, 2, 3, 1, 1, rng.stream("c2"));
    Batch<double> in = random_batch<double>(2, 2, 8, 8, rng, -1.0, 1.0);
    Batch<double> out = seq.forward(in);
    REQUIRE(out.c == 2);
    REQUIRE(out.h == 4);
    std::vector<ParamTensor<double>*> params;
    seq.collect(params);
    CHECK(params.size() == 5);
    check_layer(seq, in, rng.stream("g"));
}
