#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "hjsc/rng.hpp"
#include "hjsc/tensor.hpp"

namespace hjsc::nn {

template <class S>
struct ParamTensor {
    std::string name;
    MatrixX<S> value;
    MatrixX<S> grad;

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

template <class S>
class Layer {
  public:
    virtual ~Layer() = default;
    virtual Batch<S> forward(const Batch<S>& in) = 0;
    virtual Batch<S> backward(const Batch<S>& grad_out) = 0;
    virtual void collect(std::vector<ParamTensor<S>*>& out) {}
};

// 2-D convolution, zero padding, lowered to GEMM over im2col patches.
// Patch row layout: (ky*k + kx)*cin + ci, so each (ky,kx) tap is a contiguous
// channel slab and weight storage is W(co, (ky*k+kx)*cin + ci).
template <class S>
class Conv2d : public Layer<S> {
  public:
    Conv2d(std::string name, int cin, int cout, int ksize, int stride, int pad, Rng init)
        : cin_(cin), cout_(cout), k_(ksize), stride_(stride), pad_(pad) {
        weight_.name = name + ".w";
        bias_.name = name + ".b";
        const int fan_in = cin * ksize * ksize;
        const double std = std::sqrt(2.0 / double(fan_in));
        weight_.value.resize(cout, fan_in);
        for (std::ptrdiff_t j = 0; j < weight_.value.cols(); ++j)
            for (int i = 0; i < cout; ++i) weight_.value(i, j) = S(init.normal() * std);
        bias_.value = MatrixX<S>::Zero(cout, 1);
        weight_.zero_grad();
        bias_.zero_grad();
    }

    int out_dim(int d) const { return (d + 2 * pad_ - k_) / stride_ + 1; }

    Batch<S> forward(const Batch<S>& in) override {
        require(in.c == cin_, "Conv2d: input channel mismatch");
        in_ = in;
        const int oh = out_dim(in.h), ow = out_dim(in.w);
        Batch<S> out(in.n, cout_, oh, ow);
        const std::ptrdiff_t chunk = chunk_images(in);
        MatrixX<S> patches;
        for (int i0 = 0; i0 < in.n; i0 += int(chunk)) {
            const int ni = std::min<int>(int(chunk), in.n - i0);
            im2col(in, i0, ni, patches);
            out.m.middleCols(std::ptrdiff_t(i0) * oh * ow, std::ptrdiff_t(ni) * oh * ow).noalias() =
                weight_.value * patches;
        }
        out.m.colwise() += bias_.value.col(0);
        return out;
    }

    Batch<S> backward(const Batch<S>& grad_out) override {
        const int oh = out_dim(in_.h), ow = out_dim(in_.w);
        require(grad_out.c == cout_ && grad_out.h == oh && grad_out.w == ow, "Conv2d: grad shape mismatch");
        Batch<S> grad_in(in_.n, cin_, in_.h, in_.w);
        bias_.grad.col(0) += grad_out.m.rowwise().sum();
        const std::ptrdiff_t chunk = chunk_images(in_);
        MatrixX<S> patches, dpatches;
        for (int i0 = 0; i0 < in_.n; i0 += int(chunk)) {
            const int ni = std::min<int>(int(chunk), in_.n - i0);
            im2col(in_, i0, ni, patches);
            auto go = grad_out.m.middleCols(std::ptrdiff_t(i0) * oh * ow, std::ptrdiff_t(ni) * oh * ow);
            weight_.grad.noalias() += go * patches.transpose();
            dpatches.noalias() = weight_.value.transpose() * go;
            col2im(dpatches, i0, ni, grad_in);
        }
        return grad_in;
    }

    void collect(std::vector<ParamTensor<S>*>& out) override {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

  private:
    std::ptrdiff_t chunk_images(const Batch<S>& in) const {
        const std::ptrdiff_t rows = std::ptrdiff_t(cin_) * k_ * k_;
        const std::ptrdiff_t per_image = rows * out_dim(in.h) * out_dim(in.w);
        const std::ptrdiff_t budget = 8 * 1024 * 1024;  // floats per im2col buffer
        return std::max<std::ptrdiff_t>(1, budget / std::max<std::ptrdiff_t>(1, per_image));
    }

    void im2col(const Batch<S>& in, int i0, int ni, MatrixX<S>& patches) const {
        const int oh = out_dim(in.h), ow = out_dim(in.w);
        patches.resize(std::ptrdiff_t(cin_) * k_ * k_, std::ptrdiff_t(ni) * oh * ow);
        for (int i = 0; i < ni; ++i) {
            const auto img = in.image(i0 + i);
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    const std::ptrdiff_t col = (std::ptrdiff_t(i) * oh + oy) * ow + ox;
                    for (int ky = 0; ky < k_; ++ky) {
                        const int iy = oy * stride_ + ky - pad_;
                        for (int kx = 0; kx < k_; ++kx) {
                            const int ix = ox * stride_ + kx - pad_;
                            auto dst = patches.col(col).segment(std::ptrdiff_t(ky * k_ + kx) * cin_, cin_);
                            if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w)
                                dst.setZero();
                            else
                                dst = img.col(std::ptrdiff_t(iy) * in.w + ix);
                        }
                    }
                }
        }
    }

    void col2im(const MatrixX<S>& dpatches, int i0, int ni, Batch<S>& grad_in) const {
        const int oh = out_dim(grad_in.h), ow = out_dim(grad_in.w);
        for (int i = 0; i < ni; ++i) {
            auto img = grad_in.image(i0 + i);
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    const std::ptrdiff_t col = (std::ptrdiff_t(i) * oh + oy) * ow + ox;
                    for (int ky = 0; ky < k_; ++ky) {
                        const int iy = oy * stride_ + ky - pad_;
                        if (iy < 0 || iy >= grad_in.h) continue;
                        for (int kx = 0; kx < k_; ++kx) {
                            const int ix = ox * stride_ + kx - pad_;
                            if (ix < 0 || ix >= grad_in.w) continue;
                            img.col(std::ptrdiff_t(iy) * grad_in.w + ix) +=
                                dpatches.col(col).segment(std::ptrdiff_t(ky * k_ + kx) * cin_, cin_);
                        }
                    }
                }
        }
    }

    int cin_, cout_, k_, stride_, pad_;
    ParamTensor<S> weight_, bias_;
    Batch<S> in_;
};

// Per-channel PReLU.
template <class S>
class PReLU : public Layer<S> {
  public:
    PReLU(std::string name, int channels, S init_slope = S(0.2)) {
        alpha_.name = name + ".alpha";
        alpha_.value = MatrixX<S>::Constant(channels, 1, init_slope);
        alpha_.zero_grad();
    }

    Batch<S> forward(const Batch<S>& in) override {
        require(in.c == int(alpha_.value.rows()), "PReLU: channel mismatch");
        in_ = in;
        Batch<S> out = in;
        for (std::ptrdiff_t j = 0; j < out.m.cols(); ++j)
            for (int ch = 0; ch < out.c; ++ch) {
                const S x = out.m(ch, j);
                if (x < S(0)) out.m(ch, j) = alpha_.value(ch, 0) * x;
            }
        return out;
    }

    Batch<S> backward(const Batch<S>& grad_out) override {
        Batch<S> grad_in = grad_out;
        for (std::ptrdiff_t j = 0; j < grad_in.m.cols(); ++j)
            for (int ch = 0; ch < grad_in.c; ++ch) {
                const S x = in_.m(ch, j);
                if (x < S(0)) {
                    alpha_.grad(ch, 0) += grad_out.m(ch, j) * x;
                    grad_in.m(ch, j) *= alpha_.value(ch, 0);
                }
            }
        return grad_in;
    }

    void collect(std::vector<ParamTensor<S>*>& out) override { out.push_back(&alpha_); }

  private:
    ParamTensor<S> alpha_;
    Batch<S> in_;
};

template <class S>
class Sigmoid : public Layer<S> {
  public:
    Batch<S> forward(const Batch<S>& in) override {
        out_ = in;
        out_.m = (S(1) / (S(1) + (-in.m.array()).exp())).matrix();
        return out_;
    }
    Batch<S> backward(const Batch<S>& grad_out) override {
        Batch<S> g = grad_out;
        g.m.array() *= out_.m.array() * (S(1) - out_.m.array());
        return g;
    }

  private:
    Batch<S> out_;
};

// Depth-to-space with factor r: input channel co*r*r + dy*r + dx maps to
// output channel co at spatial offset (dy,dx).
template <class S>
class PixelShuffle : public Layer<S> {
  public:
    explicit PixelShuffle(int r) : r_(r) {}

    Batch<S> forward(const Batch<S>& in) override {
        require(in.c % (r_ * r_) == 0, "PixelShuffle: channels not divisible by r^2");
        shape_ = {in.n, in.c, in.h, in.w};
        Batch<S> out(in.n, in.c / (r_ * r_), in.h * r_, in.w * r_);
        for (int i = 0; i < in.n; ++i)
            for (int co = 0; co < out.c; ++co)
                for (int y = 0; y < in.h; ++y)
                    for (int x = 0; x < in.w; ++x)
                        for (int dy = 0; dy < r_; ++dy)
                            for (int dx = 0; dx < r_; ++dx)
                                out.at(i, co, y * r_ + dy, x * r_ + dx) =
                                    in.at(i, co * r_ * r_ + dy * r_ + dx, y, x);
        return out;
    }

    Batch<S> backward(const Batch<S>& grad_out) override {
        Batch<S> grad_in(shape_[0], shape_[1], shape_[2], shape_[3]);
        for (int i = 0; i < grad_in.n; ++i)
            for (int co = 0; co < grad_out.c; ++co)
                for (int y = 0; y < grad_in.h; ++y)
                    for (int x = 0; x < grad_in.w; ++x)
                        for (int dy = 0; dy < r_; ++dy)
                            for (int dx = 0; dx < r_; ++dx)
                                grad_in.at(i, co * r_ * r_ + dy * r_ + dx, y, x) =
                                    grad_out.at(i, co, y * r_ + dy, x * r_ + dx);
        return grad_in;
    }

  private:
    int r_;
    std::array<int, 4> shape_{};
};

// x + conv(act(conv(x))), stride 1, resolution preserved.
template <class S>
class ResBlock : public Layer<S> {
  public:
    ResBlock(std::string name, int channels, Rng init)
        : conv1_(name + ".c1", channels, channels, 3, 1, 1, init.stream("c1")),
          act_(name + ".act", channels),
          conv2_(name + ".c2", channels, channels, 3, 1, 1, init.stream("c2")) {}

    Batch<S> forward(const Batch<S>& in) override {
        Batch<S> out = conv2_.forward(act_.forward(conv1_.forward(in)));
        out.m += in.m;
        return out;
    }

    Batch<S> backward(const Batch<S>& grad_out) override {
        Batch<S> g = conv1_.backward(act_.backward(conv2_.backward(grad_out)));
        g.m += grad_out.m;
        return g;
    }

    void collect(std::vector<ParamTensor<S>*>& out) override {
        conv1_.collect(out);
        act_.collect(out);
        conv2_.collect(out);
    }

  private:
    Conv2d<S> conv1_;
    PReLU<S> act_;
    Conv2d<S> conv2_;
};

// Scales each image block so its squared Frobenius norm equals
// target_sum_sq = c*h*w/2, i.e. unit mean power once packed as complex
// symbols. Differentiable; used as the encoder head.
template <class S>
class PowerNormalize : public Layer<S> {
  public:
    Batch<S> forward(const Batch<S>& in) override {
        in_ = in;
        scales_.resize(in.n);
        Batch<S> out = in;
        const S target = std::sqrt(S(in.c) * S(in.h) * S(in.w) / S(2));
        for (int i = 0; i < in.n; ++i) {
            const S nrm = in.image(i).norm();
            if (!(nrm > S(0))) throw std::domain_error("PowerNormalize: all-zero feature block");
            scales_[i] = target / nrm;
            out.image(i) *= scales_[i];
        }
        return out;
    }

    Batch<S> backward(const Batch<S>& grad_out) override {
        Batch<S> grad_in = grad_out;
        for (int i = 0; i < grad_out.n; ++i) {
            const auto r = in_.image(i);
            const auto g = grad_out.image(i);
            const S rg = (r.array() * g.array()).sum();
            const S inv_rr = S(1) / r.squaredNorm();
            grad_in.image(i) = scales_[i] * (g - (rg * inv_rr) * r);
        }
        return grad_in;
    }

  private:
    Batch<S> in_;
    std::vector<S> scales_;
};

template <class S>
class Sequential : public Layer<S> {
  public:
    Sequential() = default;

    template <class L, class... Args>
    L& add(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }

    Batch<S> forward(const Batch<S>& in) override {
        Batch<S> x = in;
        for (auto& l : layers_) x = l->forward(x);
        return x;
    }

    Batch<S> backward(const Batch<S>& grad_out) override {
        Batch<S> g = grad_out;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
        return g;
    }

    void collect(std::vector<ParamTensor<S>*>& out) override {
        for (auto& l : layers_) l->collect(out);
    }

  private:
    std::vector<std::unique_ptr<Layer<S>>> layers_;
};

template <class S>
void zero_grads(std::vector<ParamTensor<S>*>& params) {
    for (auto* p : params) p->zero_grad();
}

template <class S>
std::ptrdiff_t param_count(const std::vector<ParamTensor<S>*>& params) {
    std::ptrdiff_t n = 0;
    for (auto* p : params) n += p->value.size();
    return n;
}

template <class S>
class Adam {
  public:
    explicit Adam(std::vector<ParamTensor<S>*> params, double lr = 1e-4, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        m_.reserve(params_.size());
        v_.reserve(params_.size());
        for (auto* p : params_) {
            m_.push_back(MatrixX<S>::Zero(p->value.rows(), p->value.cols()));
            v_.push_back(MatrixX<S>::Zero(p->value.rows(), p->value.cols()));
        }
    }

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, double(t_));
        const double bc2 = 1.0 - std::pow(beta2_, double(t_));
        const S alpha = S(lr_ * std::sqrt(bc2) / bc1);
        for (size_t i = 0; i < params_.size(); ++i) {
            auto& p = *params_[i];
            m_[i] = S(beta1_) * m_[i] + S(1.0 - beta1_) * p.grad;
            v_[i].array() = S(beta2_) * v_[i].array() + S(1.0 - beta2_) * p.grad.array().square();
            p.value.array() -= alpha * m_[i].array() / (v_[i].array().sqrt() + S(eps_));
        }
    }

  private:
    std::vector<ParamTensor<S>*> params_;
    std::vector<MatrixX<S>> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
};

}  // namespace hjsc::nn
