#pragma once

// Differentiable end-to-end chains used by training and by the gradient
// checks. Channel noise and quantization noise are passed in as fixed
// tensors, so a pipeline is a pure function of (parameters, inputs, noise)
// and central differences are well defined.

#include <vector>

#include "hjsc/deepjscc.hpp"

namespace hjsc {

template <class S>
Batch<S> gaussian_noise_like(const Batch<S>& b, double stddev, Rng& rng) {
    Batch<S> out(b.n, b.c, b.h, b.w);
    for (std::ptrdiff_t j = 0; j < out.m.cols(); ++j)
        for (int i = 0; i < out.m.rows(); ++i) out.m(i, j) = S(rng.normal() * stddev);
    return out;
}

// AWGN with per-complex-dimension variance sigma2 adds variance sigma2/2 to
// every real feature component; in the batch domain the hop is an
// element-wise add of a fixed noise tensor.
template <class S>
std::vector<Batch<S>> draw_hop_noise(const Batch<S>& feat_shape, const std::vector<double>& sigma2s,
                                     Rng& rng) {
    std::vector<Batch<S>> out;
    out.reserve(sigma2s.size());
    for (size_t h = 0; h < sigma2s.size(); ++h) {
        Rng hop = rng.stream("hop", h);
        out.push_back(gaussian_noise_like(feat_shape, std::sqrt(sigma2s[h] / 2.0), hop));
    }
    return out;
}

// Fully analog chain: f_s -> [noise -> relay]x(n-1) -> noise -> f_d.
// AF relays scale by alpha(sigma2); PF relays come from the model.
template <class S>
class AnalogPipeline {
  public:
    AnalogPipeline(AnalogModel<S>& model, std::vector<double> sigma2s)
        : model_(&model), sigma2s_(std::move(sigma2s)) {
        require(!sigma2s_.empty(), "AnalogPipeline: empty hop chain");
        if (model.mode == RelayMode::PF)
            require(model.relays.size() + 1 >= sigma2s_.size(), "AnalogPipeline: missing PF relays");
    }

    Batch<S> forward(const Batch<S>& images, const std::vector<Batch<S>>& hop_noise) {
        require(hop_noise.size() == sigma2s_.size(), "AnalogPipeline: noise count mismatch");
        Batch<S> x = model_->encoder->forward(images);
        for (size_t h = 0; h < sigma2s_.size(); ++h) {
            x.m += hop_noise[h].m;
            if (h + 1 < sigma2s_.size()) {
                if (model_->mode == RelayMode::AF)
                    x.m *= S(std::sqrt(1.0 / (1.0 + sigma2s_[h])));
                else
                    x = model_->relays[h]->forward(x);
            }
        }
        return model_->decoder->forward(x);
    }

    void backward(const Batch<S>& grad_recon) {
        Batch<S> g = model_->decoder->backward(grad_recon);
        for (size_t h = sigma2s_.size(); h-- > 0;) {
            if (h + 1 < sigma2s_.size()) {
                if (model_->mode == RelayMode::AF)
                    g.m *= S(std::sqrt(1.0 / (1.0 + sigma2s_[h])));
                else
                    g = model_->relays[h]->backward(g);
            }
        }
        model_->encoder->backward(g);
    }

  private:
    AnalogModel<S>* model_;
    std::vector<double> sigma2s_;
};

// d/d rec of loss_af (mean squared error over all elements of the batch).
template <class S>
Batch<S> mse_gradient(const Batch<S>& ref, const Batch<S>& rec) {
    Batch<S> g = rec;
    const S scale = S(2) / (S(ref.m.rows()) * S(ref.m.cols()));
    g.m = scale * (rec.m - ref.m);
    return g;
}

}  // namespace hjsc
