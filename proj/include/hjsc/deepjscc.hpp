#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjsc/channel.hpp"
#include "hjsc/nn.hpp"
#include "hjsc/tensor.hpp"

namespace hjsc {

// Encoder geometry. Two stride-2 stages fix the feature grid at (H/4, W/4);
// the channel-use budget is k = c_out*(H/4)*(W/4)/2 complex symbols.
struct JsccEncoderConfig {
    int c_feat = 256;
    int c_out = 24;
    int res_blocks = 2;  // residual blocks per resolution stage
    int c = 3, h = 32, w = 32;

    void validate() const {
        require(h % 4 == 0 && w % 4 == 0, "JsccEncoderConfig: H and W must be divisible by 4");
        require(c_feat > 0 && c_out > 0 && res_blocks >= 0, "JsccEncoderConfig: bad sizes");
        require((c_out * (h / 4) * (w / 4)) % 2 == 0, "JsccEncoderConfig: c_out*(H/4)*(W/4) must be even");
    }
    int grid_h() const { return h / 4; }
    int grid_w() const { return w / 4; }
    int k() const { return c_out * grid_h() * grid_w() / 2; }
};

// Flattening convention between a (c, gh, gw) feature block and the 2k-entry
// real vector fed to pack_complex: column-major over the block storage,
// raw[s*c + ch] = feature(ch, y*gw + x) with s = y*gw + x.
template <class S>
VectorX<S> flatten_features(const Batch<S>& feat, int image) {
    const auto blk = feat.image(image);
    VectorX<S> raw = Eigen::Map<const VectorX<S>>(blk.data(), blk.size());
    return raw;
}

template <class S>
void unflatten_features(const VectorX<S>& raw, Batch<S>& feat, int image) {
    auto blk = feat.image(image);
    require(raw.size() == blk.size(), "unflatten_features: size mismatch");
    Eigen::Map<VectorX<S>>(blk.data(), blk.size()) = raw;
}

// DeepJSCC encoder f_s: image -> power-normalized feature grid. The output
// batch already satisfies the power constraint per image; to_symbols packs
// one image block into k complex channel uses.
template <class S>
class JsccEncoder {
  public:
    JsccEncoder(const JsccEncoderConfig& cfg, Rng init, const std::string& prefix = "f_s") : cfg_(cfg) {
        cfg_.validate();
        body_.template add<nn::Conv2d<S>>(prefix + ".down1", cfg.c, cfg.c_feat, 3, 2, 1, init.stream(prefix + ".down1"));
        body_.template add<nn::PReLU<S>>(prefix + ".act1", cfg.c_feat);
        for (int b = 0; b < cfg.res_blocks; ++b)
            body_.template add<nn::ResBlock<S>>(prefix + ".res1_" + std::to_string(b), cfg.c_feat,
                                                init.stream(prefix + ".res1", b));
        body_.template add<nn::Conv2d<S>>(prefix + ".down2", cfg.c_feat, cfg.c_feat, 3, 2, 1,
                                          init.stream(prefix + ".down2"));
        body_.template add<nn::PReLU<S>>(prefix + ".act2", cfg.c_feat);
        for (int b = 0; b < cfg.res_blocks; ++b)
            body_.template add<nn::ResBlock<S>>(prefix + ".res2_" + std::to_string(b), cfg.c_feat,
                                                init.stream(prefix + ".res2", b));
        body_.template add<nn::Conv2d<S>>(prefix + ".head", cfg.c_feat, cfg.c_out, 3, 1, 1,
                                          init.stream(prefix + ".head"));
        body_.template add<nn::PowerNormalize<S>>();
    }

    Batch<S> forward(const Batch<S>& images) {
        require(images.c == cfg_.c && images.h == cfg_.h && images.w == cfg_.w,
                "JsccEncoder: image shape mismatch");
        return body_.forward(images);
    }
    Batch<S> backward(const Batch<S>& grad_out) { return body_.backward(grad_out); }
    void collect(std::vector<nn::ParamTensor<S>*>& out) { body_.collect(out); }

    SymbolVector<S> to_symbols(const Batch<S>& feat, int image) const {
        return pack_complex(flatten_features(feat, image));
    }

    const JsccEncoderConfig& config() const { return cfg_; }

  private:
    JsccEncoderConfig cfg_;
    nn::Sequential<S> body_;
};

// DeepJSCC decoder f_d: feature grid -> image in [0,1] (sigmoid head),
// upsampling via pixel shuffle.
template <class S>
class JsccDecoder {
  public:
    JsccDecoder(const JsccEncoderConfig& cfg, Rng init, const std::string& prefix = "f_d",
                int in_channels = -1)
        : cfg_(cfg), in_channels_(in_channels < 0 ? cfg.c_out : in_channels) {
        cfg_.validate();
        body_.template add<nn::Conv2d<S>>(prefix + ".in", in_channels_, cfg.c_feat, 3, 1, 1,
                                          init.stream(prefix + ".in"));
        body_.template add<nn::PReLU<S>>(prefix + ".act0", cfg.c_feat);
        for (int b = 0; b < cfg.res_blocks; ++b)
            body_.template add<nn::ResBlock<S>>(prefix + ".res1_" + std::to_string(b), cfg.c_feat,
                                                init.stream(prefix + ".res1", b));
        body_.template add<nn::Conv2d<S>>(prefix + ".up1", cfg.c_feat, cfg.c_feat * 4, 3, 1, 1,
                                          init.stream(prefix + ".up1"));
        body_.template add<nn::PixelShuffle<S>>(2);
        body_.template add<nn::PReLU<S>>(prefix + ".act1", cfg.c_feat);
        for (int b = 0; b < cfg.res_blocks; ++b)
            body_.template add<nn::ResBlock<S>>(prefix + ".res2_" + std::to_string(b), cfg.c_feat,
                                                init.stream(prefix + ".res2", b));
        body_.template add<nn::Conv2d<S>>(prefix + ".up2", cfg.c_feat, cfg.c * 4, 3, 1, 1,
                                          init.stream(prefix + ".up2"));
        body_.template add<nn::PixelShuffle<S>>(2);
        body_.template add<nn::Sigmoid<S>>();
    }

    Batch<S> forward(const Batch<S>& features) {
        require(features.c == in_channels_ && features.h == cfg_.grid_h() && features.w == cfg_.grid_w(),
                "JsccDecoder: feature shape mismatch");
        return body_.forward(features);
    }
    Batch<S> backward(const Batch<S>& grad_out) { return body_.backward(grad_out); }
    void collect(std::vector<nn::ParamTensor<S>*>& out) { body_.collect(out); }

    // Received symbols for one image back onto the decoder's feature grid.
    Batch<S> from_symbols(const SymbolVector<S>& y) const {
        require(y.k() == cfg_.k() * in_channels_ / cfg_.c_out || in_channels_ == cfg_.c_out,
                "JsccDecoder: symbol count mismatch");
        Batch<S> feat(1, in_channels_, cfg_.grid_h(), cfg_.grid_w());
        unflatten_features(unpack_complex(y), feat, 0);
        return feat;
    }

  private:
    JsccEncoderConfig cfg_;
    int in_channels_;
    nn::Sequential<S> body_;
};

// Amplify-and-forward gain: alpha = sqrt(1/(1+sigma2)) restores unit power
// in expectation after a hop of variance sigma2.
template <class S>
SymbolVector<S> af_scale(const SymbolVector<S>& y, double sigma2) {
    SymbolVector<S> x = y;
    x.symbols *= S(std::sqrt(1.0 / (1.0 + sigma2)));
    return x;
}

enum class RelayMode { AF, PF };

// Neural process-and-forward relay: operates on the 4x-downsampled feature
// grid without resolution change; may change the channel count (k != k').
template <class S>
class PfRelay {
  public:
    PfRelay(const JsccEncoderConfig& cfg, int c_in, int c_out_relay, Rng init, const std::string& prefix)
        : cfg_(cfg), c_in_(c_in), c_out_(c_out_relay) {
        body_.template add<nn::Conv2d<S>>(prefix + ".in", c_in, cfg.c_feat, 3, 1, 1, init.stream(prefix + ".in"));
        body_.template add<nn::PReLU<S>>(prefix + ".act", cfg.c_feat);
        for (int b = 0; b < cfg.res_blocks; ++b)
            body_.template add<nn::ResBlock<S>>(prefix + ".res_" + std::to_string(b), cfg.c_feat,
                                                init.stream(prefix + ".res", b));
        body_.template add<nn::Conv2d<S>>(prefix + ".out", cfg.c_feat, c_out_relay, 3, 1, 1,
                                          init.stream(prefix + ".out"));
        body_.template add<nn::PowerNormalize<S>>();
    }

    int k_out() const { return c_out_ * cfg_.grid_h() * cfg_.grid_w() / 2; }
    int c_in() const { return c_in_; }

    Batch<S> forward(const Batch<S>& feat) { return body_.forward(feat); }
    Batch<S> backward(const Batch<S>& grad_out) { return body_.backward(grad_out); }
    void collect(std::vector<nn::ParamTensor<S>*>& out) { body_.collect(out); }

    SymbolVector<S> apply(const SymbolVector<S>& y) {
        require(y.k() == c_in_ * cfg_.grid_h() * cfg_.grid_w() / 2, "PfRelay: symbol count mismatch");
        Batch<S> feat(1, c_in_, cfg_.grid_h(), cfg_.grid_w());
        unflatten_features(unpack_complex(y), feat, 0);
        Batch<S> out = forward(feat);
        return pack_complex(flatten_features(out, 0));
    }

  private:
    JsccEncoderConfig cfg_;
    int c_in_, c_out_;
    nn::Sequential<S> body_;
};

// Channel-count change on the feature grid for the k != k' case, followed by
// power normalization (used at R1 for both AF and PF chains).
template <class S>
class Redimension {
  public:
    Redimension(const JsccEncoderConfig& cfg, int c_in, int c_out, Rng init, const std::string& prefix)
        : cfg_(cfg), c_in_(c_in), c_out_(c_out) {
        body_.template add<nn::Conv2d<S>>(prefix + ".proj", c_in, c_out, 1, 1, 0, init.stream(prefix + ".proj"));
        body_.template add<nn::PowerNormalize<S>>();
    }

    Batch<S> forward(const Batch<S>& feat) { return body_.forward(feat); }
    Batch<S> backward(const Batch<S>& g) { return body_.backward(g); }
    void collect(std::vector<nn::ParamTensor<S>*>& out) { body_.collect(out); }

  private:
    JsccEncoderConfig cfg_;
    int c_in_, c_out_;
    nn::Sequential<S> body_;
};

// Eq.-style training loss for the analog protocols: mean squared error over
// the batch on [0,1] pixels.
template <class S>
double loss_af(const Batch<S>& ref, const Batch<S>& rec) {
    if (!ref.same_shape(rec)) throw std::invalid_argument("loss_af: shape mismatch");
    return (ref.m - rec.m).template cast<double>().squaredNorm() /
           (double(ref.m.rows()) * double(ref.m.cols()));
}

// A fully analog end-to-end model: encoder, optional per-hop PF relays,
// decoder. AF chains use af_scale at every relay instead.
template <class S>
struct AnalogModel {
    JsccEncoderConfig cfg;
    RelayMode mode = RelayMode::AF;
    std::unique_ptr<JsccEncoder<S>> encoder;
    std::unique_ptr<JsccDecoder<S>> decoder;
    std::vector<std::unique_ptr<PfRelay<S>>> relays;  // PF only; relays[i] serves hop i+2

    static AnalogModel make(const JsccEncoderConfig& cfg, RelayMode mode, int n_hops, Rng init) {
        AnalogModel m;
        m.cfg = cfg;
        m.mode = mode;
        m.encoder = std::make_unique<JsccEncoder<S>>(cfg, init.stream("f_s"));
        m.decoder = std::make_unique<JsccDecoder<S>>(cfg, init.stream("f_d"));
        if (mode == RelayMode::PF) {
            for (int i = 0; i + 1 < n_hops; ++i)
                m.relays.push_back(std::make_unique<PfRelay<S>>(cfg, cfg.c_out, cfg.c_out,
                                                                init.stream("f_r", i), "f_r" + std::to_string(i + 1)));
        }
        return m;
    }

    std::vector<nn::ParamTensor<S>*> params() {
        std::vector<nn::ParamTensor<S>*> out;
        encoder->collect(out);
        decoder->collect(out);
        for (auto& r : relays) r->collect(out);
        return out;
    }
};

// Per-hop SNRs for an n-hop analog chain: first entry is the edge hop.
inline std::vector<double> hop_sigma2s(double snr_s_db, double snr_n_db, int n_hops) {
    require(n_hops >= 1, "hop_sigma2s: need at least one hop");
    std::vector<double> out(n_hops, snr_db_to_sigma2(snr_n_db));
    out[0] = snr_db_to_sigma2(snr_s_db);
    return out;
}

// Runs one image through encoder -> [awgn -> relay]x(n-1) -> awgn -> decoder.
// AF relays amplify; PF relays must be provided by the model. Noise streams
// are split per (image_tag, hop) so runs are reproducible.
template <class S>
Batch<S> analog_multihop_run(AnalogModel<S>& model, const Batch<S>& image,
                             const std::vector<double>& sigma2s, Rng noise_rng,
                             std::uint64_t image_tag = 0) {
    require(image.n == 1, "analog_multihop_run: one image at a time");
    const int n_hops = int(sigma2s.size());
    require(n_hops >= 1, "analog_multihop_run: empty hop chain");
    if (model.mode == RelayMode::PF)
        require(int(model.relays.size()) >= n_hops - 1, "analog_multihop_run: missing PF relays");

    Batch<S> feat = model.encoder->forward(image);
    SymbolVector<S> x = model.encoder->to_symbols(feat, 0);
    for (int hop = 0; hop < n_hops; ++hop) {
        Rng hop_rng = noise_rng.stream("hop", (image_tag << 8) ^ std::uint64_t(hop));
        SymbolVector<S> y = awgn_apply(x, NoiseSpec::from_sigma2(sigma2s[hop]), hop_rng);
        if (hop + 1 < n_hops) {
            x = (model.mode == RelayMode::AF) ? af_scale(y, sigma2s[hop])
                                              : model.relays[hop]->apply(y);
        } else {
            x = y;
        }
    }
    return model.decoder->forward(model.decoder->from_symbols(x));
}

}  // namespace hjsc
