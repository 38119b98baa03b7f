#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "punctr/encode.hpp"
#include "punctr/errors.hpp"
#include "punctr/rng.hpp"
#include "punctr/tensor.hpp"

namespace punctr {

struct ModelConfig {
    int num_layers = 2;
    int d_model = 64;
    int num_heads = 4;
    int d_ff = 128;
    int vocab_size = 0;
    int max_positions = 160;
    int num_classes = 4;
    double dropout_rate = 0.1;
    std::uint64_t seed = 1;

    int head_dim() const { return d_model / num_heads; }

    void validate() const {
        if (num_layers < 1 || d_model < 1 || num_heads < 1 || d_ff < 1)
            throw ConfigError("model: all dimensions must be positive");
        if (d_model % num_heads != 0)
            throw ConfigError("model: d_model must be divisible by num_heads");
        if (vocab_size < 4) throw ConfigError("model: vocab_size must cover the specials");
        if (max_positions < 1) throw ConfigError("model: max_positions must be >= 1");
        if (num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
        if (dropout_rate < 0.0 || dropout_rate >= 1.0)
            throw ConfigError("model: dropout_rate must be in [0, 1)");
    }

    bool operator==(const ModelConfig&) const = default;
};

// Pre-layer-norm encoder block parameters.
template <typename T>
struct LayerParams {
    MatX<T> ln1_g, ln1_b;          // [1, d]
    MatX<T> wq, wk, wv, wo;        // [d, d]
    MatX<T> bq, bk, bv, bo;        // [1, d]
    MatX<T> ln2_g, ln2_b;          // [1, d]
    MatX<T> w1, b1;                // [d, d_ff], [1, d_ff]
    MatX<T> w2, b2;                // [d_ff, d], [1, d]
};

// All trainable tensors: embeddings, encoder stack, final norm, classifier.
template <typename T>
struct ModelParams {
    ModelConfig config;
    MatX<T> embedding;             // [vocab, d]
    MatX<T> positional;            // [max_positions, d]
    std::vector<LayerParams<T>> layers;
    MatX<T> lnf_g, lnf_b;          // [1, d]
    MatX<T> cls_w, cls_b;          // [d, K], [1, K]
    std::uint64_t revision = 0;    // bumped by each optimizer step

    bool all_finite() const {
        bool ok = true;
        const_cast<ModelParams*>(this)->for_each_tensor(
            [&](const std::string&, MatX<T>& m) { ok = ok && m.allFinite(); });
        return ok;
    }

    template <typename F>
    void for_each_tensor(F f) {
        f("embed", embedding);
        f("pos", positional);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const std::string p = "layer" + std::to_string(l) + ".";
            auto& L = layers[l];
            f(p + "ln1.g", L.ln1_g);
            f(p + "ln1.b", L.ln1_b);
            f(p + "attn.wq", L.wq);
            f(p + "attn.bq", L.bq);
            f(p + "attn.wk", L.wk);
            f(p + "attn.bk", L.bk);
            f(p + "attn.wv", L.wv);
            f(p + "attn.bv", L.bv);
            f(p + "attn.wo", L.wo);
            f(p + "attn.bo", L.bo);
            f(p + "ln2.g", L.ln2_g);
            f(p + "ln2.b", L.ln2_b);
            f(p + "ffn.w1", L.w1);
            f(p + "ffn.b1", L.b1);
            f(p + "ffn.w2", L.w2);
            f(p + "ffn.b2", L.b2);
        }
        f("final_ln.g", lnf_g);
        f("final_ln.b", lnf_b);
        f("cls.w", cls_w);
        f("cls.b", cls_b);
    }

    std::vector<std::pair<std::string, MatX<T>*>> tensor_list() {
        std::vector<std::pair<std::string, MatX<T>*>> out;
        for_each_tensor([&](const std::string& n, MatX<T>& m) { out.emplace_back(n, &m); });
        return out;
    }

    // Order-sensitive fingerprint of every tensor's bytes; used to check
    // that training one model never touches another.
    std::uint64_t fingerprint() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        const_cast<ModelParams*>(this)->for_each_tensor([&](const std::string& n, MatX<T>& m) {
            h = fnv1a(n, h);
            h = fnv1a(std::string_view(reinterpret_cast<const char*>(m.data()),
                                       sizeof(T) * static_cast<std::size_t>(m.size())),
                      h);
        });
        return h;
    }
};

// Zero-filled gradient (or moment) container shaped like `like`.
template <typename T>
inline ModelParams<T> zeros_like(const ModelParams<T>& like) {
    ModelParams<T> g = like;
    g.for_each_tensor([](const std::string&, MatX<T>& m) { m.setZero(); });
    return g;
}

// Deterministic init: weights uniform in +-1/sqrt(fan_in), biases zero,
// layer-norm gain one.
template <typename T>
inline ModelParams<T> init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    ModelParams<T> p;
    p.config = config;
    p.config.seed = seed;
    Rng rng(seed);
    const int d = config.d_model;

    auto weight = [&](MatX<T>& m, int rows, int cols, int fan_in) {
        m.resize(rows, cols);
        fill_uniform(m, rng, 1.0 / std::sqrt(static_cast<double>(fan_in)));
    };
    auto zeros = [&](MatX<T>& m, int cols) { m = MatX<T>::Zero(1, cols); };
    auto ones = [&](MatX<T>& m, int cols) { m = MatX<T>::Ones(1, cols); };

    weight(p.embedding, config.vocab_size, d, d);
    weight(p.positional, config.max_positions, d, d);
    p.layers.resize(static_cast<std::size_t>(config.num_layers));
    for (auto& L : p.layers) {
        ones(L.ln1_g, d);
        zeros(L.ln1_b, d);
        weight(L.wq, d, d, d);
        zeros(L.bq, d);
        weight(L.wk, d, d, d);
        zeros(L.bk, d);
        weight(L.wv, d, d, d);
        zeros(L.bv, d);
        weight(L.wo, d, d, d);
        zeros(L.bo, d);
        ones(L.ln2_g, d);
        zeros(L.ln2_b, d);
        weight(L.w1, d, config.d_ff, d);
        zeros(L.b1, config.d_ff);
        weight(L.w2, config.d_ff, d, config.d_ff);
        zeros(L.b2, d);
    }
    ones(p.lnf_g, d);
    zeros(p.lnf_b, d);
    weight(p.cls_w, d, config.num_classes, d);
    zeros(p.cls_b, config.num_classes);
    return p;
}

// ---- batching ----

// Dense batch: sequences padded to a common width; valid_len marks the real
// pieces, everything past it is PAD and masked out of attention keys.
struct Batch {
    int batch = 0;
    int width = 0;                    // padded length
    std::vector<int> piece_ids;       // batch * width
    std::vector<int> valid_len;       // per sequence
    std::vector<int> word_rows;       // flattened row (seq*width + last piece) per word
    std::vector<PunctLabel> labels;   // per word, aligned with word_rows
    std::vector<Source> word_source;  // per word

    int num_words() const { return static_cast<int>(word_rows.size()); }
    int rows() const { return batch * width; }
};

inline Batch make_batch(const std::vector<const EncodedExample*>& items) {
    Batch b;
    b.batch = static_cast<int>(items.size());
    for (const auto* ex : items)
        b.width = std::max(b.width, static_cast<int>(ex->num_pieces()));
    b.piece_ids.assign(static_cast<std::size_t>(b.batch) * b.width, 0 /* PAD */);
    for (int s = 0; s < b.batch; ++s) {
        const EncodedExample& ex = *items[static_cast<std::size_t>(s)];
        const int len = static_cast<int>(ex.num_pieces());
        b.valid_len.push_back(len);
        for (int i = 0; i < len; ++i)
            b.piece_ids[static_cast<std::size_t>(s) * b.width + i] = ex.piece_ids[i];
        for (std::size_t w = 0; w < ex.num_words(); ++w) {
            b.word_rows.push_back(s * b.width + ex.last_piece_index[w]);
            b.labels.push_back(w < ex.labels.size() ? ex.labels[w] : PunctLabel::NONE);
            b.word_source.push_back(ex.source);
        }
    }
    return b;
}

inline Batch make_batch(const std::vector<EncodedExample>& items) {
    std::vector<const EncodedExample*> ptrs;
    ptrs.reserve(items.size());
    for (const auto& ex : items) ptrs.push_back(&ex);
    return make_batch(ptrs);
}

// ---- forward / backward ----

constexpr double kLayerNormEps = 1e-5;

template <typename T>
inline VecX<T> softmax(const VecX<T>& logits) {
    const T m = logits.maxCoeff();
    VecX<T> e = (logits.array() - m).exp();
    return e / e.sum();
}

namespace detail {

template <typename T>
struct LayerNormCache {
    MatX<T> x_hat;       // normalized input
    VecX<T> inv_std;     // per row
};

template <typename T>
inline MatX<T> layer_norm(const MatX<T>& x, const MatX<T>& g, const MatX<T>& b,
                          LayerNormCache<T>& cache) {
    const Eigen::Index n = x.rows(), d = x.cols();
    cache.x_hat.resize(n, d);
    cache.inv_std.resize(n);
    MatX<T> out(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const T mean = x.row(i).mean();
        const T var = (x.row(i).array() - mean).square().mean();
        const T inv = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
        cache.inv_std(i) = inv;
        cache.x_hat.row(i) = (x.row(i).array() - mean) * inv;
        out.row(i) = cache.x_hat.row(i).cwiseProduct(g.row(0)) + b.row(0);
    }
    return out;
}

template <typename T>
inline MatX<T> layer_norm_backward(const MatX<T>& dy, const MatX<T>& g,
                                   const LayerNormCache<T>& cache, MatX<T>& dg, MatX<T>& db) {
    const Eigen::Index n = dy.rows(), d = dy.cols();
    MatX<T> dx(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        dg.row(0) += dy.row(i).cwiseProduct(cache.x_hat.row(i));
        db.row(0) += dy.row(i);
        const auto dxhat = dy.row(i).cwiseProduct(g.row(0));
        const T m1 = dxhat.mean();
        const T m2 = dxhat.cwiseProduct(cache.x_hat.row(i)).mean();
        dx.row(i) = (dxhat.array() - m1 - cache.x_hat.row(i).array() * m2) * cache.inv_std(i);
    }
    return dx;
}

template <typename T>
inline T gelu(T x) {
    return T(0.5) * x * (T(1) + std::erf(x * T(0.7071067811865476)));
}

template <typename T>
inline T gelu_grad(T x) {
    const T cdf = T(0.5) * (T(1) + std::erf(x * T(0.7071067811865476)));
    const T pdf = std::exp(T(-0.5) * x * x) * T(0.3989422804014327);
    return cdf + x * pdf;
}

// Inverted dropout; mask entries are 0 or 1/(1-rate).
template <typename T>
inline void apply_dropout(MatX<T>& x, MatX<T>& mask, double rate, Rng& rng) {
    mask.resize(x.rows(), x.cols());
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            mask(i, j) = rng.bernoulli(rate) ? T(0) : keep_scale;
    x = x.cwiseProduct(mask);
}

template <typename T>
struct LayerCache {
    MatX<T> x_in;                    // residual stream entering the layer
    LayerNormCache<T> ln1;
    MatX<T> q, k, v;                 // [N, d]
    std::vector<MatX<T>> attn;       // per sequence: heads stacked, [H*W, W]
    MatX<T> context;                 // [N, d], pre-Wo
    MatX<T> drop1;                   // dropout mask after Wo (empty in eval)
    MatX<T> x_mid;                   // after attention residual
    LayerNormCache<T> ln2;
    MatX<T> ffn_in;                  // LN2 output
    MatX<T> ffn_pre;                 // [N, d_ff] pre-activation
    MatX<T> ffn_act;                 // gelu(ffn_pre)
    MatX<T> drop2;
};

}  // namespace detail

// Everything backward needs; valid for exactly one backward call against the
// same (unmodified) parameters.
template <typename T>
struct ForwardCache {
    Batch batch;
    MatX<T> embed_out;               // input to layer 0 (post-dropout)
    MatX<T> drop_embed;
    std::vector<detail::LayerCache<T>> layers;
    detail::LayerNormCache<T> lnf;
    MatX<T> hidden;                  // final normalized states [N, d]
    MatX<T> gathered;                // rows at word positions [num_words, d]
    std::uint64_t params_revision = 0;
    bool consumed = false;
};

// Runs the encoder and the per-word classifier head. Returns logits
// [num_words, K] gathered at each word's last piece. train_mode enables
// dropout (rng required when dropout_rate > 0); eval mode is deterministic.
template <typename T>
inline MatX<T> forward(const ModelParams<T>& params, const Batch& batch, bool train_mode,
                       ForwardCache<T>& cache, Rng* rng = nullptr) {
    const ModelConfig& cfg = params.config;
    const int d = cfg.d_model;
    const int H = cfg.num_heads;
    const int dh = cfg.head_dim();
    const int W = batch.width;
    const int N = batch.rows();
    const bool dropout = train_mode && cfg.dropout_rate > 0.0;
    if (dropout && !rng) throw LogicError("forward: train_mode with dropout needs an rng");
    if (W > cfg.max_positions)
        throw DataError("forward: sequence length " + std::to_string(W) +
                        " exceeds max_positions " + std::to_string(cfg.max_positions));
    for (int s = 0; s < batch.batch; ++s)
        for (int i = 0; i < W; ++i) {
            const int id = batch.piece_ids[static_cast<std::size_t>(s) * W + i];
            if (id < 0 || id >= cfg.vocab_size)
                throw DataError("forward: batch item " + std::to_string(s) + " piece " +
                                std::to_string(i) + " has id " + std::to_string(id) +
                                " outside vocab of size " + std::to_string(cfg.vocab_size));
        }

    cache = ForwardCache<T>{};
    cache.batch = batch;
    cache.params_revision = params.revision;

    MatX<T> x(N, d);
    for (int s = 0; s < batch.batch; ++s)
        for (int i = 0; i < W; ++i) {
            const int row = s * W + i;
            x.row(row) = params.embedding.row(batch.piece_ids[static_cast<std::size_t>(row)]) +
                         params.positional.row(i);
        }
    if (dropout) detail::apply_dropout(x, cache.drop_embed, cfg.dropout_rate, *rng);
    cache.embed_out = x;

    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    cache.layers.resize(static_cast<std::size_t>(cfg.num_layers));
    for (int l = 0; l < cfg.num_layers; ++l) {
        const LayerParams<T>& L = params.layers[static_cast<std::size_t>(l)];
        detail::LayerCache<T>& c = cache.layers[static_cast<std::size_t>(l)];
        c.x_in = x;

        MatX<T> xh = detail::layer_norm(x, L.ln1_g, L.ln1_b, c.ln1);
        c.q = xh * L.wq;
        c.q.rowwise() += L.bq.row(0);
        c.k = xh * L.wk;
        c.k.rowwise() += L.bk.row(0);
        c.v = xh * L.wv;
        c.v.rowwise() += L.bv.row(0);

        c.context.resize(N, d);
        c.attn.resize(static_cast<std::size_t>(batch.batch));
        for (int s = 0; s < batch.batch; ++s) {
            const int base = s * W;
            const int valid = batch.valid_len[static_cast<std::size_t>(s)];
            MatX<T>& probs = c.attn[static_cast<std::size_t>(s)];
            probs.resize(H * W, W);
            for (int h = 0; h < H; ++h) {
                const auto qh = c.q.block(base, h * dh, W, dh);
                const auto kh = c.k.block(base, h * dh, W, dh);
                MatX<T> scores = qh * kh.transpose() * scale;
                if (valid < W)
                    scores.rightCols(W - valid).setConstant(-std::numeric_limits<T>::infinity());
                for (int i = 0; i < W; ++i) {
                    const T m = scores.row(i).maxCoeff();
                    VecX<T> e = (scores.row(i).array() - m).exp();
                    probs.row(h * W + i) = e / e.sum();
                }
                c.context.block(base, h * dh, W, dh) =
                    probs.middleRows(h * W, W) * c.v.block(base, h * dh, W, dh);
            }
        }

        MatX<T> attn_out = c.context * L.wo;
        attn_out.rowwise() += L.bo.row(0);
        if (dropout) detail::apply_dropout(attn_out, c.drop1, cfg.dropout_rate, *rng);
        c.x_mid = x + attn_out;

        c.ffn_in = detail::layer_norm(c.x_mid, L.ln2_g, L.ln2_b, c.ln2);
        c.ffn_pre = c.ffn_in * L.w1;
        c.ffn_pre.rowwise() += L.b1.row(0);
        c.ffn_act = c.ffn_pre.unaryExpr([](T u) { return detail::gelu(u); });
        MatX<T> ffn_out = c.ffn_act * L.w2;
        ffn_out.rowwise() += L.b2.row(0);
        if (dropout) detail::apply_dropout(ffn_out, c.drop2, cfg.dropout_rate, *rng);
        x = c.x_mid + ffn_out;
    }

    cache.hidden = detail::layer_norm(x, params.lnf_g, params.lnf_b, cache.lnf);

    const int num_words = batch.num_words();
    cache.gathered.resize(num_words, d);
    for (int w = 0; w < num_words; ++w)
        cache.gathered.row(w) = cache.hidden.row(batch.word_rows[static_cast<std::size_t>(w)]);
    MatX<T> logits = cache.gathered * params.cls_w;
    logits.rowwise() += params.cls_b.row(0);
    return logits;
}

// Exact gradients for every encoder tensor given the gradient wrt the final
// normalized hidden states. The cache is consumed; reuse or a parameter
// revision mismatch is an error. Classifier gradients are left zero.
template <typename T>
inline ModelParams<T> encoder_backward(const ModelParams<T>& params, ForwardCache<T>& cache,
                                       const MatX<T>& d_hidden) {
    if (cache.consumed) throw LogicError("backward: cache already consumed");
    if (cache.params_revision != params.revision)
        throw LogicError("backward: cache does not match current parameters");
    cache.consumed = true;

    const ModelConfig& cfg = params.config;
    const int d = cfg.d_model;
    const int H = cfg.num_heads;
    const int dh = cfg.head_dim();
    const Batch& batch = cache.batch;
    const int W = batch.width;
    const int N = batch.rows();
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));

    ModelParams<T> grads = zeros_like(params);

    MatX<T> dx =
        detail::layer_norm_backward(d_hidden, params.lnf_g, cache.lnf, grads.lnf_g, grads.lnf_b);

    for (int l = cfg.num_layers - 1; l >= 0; --l) {
        const LayerParams<T>& L = params.layers[static_cast<std::size_t>(l)];
        LayerParams<T>& G = grads.layers[static_cast<std::size_t>(l)];
        detail::LayerCache<T>& c = cache.layers[static_cast<std::size_t>(l)];

        // feed-forward sublayer
        MatX<T> d_ffn_out = dx;
        if (c.drop2.size()) d_ffn_out = d_ffn_out.cwiseProduct(c.drop2);
        G.w2 += c.ffn_act.transpose() * d_ffn_out;
        G.b2.row(0) += d_ffn_out.colwise().sum();
        MatX<T> d_act = d_ffn_out * L.w2.transpose();
        MatX<T> d_pre =
            d_act.cwiseProduct(c.ffn_pre.unaryExpr([](T u) { return detail::gelu_grad(u); }));
        G.w1 += c.ffn_in.transpose() * d_pre;
        G.b1.row(0) += d_pre.colwise().sum();
        MatX<T> d_ffn_in = d_pre * L.w1.transpose();
        MatX<T> d_mid = dx;  // residual branch
        d_mid += detail::layer_norm_backward(d_ffn_in, L.ln2_g, c.ln2, G.ln2_g, G.ln2_b);

        // attention sublayer
        MatX<T> d_attn_out = d_mid;
        if (c.drop1.size()) d_attn_out = d_attn_out.cwiseProduct(c.drop1);
        G.wo += c.context.transpose() * d_attn_out;
        G.bo.row(0) += d_attn_out.colwise().sum();
        MatX<T> d_context = d_attn_out * L.wo.transpose();

        MatX<T> dq = MatX<T>::Zero(N, d), dk = MatX<T>::Zero(N, d), dv = MatX<T>::Zero(N, d);
        for (int s = 0; s < batch.batch; ++s) {
            const int base = s * W;
            const MatX<T>& probs = c.attn[static_cast<std::size_t>(s)];
            for (int h = 0; h < H; ++h) {
                const auto a = probs.middleRows(h * W, W);
                const auto dctx = d_context.block(base, h * dh, W, dh);
                const auto vh = c.v.block(base, h * dh, W, dh);
                dv.block(base, h * dh, W, dh) += a.transpose() * dctx;
                MatX<T> da = dctx * vh.transpose();
                // softmax rows: ds = a .* (da - rowsum(da .* a))
                MatX<T> ds(W, W);
                for (int i = 0; i < W; ++i) {
                    const T dot = da.row(i).cwiseProduct(a.row(i)).sum();
                    ds.row(i) = a.row(i).cwiseProduct((da.row(i).array() - dot).matrix());
                }
                ds *= scale;
                dq.block(base, h * dh, W, dh) += ds * c.k.block(base, h * dh, W, dh);
                dk.block(base, h * dh, W, dh) +=
                    ds.transpose() * c.q.block(base, h * dh, W, dh);
            }
        }

        MatX<T> xh = c.ln1.x_hat;  // rebuild LN1 output without storing it
        for (Eigen::Index i = 0; i < xh.rows(); ++i)
            xh.row(i) = xh.row(i).cwiseProduct(L.ln1_g.row(0)) + L.ln1_b.row(0);
        G.wq += xh.transpose() * dq;
        G.bq.row(0) += dq.colwise().sum();
        G.wk += xh.transpose() * dk;
        G.bk.row(0) += dk.colwise().sum();
        G.wv += xh.transpose() * dv;
        G.bv.row(0) += dv.colwise().sum();
        MatX<T> d_xh = dq * L.wq.transpose() + dk * L.wk.transpose() + dv * L.wv.transpose();
        dx = d_mid;  // residual branch
        dx += detail::layer_norm_backward(d_xh, L.ln1_g, c.ln1, G.ln1_g, G.ln1_b);
    }

    if (cache.drop_embed.size()) dx = dx.cwiseProduct(cache.drop_embed);
    for (int s = 0; s < batch.batch; ++s)
        for (int i = 0; i < W; ++i) {
            const int row = s * W + i;
            grads.embedding.row(batch.piece_ids[static_cast<std::size_t>(row)]) += dx.row(row);
            grads.positional.row(i) += dx.row(row);
        }
    return grads;
}

// Gradients of the word-classification loss wrt everything, given the
// upstream gradient of that loss wrt the gathered logits.
template <typename T>
inline ModelParams<T> backward(const ModelParams<T>& params, ForwardCache<T>& cache,
                               const MatX<T>& dlogits) {
    const Batch& batch = cache.batch;
    MatX<T> d_hidden = MatX<T>::Zero(batch.rows(), params.config.d_model);
    const MatX<T> d_gathered = dlogits * params.cls_w.transpose();
    for (int w = 0; w < batch.num_words(); ++w)
        d_hidden.row(batch.word_rows[static_cast<std::size_t>(w)]) += d_gathered.row(w);

    MatX<T> d_cls_w = cache.gathered.transpose() * dlogits;
    MatX<T> d_cls_b = dlogits.colwise().sum();
    ModelParams<T> grads = encoder_backward(params, cache, d_hidden);
    grads.cls_w = std::move(d_cls_w);
    grads.cls_b = std::move(d_cls_b);
    return grads;
}

}  // namespace punctr
