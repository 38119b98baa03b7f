#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "punctr/adam.hpp"
#include "punctr/encode.hpp"
#include "punctr/errors.hpp"
#include "punctr/loss.hpp"
#include "punctr/model.hpp"
#include "punctr/rng.hpp"
#include "punctr/vocab.hpp"

namespace punctr {

// Masked-token pretraining of the encoder on unpunctuated text. The
// vocabulary-sized prediction head lives outside ModelParams and is dropped
// when the encoder moves on to punctuation training.
struct MlmConfig {
    double mask_rate = 0.15;
    int seq_len = 120;  // pieces per training segment
    int epochs = 2;
    int batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;

    void validate() const {
        if (mask_rate < 0.0 || mask_rate > 1.0) throw ConfigError("mask_rate must be in [0, 1]");
        if (seq_len < 1) throw ConfigError("seq_len must be >= 1");
        if (epochs < 0) throw ConfigError("epochs must be >= 0");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    }
};

template <typename T>
struct MlmHead {
    MatX<T> w;  // [d_model, vocab]
    MatX<T> b;  // [1, vocab]
};

template <typename T>
struct MlmResult {
    ModelParams<T> params;
    MlmHead<T> head;
    std::vector<double> epoch_loss;
};

// Hard-splits each example's piece stream into segments of at most seq_len.
inline std::vector<std::vector<int>> mlm_segments(
    const std::vector<std::vector<std::string>>& corpus, const Vocabulary& vocab, int seq_len) {
    std::vector<std::vector<int>> segments;
    for (const auto& words : corpus) {
        const EncodedExample ex = encode_words(words, vocab);
        for (std::size_t at = 0; at < ex.piece_ids.size(); at += static_cast<std::size_t>(seq_len)) {
            const std::size_t end =
                std::min(ex.piece_ids.size(), at + static_cast<std::size_t>(seq_len));
            segments.emplace_back(ex.piece_ids.begin() + static_cast<std::ptrdiff_t>(at),
                                  ex.piece_ids.begin() + static_cast<std::ptrdiff_t>(end));
        }
    }
    return segments;
}

namespace detail {

// Batch with mask-rate positions selected as prediction targets; of those,
// 80% become <mask>, 10% a random non-special piece, 10% stay unchanged.
// target row i predicts original id targets[i].
struct MlmBatch {
    Batch batch;
    std::vector<int> targets;
};

inline MlmBatch build_mlm_batch(const std::vector<const std::vector<int>*>& segments,
                                double mask_rate, int vocab_size, Rng& rng) {
    MlmBatch out;
    Batch& b = out.batch;
    b.batch = static_cast<int>(segments.size());
    for (const auto* s : segments) b.width = std::max(b.width, static_cast<int>(s->size()));
    b.piece_ids.assign(static_cast<std::size_t>(b.batch) * b.width, Vocabulary::kPad);
    for (int s = 0; s < b.batch; ++s) {
        const std::vector<int>& seg = *segments[static_cast<std::size_t>(s)];
        b.valid_len.push_back(static_cast<int>(seg.size()));
        for (std::size_t i = 0; i < seg.size(); ++i) {
            const std::size_t flat = static_cast<std::size_t>(s) * b.width + i;
            int id = seg[i];
            if (rng.uniform() < mask_rate) {
                out.targets.push_back(id);
                b.word_rows.push_back(static_cast<int>(flat));
                const double kind = rng.uniform();
                if (kind < 0.8)
                    id = Vocabulary::kMask;
                else if (kind < 0.9)
                    id = 3 + static_cast<int>(
                                 rng.uniform_index(static_cast<std::uint64_t>(vocab_size - 3)));
            }
            b.piece_ids[flat] = id;
        }
    }
    return out;
}

// Mean masked-token loss over one prepared batch; fills dlogits when given.
template <typename T>
inline double mlm_batch_loss(const MatX<T>& gathered, const MlmHead<T>& head,
                             const std::vector<int>& targets, MatX<T>* dlogits_out,
                             MatX<T>* logits_out) {
    MatX<T> logits = gathered * head.w;
    logits.rowwise() += head.b.row(0);
    const int n = static_cast<int>(targets.size());
    MatX<T> dlogits = MatX<T>::Zero(n, logits.cols());
    double loss_sum = 0.0;
    for (int i = 0; i < n; ++i)
        loss_sum += softmax_xent_row<T>(logits.row(i), targets[static_cast<std::size_t>(i)], 0.0,
                                        dlogits.row(i));
    if (dlogits_out) *dlogits_out = std::move(dlogits);
    if (logits_out) *logits_out = std::move(logits);
    return loss_sum / n;
}

}  // namespace detail

// Mean masked-prediction loss on held-out segments with deterministic
// masking; used to check that pretraining actually learned something.
template <typename T>
inline double mlm_heldout_loss(const ModelParams<T>& params, const MlmHead<T>& head,
                               const std::vector<std::vector<int>>& segments,
                               const MlmConfig& cfg, std::uint64_t mask_seed) {
    cfg.validate();
    Rng rng(mask_seed);
    double loss_sum = 0.0;
    long count = 0;
    for (std::size_t at = 0; at < segments.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t end =
            std::min(segments.size(), at + static_cast<std::size_t>(cfg.batch_size));
        std::vector<const std::vector<int>*> items;
        for (std::size_t i = at; i < end; ++i) items.push_back(&segments[i]);
        auto masked = detail::build_mlm_batch(items, cfg.mask_rate, params.config.vocab_size, rng);
        if (masked.targets.empty()) continue;
        ForwardCache<T> cache;
        forward(params, masked.batch, /*train_mode=*/false, cache);
        const double mean =
            detail::mlm_batch_loss<T>(cache.gathered, head, masked.targets, nullptr, nullptr);
        loss_sum += mean * static_cast<double>(masked.targets.size());
        count += static_cast<long>(masked.targets.size());
    }
    return count ? loss_sum / static_cast<double>(count) : 0.0;
}

template <typename T>
inline MlmResult<T> pretrain_mlm(const std::vector<std::vector<std::string>>& corpus,
                                 const Vocabulary& vocab, const ModelConfig& model_config,
                                 const MlmConfig& cfg) {
    cfg.validate();
    model_config.validate();
    if (model_config.vocab_size != static_cast<int>(vocab.size()))
        throw ConfigError("model vocab_size does not match the vocabulary");
    if (cfg.seq_len > model_config.max_positions)
        throw ConfigError("seq_len exceeds the model's position table");
    auto segments = mlm_segments(corpus, vocab, cfg.seq_len);
    if (segments.empty()) throw DataError("pretraining corpus is empty");

    MlmResult<T> result{init_params<T>(model_config, cfg.seed), {}, {}};
    ModelParams<T>& params = result.params;
    const int d = model_config.d_model;
    const int v = model_config.vocab_size;

    Rng root(cfg.seed);
    Rng head_rng = root.fork(1);
    Rng shuffle_rng = root.fork(2);
    Rng mask_rng = root.fork(3);
    Rng dropout_rng = root.fork(4);

    result.head.w.resize(d, v);
    fill_uniform(result.head.w, head_rng, 1.0 / std::sqrt(static_cast<double>(d)));
    result.head.b = MatX<T>::Zero(1, v);

    AdamState<T> state(params);
    AdamConfig adam_cfg;
    const int nseg = static_cast<int>(segments.size());
    const int steps_per_epoch = (nseg + cfg.batch_size - 1) / cfg.batch_size;
    adam_cfg.total_steps = static_cast<long>(cfg.epochs) * steps_per_epoch;
    MatX<T> m_w = MatX<T>::Zero(d, v), v_w = MatX<T>::Zero(d, v);
    MatX<T> m_b = MatX<T>::Zero(1, v), v_b = MatX<T>::Zero(1, v);

    std::vector<int> order(segments.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        long token_count = 0;
        for (int at = 0; at < nseg; at += cfg.batch_size) {
            const int take = std::min(cfg.batch_size, nseg - at);
            std::vector<const std::vector<int>*> items;
            for (int i = 0; i < take; ++i)
                items.push_back(&segments[static_cast<std::size_t>(order[static_cast<std::size_t>(at + i)])]);
            auto masked = detail::build_mlm_batch(items, cfg.mask_rate, v, mask_rng);
            if (masked.targets.empty()) continue;  // nothing to predict, no update

            ForwardCache<T> cache;
            forward(params, masked.batch, /*train_mode=*/true, cache, &dropout_rng);
            MatX<T> dlogits;
            const double mean_loss = detail::mlm_batch_loss<T>(cache.gathered, result.head,
                                                               masked.targets, &dlogits, nullptr);
            if (!std::isfinite(mean_loss))
                throw TrainingError("pretraining diverged: non-finite loss");
            const int n = static_cast<int>(masked.targets.size());
            dlogits *= static_cast<T>(1.0 / n);

            MatX<T> d_head_w = cache.gathered.transpose() * dlogits;
            MatX<T> d_head_b = dlogits.colwise().sum();
            const MatX<T> d_gathered = dlogits * result.head.w.transpose();
            MatX<T> d_hidden = MatX<T>::Zero(masked.batch.rows(), d);
            for (int i = 0; i < n; ++i)
                d_hidden.row(masked.batch.word_rows[static_cast<std::size_t>(i)]) +=
                    d_gathered.row(i);

            ModelParams<T> grads = encoder_backward(params, cache, d_hidden);
            const double lr = optimizer_step(params, grads, state, cfg.learning_rate, adam_cfg);
            adam_update_tensor(result.head.w, d_head_w, m_w, v_w, state.step, lr, adam_cfg);
            adam_update_tensor(result.head.b, d_head_b, m_b, v_b, state.step, lr, adam_cfg);

            loss_sum += mean_loss * n;
            token_count += n;
        }
        result.epoch_loss.push_back(token_count ? loss_sum / static_cast<double>(token_count)
                                                : 0.0);
    }
    return result;
}

}  // namespace punctr
