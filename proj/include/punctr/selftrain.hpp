#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "punctr/adam.hpp"
#include "punctr/corpus.hpp"
#include "punctr/decode.hpp"
#include "punctr/encode.hpp"
#include "punctr/errors.hpp"
#include "punctr/eval.hpp"
#include "punctr/loss.hpp"
#include "punctr/model.hpp"
#include "punctr/rng.hpp"
#include "punctr/vocab.hpp"

namespace punctr {

// Knobs for one training run and for the self-training loop around it.
// alpha weights the pseudo-data loss; beta_human / beta_pseudo are the
// label-smoothing factors applied to human and pseudo targets.
struct STConfig {
    double alpha = 0.5;
    double beta_human = 0.1;
    double beta_pseudo = 0.1;
    int st_iterations = 1;
    int epochs = 10;
    int batch_size = 32;
    double learning_rate = 3e-3;
    std::uint64_t seed = 1;
    double pseudo_ratio = 1.0;  // pseudo sub-batch size as a multiple of the human sub-batch
    int chunk_len = 120;        // max subword pieces per training chunk
    int chunk_overlap = 35;     // left-context pieces carried into continuation chunks
    std::string selection_metric = "overall_f1";

    void validate() const {
        if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
        if (beta_human < 0.0 || beta_human >= 1.0 || beta_pseudo < 0.0 || beta_pseudo >= 1.0)
            throw ConfigError("smoothing factors must be in [0, 1)");
        if (st_iterations < 1) throw ConfigError("st_iterations must be >= 1");
        if (epochs < 0) throw ConfigError("epochs must be >= 0");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
        if (pseudo_ratio < 0.0) throw ConfigError("pseudo_ratio must be >= 0");
        if (chunk_overlap < 0 || chunk_len <= chunk_overlap)
            throw ConfigError("chunk_len must exceed chunk_overlap >= 0");
        if (selection_metric != "overall_f1")
            throw ConfigError("unsupported selection metric: " + selection_metric);
    }
};

inline std::string echo_config(const STConfig& cfg, const WindowSpec& window, double beta_human,
                               double beta_pseudo, double alpha) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "alpha = %.17g\nbeta_human = %.17g\nbeta_pseudo = %.17g\n"
                  "st_iterations = %d\nepochs = %d\nbatch_size = %d\nlearning_rate = %.17g\n"
                  "seed = %llu\npseudo_ratio = %.17g\nchunk_len = %d\nchunk_overlap = %d\n"
                  "selection_metric = %s\nwindow = %d\nleft_overlap = %d\nright_overlap = %d\n",
                  alpha, beta_human, beta_pseudo, cfg.st_iterations, cfg.epochs, cfg.batch_size,
                  cfg.learning_rate, static_cast<unsigned long long>(cfg.seed), cfg.pseudo_ratio,
                  cfg.chunk_len, cfg.chunk_overlap, cfg.selection_metric.c_str(), window.window,
                  window.left_overlap, window.right_overlap);
    return buf;
}

// What one training run did: per-epoch losses and validation scores, which
// epoch's checkpoint was kept, and enough config to reproduce the run.
struct TrainReport {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_val_f1;
    std::vector<Metrics> epoch_val_metrics;
    int best_epoch = -1;  // -1 when no epoch was evaluated (epochs == 0)
    double best_val_f1 = 0.0;
    Metrics best_val_metrics;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
    std::string config_echo;
};

inline std::string report_text(const TrainReport& r) {
    std::string out;
    char buf[96];
    auto array_line = [&](const char* key, const std::vector<double>& xs) {
        out += key;
        out += " = [";
        for (std::size_t i = 0; i < xs.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s%.17g", i ? ", " : "", xs[i]);
            out += buf;
        }
        out += "]\n";
    };
    array_line("epoch_loss", r.epoch_loss);
    array_line("epoch_val_f1", r.epoch_val_f1);
    std::snprintf(buf, sizeof(buf), "best_epoch = %d\nbest_val_f1 = %.17g\n", r.best_epoch,
                  r.best_val_f1);
    out += buf;
    std::snprintf(buf, sizeof(buf), "wall_seconds = %.3f\nseed = %llu\n", r.wall_seconds,
                  static_cast<unsigned long long>(r.seed));
    out += buf;
    out += "[config]\n";
    out += r.config_echo;
    return out;
}

template <typename T>
struct TrainResult {
    ModelParams<T> params;  // checkpoint with the best validation score
    TrainReport report;
};

inline std::vector<EncodedExample> encode_and_chunk(const std::vector<LabeledExample>& data,
                                                    const Vocabulary& vocab, int chunk_len,
                                                    int chunk_overlap,
                                                    ChunkStats* stats = nullptr) {
    std::vector<EncodedExample> chunks;
    ChunkStats local;
    for (const auto& ex : data) {
        if (ex.words.empty()) continue;
        auto pieces = chunk_for_training(encode(ex, vocab), chunk_len, chunk_overlap, &local);
        for (auto& c : pieces) chunks.push_back(std::move(c));
    }
    if (stats) *stats = local;
    return chunks;
}

// Windowed decode of the full documents, scored against their gold labels.
template <typename T>
inline Metrics evaluate_model(const ModelParams<T>& params, const std::vector<LabeledExample>& data,
                              const Vocabulary& vocab, const WindowSpec& window) {
    std::vector<EncodedExample> encoded;
    std::vector<std::vector<PunctLabel>> gold;
    encoded.reserve(data.size());
    gold.reserve(data.size());
    for (const auto& ex : data) {
        encoded.push_back(encode(ex, vocab));
        gold.push_back(ex.labels);
    }
    const auto pred = decode_many(params, encoded, window);
    return score(pred, gold, params.config.num_classes);
}

namespace detail {

// One optimizer step. The objective is the weight-pooled mean over word
// positions: (sum human losses + alpha * sum pseudo losses) divided by
// (human count + alpha * pseudo count), so alpha = 1 reduces exactly to the
// plain mean over the pooled batch and alpha = 0 to the human-only mean.
template <typename T>
inline double train_step(ModelParams<T>& params, const Batch& batch, double alpha,
                         double beta_human, double beta_pseudo, AdamState<T>& state,
                         double base_lr, const AdamConfig& adam_cfg, Rng* dropout_rng) {
    ForwardCache<T> cache;
    MatX<T> logits = forward(params, batch, /*train_mode=*/true, cache, dropout_rng);
    const int n = batch.num_words();
    MatX<T> dlogits = MatX<T>::Zero(n, logits.cols());
    double weighted = 0.0;
    double weight_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const bool human = batch.word_source[static_cast<std::size_t>(i)] == Source::HUMAN;
        const double w = human ? 1.0 : alpha;
        if (w == 0.0) continue;
        const double beta = human ? beta_human : beta_pseudo;
        const double li = softmax_xent_row<T>(
            logits.row(i), static_cast<int>(batch.labels[static_cast<std::size_t>(i)]), beta,
            dlogits.row(i));
        if (w != 1.0) dlogits.row(i) *= static_cast<T>(w);
        weighted += w * li;
        weight_sum += w;
    }
    if (weight_sum == 0.0) return 0.0;  // nothing contributes; no update
    const double loss = weighted / weight_sum;
    if (!std::isfinite(loss)) throw TrainingError("training diverged: non-finite loss");
    dlogits *= static_cast<T>(1.0 / weight_sum);
    ModelParams<T> grads = backward(params, cache, dlogits);
    optimizer_step(params, grads, state, base_lr, adam_cfg);
    return loss;
}

template <typename T>
inline TrainResult<T> run_training(const std::vector<EncodedExample>& human_chunks,
                                   const std::vector<EncodedExample>& pseudo_chunks,
                                   const std::vector<LabeledExample>& dev,
                                   const Vocabulary& vocab, const ModelParams<T>& init,
                                   const STConfig& cfg, const WindowSpec& eval_window,
                                   double beta_human, double beta_pseudo, double alpha) {
    cfg.validate();
    eval_window.validate();
    if (human_chunks.empty()) throw DataError("training data is empty");
    if (dev.empty()) throw DataError("validation set is empty");
    for (const auto& ex : dev)
        if (ex.source != Source::HUMAN)
            throw DataError("validation data must be human-labeled");

    const auto start = std::chrono::steady_clock::now();
    TrainResult<T> result{init, {}};
    result.report.seed = cfg.seed;
    result.report.config_echo = echo_config(cfg, eval_window, beta_human, beta_pseudo, alpha);

    ModelParams<T> params = init;
    AdamState<T> state(params);
    AdamConfig adam_cfg;
    const int nh = static_cast<int>(human_chunks.size());
    const int steps_per_epoch = (nh + cfg.batch_size - 1) / cfg.batch_size;
    adam_cfg.total_steps = static_cast<long>(cfg.epochs) * steps_per_epoch;

    Rng root(cfg.seed);
    Rng shuffle_rng = root.fork(1);
    Rng dropout_rng = root.fork(2);
    Rng pseudo_rng = root.fork(3);

    std::vector<int> human_idx(static_cast<std::size_t>(nh));
    for (int i = 0; i < nh; ++i) human_idx[static_cast<std::size_t>(i)] = i;
    std::vector<int> pseudo_idx(pseudo_chunks.size());
    for (std::size_t i = 0; i < pseudo_idx.size(); ++i) pseudo_idx[i] = static_cast<int>(i);
    std::size_t pseudo_pos = pseudo_idx.size();  // forces a shuffle on first use

    double best_f1 = -1.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(human_idx);
        double loss_sum = 0.0;
        int steps = 0;
        for (int at = 0; at < nh; at += cfg.batch_size) {
            const int hsub = std::min(cfg.batch_size, nh - at);
            std::vector<const EncodedExample*> items;
            items.reserve(static_cast<std::size_t>(hsub) * 2);
            for (int i = 0; i < hsub; ++i)
                items.push_back(&human_chunks[static_cast<std::size_t>(
                    human_idx[static_cast<std::size_t>(at + i)])]);
            if (!pseudo_idx.empty()) {
                const int psub = static_cast<int>(std::lround(hsub * cfg.pseudo_ratio));
                for (int i = 0; i < psub; ++i) {
                    if (pseudo_pos == pseudo_idx.size()) {
                        pseudo_rng.shuffle(pseudo_idx);
                        pseudo_pos = 0;
                    }
                    items.push_back(&pseudo_chunks[static_cast<std::size_t>(
                        pseudo_idx[pseudo_pos++])]);
                }
            }
            const Batch batch = make_batch(items);
            loss_sum += train_step(params, batch, alpha, beta_human, beta_pseudo, state,
                                   cfg.learning_rate, adam_cfg, &dropout_rng);
            ++steps;
        }
        result.report.epoch_loss.push_back(steps ? loss_sum / steps : 0.0);

        const Metrics val = evaluate_model(params, dev, vocab, eval_window);
        const double f1 = val.overall.f1();
        result.report.epoch_val_f1.push_back(f1);
        result.report.epoch_val_metrics.push_back(val);
        if (f1 > best_f1) {
            best_f1 = f1;
            result.params = params;
            result.report.best_epoch = epoch;
            result.report.best_val_f1 = f1;
            result.report.best_val_metrics = val;
        }
    }

    result.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace detail

// Supervised training with optional label smoothing. Examples of either
// source are treated identically (weight 1, the same beta), so this is the
// pooled cross-entropy trainer; the self-training teacher and the plain
// baseline both use it.
template <typename T>
inline TrainResult<T> train_supervised(const std::vector<LabeledExample>& train_data,
                                       const std::vector<LabeledExample>& dev,
                                       const Vocabulary& vocab, const ModelParams<T>& init,
                                       const STConfig& cfg, const WindowSpec& eval_window,
                                       double beta = 0.0) {
    auto chunks = encode_and_chunk(train_data, vocab, cfg.chunk_len, cfg.chunk_overlap);
    return detail::run_training(chunks, {}, dev, vocab, init, cfg, eval_window, beta, beta, 1.0);
}

// Student training on human plus pseudo data with the discriminative
// objective. Each step draws one human sub-batch and one pseudo sub-batch
// (pseudo_ratio times as large), so both loss terms are present per step.
template <typename T>
inline TrainResult<T> train_student(const std::vector<LabeledExample>& human_data,
                                    const std::vector<LabeledExample>& pseudo_data,
                                    const std::vector<LabeledExample>& dev,
                                    const Vocabulary& vocab, const ModelParams<T>& init,
                                    const STConfig& cfg, const WindowSpec& eval_window) {
    for (const auto& ex : human_data)
        if (ex.source != Source::HUMAN)
            throw DataError("student human split contains a non-human example");
    for (const auto& ex : pseudo_data)
        if (ex.source != Source::PSEUDO)
            throw DataError("student pseudo split contains a non-pseudo example");
    auto human_chunks = encode_and_chunk(human_data, vocab, cfg.chunk_len, cfg.chunk_overlap);
    auto pseudo_chunks = encode_and_chunk(pseudo_data, vocab, cfg.chunk_len, cfg.chunk_overlap);
    return detail::run_training(human_chunks, pseudo_chunks, dev, vocab, init, cfg, eval_window,
                                cfg.beta_human, cfg.beta_pseudo, cfg.alpha);
}

// Labels unpunctuated word sequences with the model's argmax predictions.
// Long inputs go through the sliding-window decoder; outputs are flagged
// PSEUDO so downstream training weights and smooths them as pseudo data.
template <typename T>
inline std::vector<LabeledExample> pseudo_label(const ModelParams<T>& params,
                                                const std::vector<std::vector<std::string>>& unlabeled,
                                                const Vocabulary& vocab, const WindowSpec& window,
                                                int max_batch_windows = 64) {
    std::vector<EncodedExample> encoded;
    encoded.reserve(unlabeled.size());
    for (const auto& words : unlabeled) encoded.push_back(encode_words(words, vocab));
    const auto labels = decode_many(params, encoded, window, max_batch_windows);
    std::vector<LabeledExample> out;
    out.reserve(unlabeled.size());
    for (std::size_t i = 0; i < unlabeled.size(); ++i)
        out.push_back({unlabeled[i], labels[i], Source::PSEUDO});
    return out;
}

template <typename T>
struct SelfTrainOutcome {
    ModelParams<T> best_params;
    double best_val_f1 = 0.0;
    std::string best_stage;  // "teacher" or "student_iteration_k"
    TrainReport teacher_report;
    std::vector<TrainReport> student_reports;
    std::vector<double> student_val_f1;  // per iteration
};

// Teacher -> pseudo-label -> student, st_iterations times, the student of one
// iteration becoming the next teacher. Every student starts fresh from init
// (never from the teacher); the teacher itself is trained with beta_human
// smoothing. Returns the best checkpoint by validation F1 across the teacher
// and all students.
template <typename T>
inline SelfTrainOutcome<T> self_train_loop(const std::vector<LabeledExample>& human_train,
                                           const std::vector<LabeledExample>& dev,
                                           const std::vector<std::vector<std::string>>& unlabeled,
                                           const Vocabulary& vocab, const ModelParams<T>& init,
                                           const STConfig& cfg, const WindowSpec& window,
                                           std::vector<LabeledExample>* last_pseudo = nullptr) {
    cfg.validate();
    SelfTrainOutcome<T> outcome;
    auto teacher = train_supervised(human_train, dev, vocab, init, cfg, window, cfg.beta_human);
    outcome.teacher_report = teacher.report;
    outcome.best_params = teacher.params;
    outcome.best_val_f1 = teacher.report.best_val_f1;
    outcome.best_stage = "teacher";

    ModelParams<T> current = std::move(teacher.params);
    for (int it = 1; it <= cfg.st_iterations; ++it) {
        auto pseudo = pseudo_label(current, unlabeled, vocab, window);
        STConfig student_cfg = cfg;
        student_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(it));
        auto student = train_student(human_train, pseudo, dev, vocab, init, student_cfg, window);
        outcome.student_reports.push_back(student.report);
        outcome.student_val_f1.push_back(student.report.best_val_f1);
        if (student.report.best_val_f1 > outcome.best_val_f1) {
            outcome.best_val_f1 = student.report.best_val_f1;
            outcome.best_params = student.params;
            outcome.best_stage = "student_iteration_" + std::to_string(it);
        }
        current = std::move(student.params);
        if (last_pseudo && it == cfg.st_iterations) *last_pseudo = std::move(pseudo);
    }
    return outcome;
}

struct TuneEntry {
    double alpha = 0.0;
    double beta_human = 0.0;
    double beta_pseudo = 0.0;
    double val_f1 = 0.0;
};

// Exhaustive grid search over (alpha, beta_human, beta_pseudo) with one
// self-training round per point. Teachers depend only on beta_human, so each
// distinct beta_human trains one teacher and labels the unlabeled pool once.
// Leaderboard sorts by validation F1, ties broken toward the smaller alpha,
// then smaller beta_pseudo, then smaller beta_human.
template <typename T>
inline std::pair<STConfig, std::vector<TuneEntry>> tune_hyperparams(
    const std::vector<LabeledExample>& human_train, const std::vector<LabeledExample>& dev,
    const std::vector<std::vector<std::string>>& unlabeled, const Vocabulary& vocab,
    const ModelParams<T>& init, const STConfig& base, const WindowSpec& window,
    const std::vector<double>& alphas = {0.25, 0.5, 1.0},
    const std::vector<double>& beta1s = {0.0, 0.05, 0.1},
    const std::vector<double>& beta2s = {0.05, 0.1, 0.2}) {
    if (alphas.empty() || beta1s.empty() || beta2s.empty())
        throw ConfigError("hyperparameter grid is empty");

    struct TeacherRun {
        double beta_human;
        std::vector<LabeledExample> pseudo;
    };
    std::vector<TeacherRun> teachers;
    teachers.reserve(beta1s.size());  // keeps references from pseudo_for stable
    auto pseudo_for = [&](double beta_human) -> const std::vector<LabeledExample>& {
        for (const auto& t : teachers)
            if (t.beta_human == beta_human) return t.pseudo;
        auto teacher = train_supervised(human_train, dev, vocab, init, base, window, beta_human);
        teachers.push_back({beta_human, pseudo_label(teacher.params, unlabeled, vocab, window)});
        return teachers.back().pseudo;
    };

    std::vector<TuneEntry> board;
    for (double b1 : beta1s) {
        const auto& pseudo = pseudo_for(b1);
        for (double a : alphas) {
            for (double b2 : beta2s) {
                STConfig cfg = base;
                cfg.alpha = a;
                cfg.beta_human = b1;
                cfg.beta_pseudo = b2;
                cfg.seed = derive_seed(base.seed, 1);
                auto student = train_student(human_train, pseudo, dev, vocab, init, cfg, window);
                board.push_back({a, b1, b2, student.report.best_val_f1});
            }
        }
    }
    std::stable_sort(board.begin(), board.end(), [](const TuneEntry& x, const TuneEntry& y) {
        if (x.val_f1 != y.val_f1) return x.val_f1 > y.val_f1;
        if (x.alpha != y.alpha) return x.alpha < y.alpha;
        if (x.beta_pseudo != y.beta_pseudo) return x.beta_pseudo < y.beta_pseudo;
        return x.beta_human < y.beta_human;
    });
    STConfig best = base;
    best.alpha = board.front().alpha;
    best.beta_human = board.front().beta_human;
    best.beta_pseudo = board.front().beta_pseudo;
    return {best, board};
}

struct WindowTuneEntry {
    WindowSpec spec;
    double val_f1 = 0.0;
};

// Decode-time grid search over the two overlap sizes on a fixed model.
// Invalid combinations (overlaps not summing below the window) are skipped.
// Ties break toward the smaller total overlap, then smaller left overlap.
template <typename T>
inline std::pair<WindowSpec, std::vector<WindowTuneEntry>> tune_window(
    const ModelParams<T>& params, const std::vector<LabeledExample>& dev,
    const Vocabulary& vocab, int window, const std::vector<int>& left_overlaps,
    const std::vector<int>& right_overlaps) {
    std::vector<WindowTuneEntry> board;
    for (int lo : left_overlaps) {
        for (int ro : right_overlaps) {
            if (lo < 0 || ro < 0 || lo + ro >= window) continue;
            WindowSpec spec{window, lo, ro};
            const Metrics m = evaluate_model(params, dev, vocab, spec);
            board.push_back({spec, m.overall.f1()});
        }
    }
    if (board.empty()) throw ConfigError("window tuning grid has no valid (Lo, Ro) combination");
    std::stable_sort(board.begin(), board.end(),
                     [](const WindowTuneEntry& x, const WindowTuneEntry& y) {
                         if (x.val_f1 != y.val_f1) return x.val_f1 > y.val_f1;
                         const int sx = x.spec.left_overlap + x.spec.right_overlap;
                         const int sy = y.spec.left_overlap + y.spec.right_overlap;
                         if (sx != sy) return sx < sy;
                         return x.spec.left_overlap < y.spec.left_overlap;
                     });
    return {board.front().spec, board};
}

}  // namespace punctr
