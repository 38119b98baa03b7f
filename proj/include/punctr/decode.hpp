#pragma once

#include <algorithm>
#include <vector>

#include "punctr/encode.hpp"
#include "punctr/errors.hpp"
#include "punctr/labels.hpp"
#include "punctr/model.hpp"

namespace punctr {

// Sliding-window geometry for decoding sequences longer than the model's
// receptive field. Consecutive windows overlap on both sides; the kept span
// of each window excludes left_overlap positions at its start and
// right_overlap positions at its end, so every kept position has context on
// both sides (except at the document edges, which have none to begin with).
struct WindowSpec {
    int window = 120;
    int left_overlap = 35;
    int right_overlap = 15;

    int step() const { return window - left_overlap - right_overlap; }

    void validate() const {
        if (window < 1) throw ConfigError("window must be >= 1");
        if (left_overlap < 0 || right_overlap < 0)
            throw ConfigError("window overlaps must be >= 0");
        if (left_overlap + right_overlap >= window)
            throw ConfigError("window overlaps must sum to less than the window size");
    }
};

// Comparison mode: plain overlapped chunking whose step is half the window,
// with the leftover overlap split evenly between the two sides.
inline WindowSpec half_window_spec(int window) {
    WindowSpec spec;
    spec.window = window;
    const int step = std::max(1, window / 2);
    spec.left_overlap = (window - step) / 2;
    spec.right_overlap = window - step - spec.left_overlap;
    return spec;
}

// One window over a piece sequence: the model sees [window_start, window_end),
// predictions are kept for positions in [keep_start, keep_end).
struct WindowPlan {
    int window_start = 0;
    int window_end = 0;
    int keep_start = 0;
    int keep_end = 0;
};

// Keep ranges of the returned plan tile [0, total) exactly: contiguous,
// disjoint, in order. The final window is anchored to the end of the
// sequence so its kept tail still has at least left_overlap positions of
// context inside the window.
inline std::vector<WindowPlan> plan_windows(int total, const WindowSpec& spec) {
    spec.validate();
    if (total < 0) throw ConfigError("sequence length must be >= 0");
    std::vector<WindowPlan> plan;
    if (total == 0) return plan;
    if (total <= spec.window) {
        plan.push_back({0, total, 0, total});
        return plan;
    }
    const int step = spec.step();
    plan.push_back({0, spec.window, 0, spec.window - spec.right_overlap});
    for (int start = step; start + spec.window < total; start += step) {
        plan.push_back({start, start + spec.window, start + spec.left_overlap,
                        start + spec.window - spec.right_overlap});
    }
    const int last_start = total - spec.window;
    const int resume = plan.back().keep_end;
    if (resume - last_start < spec.left_overlap)
        throw LogicError("window plan lost left context");
    plan.push_back({last_start, total, resume, total});
    return plan;
}

namespace detail {

template <typename T>
inline int argmax_row(const MatX<T>& m, Eigen::Index row) {
    int best = 0;
    for (Eigen::Index j = 1; j < m.cols(); ++j)
        if (m(row, j) > m(row, best)) best = static_cast<int>(j);
    return best;
}

struct WindowTask {
    int doc = 0;
    WindowPlan plan;
    int word_begin = 0;  // words of this doc whose last piece falls in the keep range
    int word_end = 0;
};

}  // namespace detail

// Labels every word of every example, running windows in batches of at most
// max_batch_windows. Each word is predicted exactly once, by the window whose
// keep range contains its last subword piece. Argmax ties resolve to the
// smallest class index.
template <typename T>
inline std::vector<std::vector<PunctLabel>> decode_many(const ModelParams<T>& params,
                                                        const std::vector<EncodedExample>& examples,
                                                        const WindowSpec& spec,
                                                        int max_batch_windows = 64) {
    if (max_batch_windows < 1) throw ConfigError("max_batch_windows must be >= 1");
    if (spec.window > params.config.max_positions)
        throw ConfigError("decode window exceeds the model's position table");

    std::vector<detail::WindowTask> tasks;
    for (std::size_t d = 0; d < examples.size(); ++d) {
        const auto& ex = examples[d];
        const int total = static_cast<int>(ex.piece_ids.size());
        auto plan = plan_windows(total, spec);
        int w = 0;
        const int num_words = static_cast<int>(ex.last_piece_index.size());
        for (const auto& p : plan) {
            detail::WindowTask task;
            task.doc = static_cast<int>(d);
            task.plan = p;
            while (w < num_words && ex.last_piece_index[static_cast<std::size_t>(w)] < p.keep_start)
                ++w;
            task.word_begin = w;
            while (w < num_words && ex.last_piece_index[static_cast<std::size_t>(w)] < p.keep_end)
                ++w;
            task.word_end = w;
            tasks.push_back(task);
        }
        if (w != num_words) throw LogicError("window plan left words unassigned");
    }

    std::vector<std::vector<PunctLabel>> out(examples.size());
    for (std::size_t d = 0; d < examples.size(); ++d)
        out[d].resize(examples[d].last_piece_index.size(), PunctLabel::NONE);

    std::size_t next = 0;
    while (next < tasks.size()) {
        const std::size_t batch_end =
            std::min(tasks.size(), next + static_cast<std::size_t>(max_batch_windows));
        Batch batch;
        batch.batch = static_cast<int>(batch_end - next);
        int width = 0;
        for (std::size_t t = next; t < batch_end; ++t)
            width = std::max(width, tasks[t].plan.window_end - tasks[t].plan.window_start);
        batch.width = width;
        batch.piece_ids.assign(static_cast<std::size_t>(batch.batch) * width, Vocabulary::kPad);
        batch.valid_len.resize(static_cast<std::size_t>(batch.batch));
        for (std::size_t t = next; t < batch_end; ++t) {
            const auto& task = tasks[t];
            const auto& ex = examples[static_cast<std::size_t>(task.doc)];
            const int seq = static_cast<int>(t - next);
            const int len = task.plan.window_end - task.plan.window_start;
            batch.valid_len[static_cast<std::size_t>(seq)] = len;
            for (int i = 0; i < len; ++i)
                batch.piece_ids[static_cast<std::size_t>(seq) * width + i] =
                    ex.piece_ids[static_cast<std::size_t>(task.plan.window_start + i)];
            for (int word = task.word_begin; word < task.word_end; ++word) {
                const int pos =
                    ex.last_piece_index[static_cast<std::size_t>(word)] - task.plan.window_start;
                batch.word_rows.push_back(seq * width + pos);
            }
        }

        ForwardCache<T> cache;
        const MatX<T> logits = forward(params, batch, /*train_mode=*/false, cache);
        Eigen::Index row = 0;
        for (std::size_t t = next; t < batch_end; ++t) {
            const auto& task = tasks[t];
            for (int word = task.word_begin; word < task.word_end; ++word, ++row)
                out[static_cast<std::size_t>(task.doc)][static_cast<std::size_t>(word)] =
                    static_cast<PunctLabel>(detail::argmax_row(logits, row));
        }
        next = batch_end;
    }
    return out;
}

template <typename T>
inline std::vector<PunctLabel> decode_example(const ModelParams<T>& params,
                                              const EncodedExample& example,
                                              const WindowSpec& spec,
                                              int max_batch_windows = 64) {
    return decode_many(params, {example}, spec, max_batch_windows).front();
}

}  // namespace punctr
