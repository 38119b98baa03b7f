// Sliding-window planning and decoding: exhaustive tiling properties, an
// independent one-window-at-a-time oracle, and edge geometry.
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "punctr/decode.hpp"
#include "punctr/encode.hpp"
#include "punctr/model.hpp"
#include "punctr/rng.hpp"

using namespace punctr;

namespace {

// Asserts the documented contract of a window plan for (total, spec).
void check_plan(int total, const WindowSpec& spec) {
    const auto plan = plan_windows(total, spec);
    if (total == 0) {
        REQUIRE(plan.empty());
        return;
    }
    REQUIRE_FALSE(plan.empty());
    REQUIRE(plan.front().keep_start == 0);
    REQUIRE(plan.back().keep_end == total);
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const WindowPlan& p = plan[i];
        CAPTURE(total, spec.window, spec.left_overlap, spec.right_overlap, i);
        REQUIRE(p.window_start >= 0);
        REQUIRE(p.window_end <= total);
        REQUIRE(p.window_end - p.window_start <= spec.window);
        REQUIRE(p.window_start <= p.keep_start);
        REQUIRE(p.keep_start < p.keep_end);  // every window keeps something
        REQUIRE(p.keep_end <= p.window_end);
        if (i > 0) {
            REQUIRE(p.keep_start == plan[i - 1].keep_end);  // contiguous tiling
            // Interior keeps have at least left_overlap context inside the window.
            REQUIRE(p.keep_start - p.window_start >= spec.left_overlap);
        }
        if (i + 1 < plan.size()) {
            // Interior keeps have exactly right_overlap lookahead.
            REQUIRE(p.window_end - p.keep_end == spec.right_overlap);
        } else {
            REQUIRE(p.window_end == total);
        }
    }
}

ModelConfig decode_config(int max_positions) {
    ModelConfig cfg;
    cfg.num_layers = 1;
    cfg.d_model = 16;
    cfg.num_heads = 2;
    cfg.d_ff = 24;
    cfg.vocab_size = 30;
    cfg.max_positions = max_positions;
    cfg.num_classes = 4;
    return cfg;
}

EncodedExample random_example(int num_words, Rng& rng) {
    EncodedExample ex;
    for (int w = 0; w < num_words; ++w) {
        const int pieces = 1 + static_cast<int>(rng.uniform_index(3));
        for (int i = 0; i < pieces; ++i)
            ex.piece_ids.push_back(3 + static_cast<int>(rng.uniform_index(27)));
        ex.last_piece_index.push_back(static_cast<int>(ex.piece_ids.size()) - 1);
        ex.labels.push_back(PunctLabel::NONE);
    }
    return ex;
}

// Reference decoder: one window at a time, no batching. Each word is labeled
// by the window whose keep range contains its last piece.
std::vector<PunctLabel> reference_decode(const ModelParams<double>& params,
                                         const EncodedExample& ex, const WindowSpec& spec) {
    const int total = static_cast<int>(ex.piece_ids.size());
    std::vector<PunctLabel> out(ex.last_piece_index.size(), PunctLabel::NONE);
    for (const WindowPlan& p : plan_windows(total, spec)) {
        EncodedExample win;
        win.piece_ids.assign(ex.piece_ids.begin() + p.window_start,
                             ex.piece_ids.begin() + p.window_end);
        // Every piece is its own "word" so logits cover all positions.
        for (int i = 0; i < p.window_end - p.window_start; ++i) {
            win.last_piece_index.push_back(i);
            win.labels.push_back(PunctLabel::NONE);
        }
        ForwardCache<double> cache;
        const MatX<double> logits =
            forward(params, make_batch(std::vector<EncodedExample>{win}), false, cache);
        for (std::size_t w = 0; w < ex.last_piece_index.size(); ++w) {
            const int pos = ex.last_piece_index[w];
            if (pos >= p.keep_start && pos < p.keep_end) {
                const Eigen::Index row = pos - p.window_start;
                int best = 0;
                for (Eigen::Index j = 1; j < logits.cols(); ++j)
                    if (logits(row, j) > logits(row, best)) best = static_cast<int>(j);
                out[w] = static_cast<PunctLabel>(best);
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("window plans tile every length for a sweep of geometries") {
    for (const int W : {8, 9, 12, 16, 24, 33, 64}) {
        // All valid overlap pairs for the smaller windows, a diagonal sample
        // for the larger ones.
        for (int lo = 0; lo < W; ++lo)
            for (int ro = 0; lo + ro < W; ro += (W > 16 ? 3 : 1)) {
                WindowSpec spec{W, lo, ro};
                for (int total : {1, 2, W - 1, W, W + 1, 2 * W - 1, 2 * W, 3 * W + 7, 400})
                    if (total >= 1) check_plan(total, spec);
            }
    }
}

TEST_CASE("window plan geometry matches a hand-worked example") {
    // W=10, Lo=3, Ro=2 gives step 5; for 18 pieces the plan is three windows:
    // [0,10) keep [0,8), [5,15) keep [8,13), and the end-anchored [8,18)
    // keep [13,18), whose kept span retains 5 >= Lo pieces of left context.
    const auto plan = plan_windows(18, WindowSpec{10, 3, 2});
    REQUIRE(plan.size() == 3);
    REQUIRE(plan[0].window_start == 0);
    REQUIRE(plan[0].window_end == 10);
    REQUIRE(plan[0].keep_start == 0);
    REQUIRE(plan[0].keep_end == 8);
    REQUIRE(plan[1].window_start == 5);
    REQUIRE(plan[1].window_end == 15);
    REQUIRE(plan[1].keep_start == 8);
    REQUIRE(plan[1].keep_end == 13);
    REQUIRE(plan[2].window_start == 8);
    REQUIRE(plan[2].window_end == 18);
    REQUIRE(plan[2].keep_start == 13);
    REQUIRE(plan[2].keep_end == 18);
}

TEST_CASE("zero overlaps produce disjoint windows") {
    const auto plan = plan_windows(10, WindowSpec{4, 0, 0});
    REQUIRE(plan.size() == 3);
    REQUIRE(plan[0].window_start == 0);
    REQUIRE(plan[0].keep_end == 4);
    REQUIRE(plan[1].window_start == 4);
    REQUIRE(plan[1].keep_end == 8);
    REQUIRE(plan[2].window_start == 6);  // anchored to the end
    REQUIRE(plan[2].keep_start == 8);
    REQUIRE(plan[2].keep_end == 10);
}

TEST_CASE("window spec validation and the comparison geometry") {
    REQUIRE_THROWS_AS(plan_windows(10, WindowSpec{0, 0, 0}), ConfigError);
    REQUIRE_THROWS_AS(plan_windows(10, WindowSpec{8, -1, 0}), ConfigError);
    REQUIRE_THROWS_AS(plan_windows(10, WindowSpec{8, 0, -1}), ConfigError);
    REQUIRE_THROWS_AS(plan_windows(10, WindowSpec{8, 5, 3}), ConfigError);
    REQUIRE_THROWS_AS(plan_windows(-1, WindowSpec{8, 2, 2}), ConfigError);
    REQUIRE(plan_windows(0, WindowSpec{8, 2, 2}).empty());

    const WindowSpec half = half_window_spec(120);
    REQUIRE(half.window == 120);
    REQUIRE(half.step() == 60);
    REQUIRE(half.left_overlap == 30);
    REQUIRE(half.right_overlap == 30);
    const WindowSpec odd = half_window_spec(7);
    REQUIRE(odd.step() == 3);
    REQUIRE(odd.left_overlap + odd.right_overlap == 4);
    REQUIRE_NOTHROW(half_window_spec(1).validate());
    for (int w = 1; w <= 130; ++w) REQUIRE_NOTHROW(half_window_spec(w).validate());
}

TEST_CASE("a sequence that fits in one window decodes exactly like a plain forward") {
    Rng rng(17);
    const auto params = init_params<double>(decode_config(32), 55);
    const EncodedExample ex = random_example(9, rng);  // at most 27 pieces
    REQUIRE(ex.piece_ids.size() <= 32);

    const WindowSpec spec{32, 8, 4};
    const std::vector<PunctLabel> windowed = decode_example(params, ex, spec);

    ForwardCache<double> cache;
    const MatX<double> logits =
        forward(params, make_batch(std::vector<EncodedExample>{ex}), false, cache);
    REQUIRE(windowed.size() == ex.last_piece_index.size());
    for (std::size_t w = 0; w < windowed.size(); ++w) {
        int best = 0;
        for (Eigen::Index j = 1; j < logits.cols(); ++j)
            if (logits(static_cast<Eigen::Index>(w), j) > logits(static_cast<Eigen::Index>(w), best))
                best = static_cast<int>(j);
        REQUIRE(windowed[w] == static_cast<PunctLabel>(best));
    }
}

TEST_CASE("sliding decode matches the one-window-at-a-time reference") {
    Rng rng(23);
    const auto params = init_params<double>(decode_config(24), 91);
    const WindowSpec spec{16, 5, 3};
    for (int trial = 0; trial < 10; ++trial) {
        const EncodedExample ex = random_example(10 + static_cast<int>(rng.uniform_index(40)), rng);
        const auto got = decode_example(params, ex, spec);
        const auto want = reference_decode(params, ex, spec);
        REQUIRE(got == want);
    }
}

TEST_CASE("batching windows does not change predictions") {
    Rng rng(29);
    const auto params = init_params<double>(decode_config(24), 14);
    const WindowSpec spec{16, 4, 4};
    std::vector<EncodedExample> docs;
    for (int d = 0; d < 6; ++d)
        docs.push_back(random_example(5 + static_cast<int>(rng.uniform_index(30)), rng));
    docs.push_back(EncodedExample{});  // empty document stays empty

    const auto one_by_one = decode_many(params, docs, spec, /*max_batch_windows=*/1);
    const auto batched = decode_many(params, docs, spec, /*max_batch_windows=*/64);
    REQUIRE(one_by_one == batched);
    REQUIRE(batched.back().empty());
    for (std::size_t d = 0; d + 1 < docs.size(); ++d) {
        REQUIRE(batched[d].size() == docs[d].last_piece_index.size());
        REQUIRE(batched[d] == decode_example(params, docs[d], spec));
    }
}

TEST_CASE("decode rejects an oversized window and a bad batch limit") {
    Rng rng(31);
    const auto params = init_params<double>(decode_config(16), 1);
    const EncodedExample ex = random_example(4, rng);
    REQUIRE_THROWS_AS(decode_example(params, ex, WindowSpec{17, 4, 4}), ConfigError);
    REQUIRE_THROWS_AS(decode_many(params, {ex}, WindowSpec{16, 4, 4}, 0), ConfigError);
}

TEST_CASE("argmax ties resolve to the smallest class index") {
    MatX<double> m(3, 4);
    m << 1.0, 1.0, 0.5, 1.0,   // tie between 0, 1, 3
         0.0, 0.0, 0.0, 0.0,   // all equal
         -1.0, -0.5, -0.5, -2.0;  // tie between 1 and 2
    REQUIRE(detail::argmax_row(m, 0) == 0);
    REQUIRE(detail::argmax_row(m, 1) == 0);
    REQUIRE(detail::argmax_row(m, 2) == 1);
}
