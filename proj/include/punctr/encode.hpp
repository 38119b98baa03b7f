#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "punctr/corpus.hpp"
#include "punctr/errors.hpp"
#include "punctr/vocab.hpp"

namespace punctr {

// Model-ready view of an example. One entry of last_piece_index / labels per
// *labeled* word; a chunk may additionally carry unlabeled left-context
// pieces before its first labeled word.
struct EncodedExample {
    std::vector<int> piece_ids;
    std::vector<int> last_piece_index;  // strictly increasing, < piece_ids.size()
    std::vector<PunctLabel> labels;     // same length as last_piece_index
    Source source = Source::HUMAN;

    std::size_t num_pieces() const { return piece_ids.size(); }
    std::size_t num_words() const { return last_piece_index.size(); }
};

inline EncodedExample encode_words(const std::vector<std::string>& words,
                                   const Vocabulary& vocab) {
    EncodedExample out;
    for (const auto& w : words) {
        const std::vector<int> pieces = vocab.encode_word(w);
        out.piece_ids.insert(out.piece_ids.end(), pieces.begin(), pieces.end());
        out.last_piece_index.push_back(static_cast<int>(out.piece_ids.size()) - 1);
    }
    return out;
}

inline EncodedExample encode(const LabeledExample& ex, const Vocabulary& vocab) {
    if (ex.words.size() != ex.labels.size())
        throw DataError("encode: words/labels length mismatch");
    EncodedExample out = encode_words(ex.words, vocab);
    out.labels = ex.labels;
    out.source = ex.source;
    return out;
}

struct ChunkStats {
    std::size_t truncated_words = 0;  // single words longer than max_len
};

// Splits a full encoded example into chunks of at most max_len pieces. Label
// ownership is whole-word and partitions the input exactly; up to `overlap`
// pieces of word-aligned left context are prepended for prediction quality
// but carry no labels. A single word longer than max_len keeps only its
// final max_len pieces.
inline std::vector<EncodedExample> chunk_for_training(const EncodedExample& ex, int max_len,
                                                      int overlap,
                                                      ChunkStats* stats = nullptr) {
    if (max_len <= overlap || overlap < 0)
        throw ConfigError("chunk_for_training: need max_len > overlap >= 0");
    const std::size_t num_words = ex.num_words();
    if (num_words == 0) return {};
    if (ex.last_piece_index.back() + 1 != static_cast<int>(ex.num_pieces()))
        throw LogicError("chunk_for_training: expects an unchunked example");

    auto word_begin = [&](std::size_t w) {
        return w == 0 ? 0 : ex.last_piece_index[w - 1] + 1;
    };
    auto word_end = [&](std::size_t w) { return ex.last_piece_index[w] + 1; };

    if (static_cast<int>(ex.num_pieces()) <= max_len) return {ex};

    std::vector<EncodedExample> chunks;
    std::size_t a = 0;
    while (a < num_words) {
        // Word-aligned left context, at most `overlap` pieces.
        std::size_t ctx_first = a;
        while (ctx_first > 0 && word_begin(a) - word_begin(ctx_first - 1) <= overlap)
            --ctx_first;
        int ctx_len = word_begin(a) - word_begin(ctx_first);

        const int first_word_len = word_end(a) - word_begin(a);
        int start_piece;
        std::size_t b;
        if (first_word_len > max_len) {
            if (stats) ++stats->truncated_words;
            start_piece = word_end(a) - max_len;
            b = a + 1;
        } else {
            if (first_word_len > max_len - ctx_len) {
                ctx_first = a;  // context would crowd out the word itself
                ctx_len = 0;
            }
            start_piece = word_begin(ctx_first);
            b = a;
            while (b < num_words && word_end(b) - start_piece <= max_len) ++b;
        }

        EncodedExample chunk;
        chunk.source = ex.source;
        const int end_piece = word_end(b - 1);
        chunk.piece_ids.assign(ex.piece_ids.begin() + start_piece,
                               ex.piece_ids.begin() + end_piece);
        for (std::size_t w = a; w < b; ++w) {
            chunk.last_piece_index.push_back(std::max(0, ex.last_piece_index[w] - start_piece));
            chunk.labels.push_back(ex.labels[w]);
        }
        chunks.push_back(std::move(chunk));
        a = b;
    }
    return chunks;
}

}  // namespace punctr
