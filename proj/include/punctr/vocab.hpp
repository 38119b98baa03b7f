#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "punctr/corpus.hpp"
#include "punctr/errors.hpp"
#include "punctr/text.hpp"

namespace punctr {

// Subword inventory: specials, a single-codepoint fallback layer covering
// every character seen at build time, and the most frequent whole words.
// Encoding is greedy longest-match, so any string encodes to >= 1 piece per
// word; characters never seen at build time map to UNK.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kMask = 2;
    static constexpr const char* kSpecials[3] = {"<pad>", "<unk>", "<mask>"};

    Vocabulary() = default;

    int size() const { return static_cast<int>(pieces_.size()); }
    const std::string& piece(int id) const { return pieces_.at(static_cast<std::size_t>(id)); }
    const std::vector<std::string>& pieces() const { return pieces_; }

    int id_of(std::string_view piece) const {
        auto it = ids_.find(std::string(piece));
        return it == ids_.end() ? -1 : it->second;
    }

    // Greedy longest byte-prefix match. All pieces end on codepoint
    // boundaries, so matches never split a character.
    std::vector<int> encode_word(std::string_view word) const {
        std::vector<int> out;
        std::size_t i = 0;
        while (i < word.size()) {
            const std::size_t max_len = std::min(max_piece_bytes_, word.size() - i);
            int match = -1;
            std::size_t match_len = 0;
            for (std::size_t len = max_len; len >= 1; --len) {
                const int id = id_of(word.substr(i, len));
                if (id >= 0) {
                    match = id;
                    match_len = len;
                    break;
                }
            }
            if (match < 0) {
                out.push_back(kUnk);
                i += utf8_len(word, i);
            } else {
                out.push_back(match);
                i += match_len;
            }
        }
        if (out.empty()) out.push_back(kUnk);  // degenerate empty token
        return out;
    }

    std::string decode_pieces(const std::vector<int>& ids) const {
        std::string out;
        for (int id : ids) out += piece(id);
        return out;
    }

    std::uint64_t hash() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& p : pieces_) {
            h = fnv1a(p, h);
            h = fnv1a("\n", h);
        }
        return h;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot write vocabulary: " + path);
        for (const auto& p : pieces_) out << p << '\n';
    }

    static Vocabulary load(const std::string& path) {
        Vocabulary v;
        for (const std::string& line : split_lines(read_file(path))) v.add_piece(line);
        if (v.size() < 3 || v.piece(kPad) != kSpecials[0] || v.piece(kUnk) != kSpecials[1] ||
            v.piece(kMask) != kSpecials[2])
            throw DataError("vocabulary file missing specials header: " + path);
        return v;
    }

    // Builder used by build_vocabulary and tests.
    void add_piece(const std::string& p) {
        if (ids_.count(p)) return;
        ids_.emplace(p, size());
        pieces_.push_back(p);
        max_piece_bytes_ = std::max(max_piece_bytes_, p.size());
    }

private:
    std::vector<std::string> pieces_;
    std::unordered_map<std::string, int> ids_;
    std::size_t max_piece_bytes_ = 1;
};

// Frequency-ranked vocabulary over a token stream: specials, then every
// distinct codepoint (the fallback layer), then whole words with
// frequency >= min_freq ranked by (count desc, word asc) until max_size.
// Cutoff ties therefore keep the lexicographically smaller word.
inline Vocabulary build_vocabulary(const std::vector<std::string>& tokens, int max_size,
                                   int min_freq = 1) {
    if (tokens.empty()) throw DataError("build_vocabulary: empty corpus");
    if (min_freq < 1) throw ConfigError("build_vocabulary: min_freq must be >= 1");

    std::unordered_map<std::string, std::int64_t> freq;
    std::unordered_map<std::string, bool> chars;
    for (const auto& w : tokens) {
        ++freq[w];
        for (const auto& c : utf8_chars(w)) chars.emplace(c, true);
    }

    std::vector<std::string> fallback;
    fallback.reserve(chars.size());
    for (const auto& [c, _] : chars) fallback.push_back(c);
    std::sort(fallback.begin(), fallback.end());

    const int floor_size = 3 + static_cast<int>(fallback.size());
    if (max_size < floor_size + 1)
        throw ConfigError("vocab max_size " + std::to_string(max_size) +
                          " cannot hold specials + " + std::to_string(fallback.size()) +
                          " fallback characters (need >= " + std::to_string(floor_size + 1) + ")");

    Vocabulary v;
    for (const char* s : Vocabulary::kSpecials) v.add_piece(s);
    for (const auto& c : fallback) v.add_piece(c);

    std::vector<std::pair<std::string, std::int64_t>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    for (const auto& [word, count] : ranked) {
        if (v.size() >= max_size) break;
        if (count < min_freq) break;
        v.add_piece(word);  // no-op for single-codepoint words already present
    }
    return v;
}

inline Vocabulary build_vocabulary(const std::vector<LabeledExample>& data, int max_size,
                                   int min_freq = 1) {
    std::vector<std::string> tokens;
    for (const auto& ex : data) tokens.insert(tokens.end(), ex.words.begin(), ex.words.end());
    return build_vocabulary(tokens, max_size, min_freq);
}

}  // namespace punctr
