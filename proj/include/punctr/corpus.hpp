#pragma once

#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "punctr/errors.hpp"
#include "punctr/labels.hpp"
#include "punctr/text.hpp"

namespace punctr {

enum class Source : std::uint8_t { HUMAN = 0, PSEUDO = 1 };

// One utterance: word tokens plus the punctuation decision after each word.
// Word tokens never contain a mark character of the active label set.
struct LabeledExample {
    std::vector<std::string> words;
    std::vector<PunctLabel> labels;
    Source source = Source::HUMAN;

    std::size_t size() const { return words.size(); }
};

struct ParseOptions {
    bool lowercase = true;  // ASCII-only folding
};

struct ParseStats {
    std::size_t lines_in = 0;
    std::size_t examples_out = 0;
    std::size_t skipped_empty = 0;   // lines with no word tokens
    std::size_t marks_kept = 0;      // one per run of consecutive marks
    std::size_t marks_collapsed = 0; // later marks of a run
    std::size_t marks_dropped = 0;   // marks with no preceding word
};

// Character-level scan of one line. A "run" is a maximal stretch of mark
// characters with no word character between them (whitespace does not break
// it); the first mark of a run labels the preceding word, the rest collapse.
inline LabeledExample parse_line(std::string_view line, const LabelSet& labels,
                                 const ParseOptions& opts, ParseStats& stats) {
    LabeledExample ex;
    std::string word;
    bool in_run = false;

    auto flush = [&] {
        if (word.empty()) return;
        ex.words.push_back(opts.lowercase ? ascii_lower(word) : word);
        ex.labels.push_back(PunctLabel::NONE);
        word.clear();
    };

    for (std::size_t i = 0; i < line.size();) {
        const std::size_t n = utf8_len(line, i);
        const std::string_view ch = line.substr(i, n);
        i += n;

        if (n == 1 && is_ascii_space(ch[0])) {
            flush();
            continue;
        }
        const PunctLabel mark = labels.mark_for(ch);
        if (mark != PunctLabel::NONE) {
            flush();
            if (ex.words.empty()) {
                ++stats.marks_dropped;
            } else if (in_run) {
                ++stats.marks_collapsed;
            } else {
                ex.labels.back() = mark;
                ++stats.marks_kept;
            }
            in_run = true;
            continue;
        }
        word += ch;
        in_run = false;
    }
    flush();
    return ex;
}

// Parses raw punctuated text (one utterance per line) into examples. Lines
// that strip down to nothing are skipped and counted, never errors.
inline std::vector<LabeledExample> parse_punctuated_text(
    std::string_view text, const LabelSet& labels, const ParseOptions& opts,
    ParseStats* stats_out = nullptr) {
    ParseStats stats;
    std::vector<LabeledExample> out;
    for (const std::string& line : split_lines(text)) {
        ++stats.lines_in;
        LabeledExample ex = parse_line(line, labels, opts, stats);
        if (ex.words.empty()) {
            ++stats.skipped_empty;
            continue;
        }
        ++stats.examples_out;
        out.push_back(std::move(ex));
    }
    if (stats_out) *stats_out = stats;
    return out;
}

// Inverse of parsing for well-behaved text: each word followed by its mark
// character (if any), words joined by single spaces.
inline std::string render_punctuated(const LabeledExample& ex, const LabelSet& labels) {
    std::string out;
    for (std::size_t i = 0; i < ex.words.size(); ++i) {
        if (i) out += ' ';
        out += ex.words[i];
        out += labels.render_char(ex.labels[i]);
    }
    return out;
}

// ---- file helpers ----

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> read_lines(const std::string& path) {
    return split_lines(read_file(path));
}

// ---- TSV dataset format: "token<TAB>label" rows, blank line between examples ----

inline void write_tsv(std::ostream& out, const std::vector<LabeledExample>& data) {
    for (const auto& ex : data) {
        for (std::size_t i = 0; i < ex.words.size(); ++i)
            out << ex.words[i] << '\t' << label_name(ex.labels[i]) << '\n';
        out << '\n';
    }
}

inline void write_tsv(const std::string& path, const std::vector<LabeledExample>& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    write_tsv(out, data);
}

inline std::vector<LabeledExample> parse_tsv(std::string_view text, const LabelSet& labels,
                                             Source source = Source::HUMAN) {
    std::vector<LabeledExample> out;
    LabeledExample cur;
    cur.source = source;
    std::size_t lineno = 0;
    for (const std::string& line : split_lines(text)) {
        ++lineno;
        if (line.empty()) {
            if (!cur.words.empty()) {
                out.push_back(std::move(cur));
                cur = LabeledExample{};
                cur.source = source;
            }
            continue;
        }
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw DataError("tsv line " + std::to_string(lineno) +
                            ": expected 'token<TAB>label', got: " + line);
        const PunctLabel l = LabelSet::parse_name(std::string_view(line).substr(tab + 1));
        if (!labels.contains(l))
            throw DataError("tsv line " + std::to_string(lineno) + ": label " +
                            std::string(label_name(l)) + " outside active label set " +
                            labels.name());
        cur.words.push_back(line.substr(0, tab));
        cur.labels.push_back(l);
    }
    if (!cur.words.empty()) out.push_back(std::move(cur));
    return out;
}

inline std::vector<LabeledExample> read_tsv(const std::string& path, const LabelSet& labels,
                                            Source source = Source::HUMAN) {
    return parse_tsv(read_file(path), labels, source);
}

}  // namespace punctr
