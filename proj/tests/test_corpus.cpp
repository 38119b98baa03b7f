// Text parsing, rendering and the TSV dataset format.
#include <map>
#include <string>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "punctr/corpus.hpp"
#include "punctr/rng.hpp"

using namespace punctr;

namespace {

// Independent word/mark scanner used as a parsing oracle. Walks the line
// character by character: word characters extend the current word, a mark
// labels the most recent word unless that word already carries one, and
// whitespace only separates words. Written against the format description,
// not against the library code.
struct RefParse {
    std::vector<std::string> words;
    std::vector<PunctLabel> labels;
};

RefParse reference_parse(const std::string& line, const LabelSet& labels, bool lowercase) {
    RefParse out;
    bool last_word_labeled = true;  // no word yet, marks before any word are dropped
    std::size_t i = 0;
    while (i < line.size()) {
        const std::size_t n = utf8_len(line, i);
        const std::string ch = line.substr(i, n);
        if (n == 1 && is_ascii_space(ch[0])) {
            i += n;
            continue;
        }
        const PunctLabel mark = labels.mark_for(ch);
        if (mark != PunctLabel::NONE) {
            if (!last_word_labeled) {
                out.labels.back() = mark;
                last_word_labeled = true;
            }
            i += n;
            continue;
        }
        // Word character: extend a word until space or mark.
        std::string word;
        while (i < line.size()) {
            const std::size_t m = utf8_len(line, i);
            const std::string c = line.substr(i, m);
            if ((m == 1 && is_ascii_space(c[0])) || labels.is_mark(c)) break;
            word += c;
            i += m;
        }
        if (lowercase) word = ascii_lower(std::move(word));
        out.words.push_back(word);
        out.labels.push_back(PunctLabel::NONE);
        last_word_labeled = false;
    }
    return out;
}

std::string random_messy_line(Rng& rng, const LabelSet& labels) {
    static const std::vector<std::string> pool = {"alpha", "beta", "Gamma", "delta9", "e"};
    std::string line;
    const int tokens = 1 + static_cast<int>(rng.uniform_index(12));
    for (int t = 0; t < tokens; ++t) {
        const double kind = rng.uniform();
        if (kind < 0.25) {
            line += labels.render_char(static_cast<PunctLabel>(
                1 + rng.uniform_index(static_cast<std::uint64_t>(labels.num_classes() - 1))));
        } else {
            line += pool[rng.uniform_index(pool.size())];
        }
        if (rng.bernoulli(0.8)) line += rng.bernoulli(0.15) ? "  " : " ";
    }
    return line;
}

}  // namespace

TEST_CASE("plain english text parses into words and trailing-mark labels") {
    const LabelSet labels = LabelSet::from_name("english4");
    ParseStats stats;
    const LabeledExample ex = parse_line("Hello, world. Are you there?", labels, {}, stats);
    REQUIRE(ex.words == std::vector<std::string>{"hello", "world", "are", "you", "there"});
    REQUIRE(ex.labels == std::vector<PunctLabel>{PunctLabel::COMMA, PunctLabel::PERIOD,
                                                 PunctLabel::NONE, PunctLabel::NONE,
                                                 PunctLabel::QUESTION});
    REQUIRE(stats.marks_kept == 3);
    REQUIRE(stats.marks_dropped == 0);
}

TEST_CASE("mark runs collapse to the first mark and leading marks are dropped") {
    const LabelSet labels = LabelSet::from_name("english4");
    ParseStats stats;
    const LabeledExample ex = parse_line(", well,. fine ?!?", labels, {}, stats);
    // Leading comma has no word; "well" takes the comma, the period collapses.
    // "!" is not a mark character, so it starts a (strange) word token.
    REQUIRE(ex.words.size() == 3);
    REQUIRE(ex.words[0] == "well");
    REQUIRE(ex.labels[0] == PunctLabel::COMMA);
    REQUIRE(ex.words[1] == "fine");
    REQUIRE(ex.labels[1] == PunctLabel::QUESTION);
    REQUIRE(ex.words[2] == "!");
    REQUIRE(stats.marks_dropped >= 1);
    REQUIRE(stats.marks_collapsed >= 1);
}

TEST_CASE("chinese label set strips full-width marks and keeps the enumeration comma") {
    const LabelSet labels = LabelSet::from_name("chinese5");
    ParseStats stats;
    const LabeledExample ex = parse_line("你好，苹果、橘子。好吗？", labels, {}, stats);
    REQUIRE(ex.words == std::vector<std::string>{"你好", "苹果", "橘子", "好吗"});
    REQUIRE(ex.labels == std::vector<PunctLabel>{PunctLabel::COMMA, PunctLabel::ENUM_COMMA,
                                                 PunctLabel::PERIOD, PunctLabel::QUESTION});
}

TEST_CASE("parser agrees with an independent reference scanner on messy input") {
    for (const char* set_name : {"english4", "chinese5"}) {
        const LabelSet labels = LabelSet::from_name(set_name);
        Rng rng(20240818);
        for (int trial = 0; trial < 400; ++trial) {
            const std::string line = random_messy_line(rng, labels);
            ParseStats stats;
            const LabeledExample got = parse_line(line, labels, {}, stats);
            const RefParse want = reference_parse(line, labels, /*lowercase=*/true);
            INFO("line: [" << line << "]");
            REQUIRE(got.words == want.words);
            REQUIRE(got.labels == want.labels);
        }
    }
}

TEST_CASE("render then parse is the identity on well-formed examples") {
    const LabelSet labels = LabelSet::from_name("english4");
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        LabeledExample ex;
        const int n = 1 + static_cast<int>(rng.uniform_index(20));
        for (int i = 0; i < n; ++i) {
            ex.words.push_back("w" + std::to_string(rng.uniform_index(50)));
            ex.labels.push_back(static_cast<PunctLabel>(rng.uniform_index(4)));
        }
        ParseStats stats;
        const LabeledExample back = parse_line(render_punctuated(ex, labels), labels, {}, stats);
        REQUIRE(back.words == ex.words);
        REQUIRE(back.labels == ex.labels);
    }
}

TEST_CASE("multi-line parsing skips empty lines and counts them") {
    const LabelSet labels = LabelSet::from_name("english4");
    ParseStats stats;
    const auto data = parse_punctuated_text("one.\n\n  \ntwo, three?\n", labels, {}, &stats);
    REQUIRE(data.size() == 2);
    REQUIRE(stats.lines_in == 4);
    REQUIRE(stats.examples_out == 2);
    REQUIRE(stats.skipped_empty == 2);
    REQUIRE(data[1].words == std::vector<std::string>{"two", "three"});
}

TEST_CASE("case folding is optional and ASCII-only") {
    const LabelSet labels = LabelSet::from_name("english4");
    ParseOptions keep;
    keep.lowercase = false;
    ParseStats stats;
    REQUIRE(parse_line("MiXeD Case.", labels, keep, stats).words ==
            std::vector<std::string>{"MiXeD", "Case"});
    REQUIRE(parse_line("MiXeD Case.", labels, {}, stats).words ==
            std::vector<std::string>{"mixed", "case"});
}

TEST_CASE("tsv files round-trip examples, labels and document boundaries") {
    const LabelSet labels = LabelSet::from_name("english4");
    ParseStats stats;
    const auto data =
        parse_punctuated_text("first one, done.\nsecond doc here?\n", labels, {}, &stats);
    std::ostringstream out;
    write_tsv(out, data);
    const auto back = parse_tsv(out.str(), labels);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        REQUIRE(back[i].words == data[i].words);
        REQUIRE(back[i].labels == data[i].labels);
        REQUIRE(back[i].source == Source::HUMAN);
    }
}

TEST_CASE("tsv reader tags every example with the requested source") {
    const LabelSet labels = LabelSet::from_name("english4");
    const auto data = parse_tsv("a\tNONE\nb\tCOMMA\n\nc\tPERIOD\n", labels, Source::PSEUDO);
    REQUIRE(data.size() == 2);
    REQUIRE(data[0].source == Source::PSEUDO);
    REQUIRE(data[1].source == Source::PSEUDO);
}

TEST_CASE("tsv reader rejects malformed rows and out-of-set labels") {
    const LabelSet labels = LabelSet::from_name("english4");
    REQUIRE_THROWS_AS(parse_tsv("no_tab_here\n", labels), DataError);
    REQUIRE_THROWS_AS(parse_tsv("word\tNOT_A_LABEL\n", labels), DataError);
    // ENUM_COMMA parses as a label name but english4 does not contain it.
    REQUIRE_THROWS_AS(parse_tsv("word\tENUM_COMMA\n", labels), DataError);
}
