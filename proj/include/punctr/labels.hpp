#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "punctr/errors.hpp"

namespace punctr {

// Per-word punctuation decision. NONE means "no mark after this word" and is
// always class 0; the remaining classes depend on the active label set.
enum class PunctLabel : std::uint8_t {
    NONE = 0,
    COMMA = 1,
    PERIOD = 2,
    QUESTION = 3,
    ENUM_COMMA = 4,
};

inline const char* label_name(PunctLabel l) {
    switch (l) {
        case PunctLabel::NONE: return "NONE";
        case PunctLabel::COMMA: return "COMMA";
        case PunctLabel::PERIOD: return "PERIOD";
        case PunctLabel::QUESTION: return "QUESTION";
        case PunctLabel::ENUM_COMMA: return "ENUM_COMMA";
    }
    return "?";
}

enum class LabelMode : std::uint8_t {
    English4,  // NONE, COMMA, PERIOD, QUESTION
    Chinese5,  // + ENUM_COMMA; accepts full-width marks, renders them
};

// The active label inventory for one run. Fixes K, the mark characters that
// are stripped from raw text, and the canonical character used when
// re-rendering each label.
class LabelSet {
public:
    explicit LabelSet(LabelMode mode = LabelMode::English4) : mode_(mode) {
        marks_ = {{",", PunctLabel::COMMA},
                  {".", PunctLabel::PERIOD},
                  {"?", PunctLabel::QUESTION}};
        if (mode == LabelMode::English4) {
            render_ = {"", ",", ".", "?"};
        } else {
            marks_.push_back({"，", PunctLabel::COMMA});     // ，
            marks_.push_back({"。", PunctLabel::PERIOD});    // 。
            marks_.push_back({"？", PunctLabel::QUESTION});  // ？
            marks_.push_back({"、", PunctLabel::ENUM_COMMA});  // 、
            render_ = {"", "，", "。", "？", "、"};
        }
    }

    static LabelSet from_name(std::string_view name) {
        if (name == "english4") return LabelSet(LabelMode::English4);
        if (name == "chinese5") return LabelSet(LabelMode::Chinese5);
        throw ConfigError("unknown label set: " + std::string(name) +
                          " (expected english4 or chinese5)");
    }

    LabelMode mode() const { return mode_; }
    const char* name() const {
        return mode_ == LabelMode::English4 ? "english4" : "chinese5";
    }

    // Number of classes, NONE included.
    int num_classes() const { return mode_ == LabelMode::English4 ? 4 : 5; }

    // Labels other than NONE, in class-index order.
    std::vector<PunctLabel> punct_classes() const {
        std::vector<PunctLabel> out{PunctLabel::COMMA, PunctLabel::PERIOD,
                                    PunctLabel::QUESTION};
        if (mode_ == LabelMode::Chinese5) out.push_back(PunctLabel::ENUM_COMMA);
        return out;
    }

    bool contains(PunctLabel l) const {
        return static_cast<int>(l) < num_classes();
    }

    // If the codepoint at the front of `ch` is one of this set's marks,
    // returns its label; NONE otherwise.
    PunctLabel mark_for(std::string_view ch) const {
        for (const auto& m : marks_)
            if (m.first == ch) return m.second;
        return PunctLabel::NONE;
    }

    bool is_mark(std::string_view ch) const { return mark_for(ch) != PunctLabel::NONE; }

    // Canonical character appended after a word carrying this label.
    const std::string& render_char(PunctLabel l) const {
        return render_[static_cast<std::size_t>(l)];
    }

    static PunctLabel parse_name(std::string_view name) {
        if (name == "NONE") return PunctLabel::NONE;
        if (name == "COMMA") return PunctLabel::COMMA;
        if (name == "PERIOD") return PunctLabel::PERIOD;
        if (name == "QUESTION") return PunctLabel::QUESTION;
        if (name == "ENUM_COMMA") return PunctLabel::ENUM_COMMA;
        throw DataError("unknown label name: " + std::string(name));
    }

private:
    LabelMode mode_;
    std::vector<std::pair<std::string, PunctLabel>> marks_;
    std::vector<std::string> render_;
};

}  // namespace punctr
