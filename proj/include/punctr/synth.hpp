#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "punctr/corpus.hpp"
#include "punctr/errors.hpp"
#include "punctr/rng.hpp"

namespace punctr {

// Synthetic benchmark where punctuation is a deterministic-plus-noise
// function of trigger words, so a sequence labeler can learn it and the
// Bayes ceiling is known by construction:
//   - a comma follows word t iff word t+1 is a connector (fires with
//     comma_fire_rate; stray commas appear elsewhere at stray_comma_rate),
//   - every sentence ends in PERIOD or QUESTION; it ends in QUESTION iff its
//     FIRST word is a question starter (flipped to PERIOD at
//     question_flip_rate), which plants a long-range left-context dependency
//     that sliding-window decoding must preserve.
// Content words follow a Zipf draw so a small labeled sample leaves the tail
// of the vocabulary under-trained; that is the headroom self-training on a
// larger unlabeled pool exploits.
struct SynthConfig {
    int content_types = 3000;
    int comma_trigger_types = 40;
    int question_starter_types = 6;
    int statement_starter_types = 10;
    double question_sentence_rate = 0.3;
    double mid_trigger_rate = 0.10;  // chance a mid-sentence slot draws a connector
    double comma_fire_rate = 0.95;
    double stray_comma_rate = 0.005;
    double question_flip_rate = 0.03;
    double zipf_exponent = 0.8;
    int min_sentence_words = 5;
    int max_sentence_words = 24;
    int min_doc_sentences = 1;
    int max_doc_sentences = 3;

    void validate() const {
        if (content_types < 1 || comma_trigger_types < 1 || question_starter_types < 1 ||
            statement_starter_types < 1)
            throw ConfigError("synthetic vocabulary sizes must be >= 1");
        for (double p : {question_sentence_rate, mid_trigger_rate, comma_fire_rate,
                         stray_comma_rate, question_flip_rate})
            if (p < 0.0 || p > 1.0) throw ConfigError("synthetic rates must be in [0, 1]");
        if (min_sentence_words < 2 || max_sentence_words < min_sentence_words)
            throw ConfigError("invalid sentence length range");
        if (min_doc_sentences < 1 || max_doc_sentences < min_doc_sentences)
            throw ConfigError("invalid document length range");
    }
};

class SynthGenerator {
  public:
    SynthGenerator(const SynthConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {
        cfg_.validate();
        cum_.resize(static_cast<std::size_t>(cfg_.content_types));
        double total = 0.0;
        for (int i = 0; i < cfg_.content_types; ++i) {
            total += 1.0 / std::pow(static_cast<double>(i + 1), cfg_.zipf_exponent);
            cum_[static_cast<std::size_t>(i)] = total;
        }
        for (double& c : cum_) c /= total;
    }

    LabeledExample next_document() {
        LabeledExample doc;
        doc.source = Source::HUMAN;
        const int sentences =
            cfg_.min_doc_sentences +
            static_cast<int>(rng_.uniform_index(static_cast<std::uint64_t>(
                cfg_.max_doc_sentences - cfg_.min_doc_sentences + 1)));
        for (int s = 0; s < sentences; ++s) append_sentence(doc);
        return doc;
    }

    // Generates documents until at least target_words words are emitted.
    std::vector<LabeledExample> corpus(long target_words) {
        std::vector<LabeledExample> out;
        long words = 0;
        while (words < target_words) {
            out.push_back(next_document());
            words += static_cast<long>(out.back().words.size());
        }
        return out;
    }

  private:
    enum class Slot { CONTENT, TRIGGER, QSTART, SSTART };

    std::string name(Slot slot, int index) const {
        char buf[24];
        switch (slot) {
            case Slot::CONTENT: std::snprintf(buf, sizeof(buf), "tok%04d", index); break;
            case Slot::TRIGGER: std::snprintf(buf, sizeof(buf), "conn%02d", index); break;
            case Slot::QSTART: std::snprintf(buf, sizeof(buf), "qw%d", index); break;
            case Slot::SSTART: std::snprintf(buf, sizeof(buf), "sw%d", index); break;
        }
        return buf;
    }

    int zipf_index() {
        const double u = rng_.uniform();
        int lo = 0, hi = cfg_.content_types - 1;
        while (lo < hi) {
            const int mid = (lo + hi) / 2;
            if (cum_[static_cast<std::size_t>(mid)] < u)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }

    void append_sentence(LabeledExample& doc) {
        const int len = cfg_.min_sentence_words +
                        static_cast<int>(rng_.uniform_index(static_cast<std::uint64_t>(
                            cfg_.max_sentence_words - cfg_.min_sentence_words + 1)));
        const bool question = rng_.bernoulli(cfg_.question_sentence_rate);

        std::vector<Slot> slots(static_cast<std::size_t>(len), Slot::CONTENT);
        std::vector<std::string> words(static_cast<std::size_t>(len));
        slots[0] = question ? Slot::QSTART : Slot::SSTART;
        words[0] = question
                       ? name(Slot::QSTART, static_cast<int>(rng_.uniform_index(
                                                static_cast<std::uint64_t>(cfg_.question_starter_types))))
                       : name(Slot::SSTART, static_cast<int>(rng_.uniform_index(
                                                static_cast<std::uint64_t>(cfg_.statement_starter_types))));
        for (int t = 1; t < len; ++t) {
            if (rng_.bernoulli(cfg_.mid_trigger_rate)) {
                slots[static_cast<std::size_t>(t)] = Slot::TRIGGER;
                words[static_cast<std::size_t>(t)] =
                    name(Slot::TRIGGER, static_cast<int>(rng_.uniform_index(
                                            static_cast<std::uint64_t>(cfg_.comma_trigger_types))));
            } else {
                words[static_cast<std::size_t>(t)] = name(Slot::CONTENT, zipf_index());
            }
        }

        for (int t = 0; t < len; ++t) {
            PunctLabel label = PunctLabel::NONE;
            if (t == len - 1) {
                const bool flip = rng_.bernoulli(cfg_.question_flip_rate);
                label = (question && !flip) ? PunctLabel::QUESTION : PunctLabel::PERIOD;
            } else if (slots[static_cast<std::size_t>(t + 1)] == Slot::TRIGGER) {
                if (rng_.bernoulli(cfg_.comma_fire_rate)) label = PunctLabel::COMMA;
            } else if (rng_.bernoulli(cfg_.stray_comma_rate)) {
                label = PunctLabel::COMMA;
            }
            doc.words.push_back(words[static_cast<std::size_t>(t)]);
            doc.labels.push_back(label);
        }
    }

    SynthConfig cfg_;
    Rng rng_;
    std::vector<double> cum_;
};

inline std::vector<std::vector<std::string>> words_only(const std::vector<LabeledExample>& data) {
    std::vector<std::vector<std::string>> out;
    out.reserve(data.size());
    for (const auto& ex : data) out.push_back(ex.words);
    return out;
}

}  // namespace punctr
