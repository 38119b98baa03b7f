#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "punctr/errors.hpp"
#include "punctr/labels.hpp"
#include "punctr/rng.hpp"

namespace punctr {

// Token counts for one class: how often it was predicted, how often it
// appears in gold, and how often those agree.
struct ClassCounts {
    long long tp = 0;
    long long pred = 0;
    long long gold = 0;

    double precision() const { return pred > 0 ? static_cast<double>(tp) / pred : 0.0; }
    double recall() const { return gold > 0 ? static_cast<double>(tp) / gold : 0.0; }
    double f1() const {
        const double p = precision();
        const double r = recall();
        return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
};

// Per-class and pooled scores. NONE is excluded everywhere: it is neither a
// positive class nor part of the pooled denominators. Pooled ("overall")
// precision/recall micro-average the counts; a macro average over the
// punctuation classes is available separately.
struct Metrics {
    int num_classes = 0;
    std::vector<ClassCounts> per_class;  // indexed by class id; slot 0 (NONE) stays zero
    ClassCounts overall;
    bool zero_denominator = false;  // overall pred or gold count was zero

    double macro_precision() const { return macro_of(&ClassCounts::precision); }
    double macro_recall() const { return macro_of(&ClassCounts::recall); }
    double macro_f1() const { return macro_of(&ClassCounts::f1); }

  private:
    double macro_of(double (ClassCounts::*fn)() const) const {
        if (num_classes <= 1) return 0.0;
        double sum = 0.0;
        for (int c = 1; c < num_classes; ++c) sum += (per_class[static_cast<std::size_t>(c)].*fn)();
        return sum / (num_classes - 1);
    }
};

inline Metrics score(const std::vector<std::vector<PunctLabel>>& pred,
                     const std::vector<std::vector<PunctLabel>>& gold, int num_classes) {
    if (pred.size() != gold.size())
        throw DataError("prediction and gold corpora have different sequence counts");
    Metrics m;
    m.num_classes = num_classes;
    m.per_class.resize(static_cast<std::size_t>(num_classes));
    for (std::size_t s = 0; s < pred.size(); ++s) {
        if (pred[s].size() != gold[s].size())
            throw DataError("length mismatch in sequence " + std::to_string(s));
        for (std::size_t t = 0; t < pred[s].size(); ++t) {
            const int p = static_cast<int>(pred[s][t]);
            const int g = static_cast<int>(gold[s][t]);
            if (p < 0 || p >= num_classes || g < 0 || g >= num_classes)
                throw DataError("label out of range in sequence " + std::to_string(s));
            if (p != 0) {
                ++m.per_class[static_cast<std::size_t>(p)].pred;
                ++m.overall.pred;
            }
            if (g != 0) {
                ++m.per_class[static_cast<std::size_t>(g)].gold;
                ++m.overall.gold;
            }
            if (p != 0 && p == g) {
                ++m.per_class[static_cast<std::size_t>(p)].tp;
                ++m.overall.tp;
            }
        }
    }
    m.zero_denominator = (m.overall.pred == 0) || (m.overall.gold == 0);
    return m;
}

namespace detail {

inline double micro_f1(long long tp, long long predc, long long goldc) {
    const double p = predc > 0 ? static_cast<double>(tp) / predc : 0.0;
    const double r = goldc > 0 ? static_cast<double>(tp) / goldc : 0.0;
    return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

}  // namespace detail

// Paired randomization test on the overall-F1 difference between two systems
// scored against the same gold. The pairing unit is the sequence: each trial
// swaps whole sequences between the systems with probability 1/2 and measures
// how often the shuffled |difference| reaches the observed one. Two-sided
// p-value with the standard +1 smoothing, so identical systems give p = 1.
inline double paired_significance(const std::vector<std::vector<PunctLabel>>& pred_a,
                                  const std::vector<std::vector<PunctLabel>>& pred_b,
                                  const std::vector<std::vector<PunctLabel>>& gold,
                                  int num_classes, int trials, std::uint64_t seed) {
    if (trials < 1) throw ConfigError("significance trials must be >= 1");
    const Metrics ma = score(pred_a, gold, num_classes);
    const Metrics mb = score(pred_b, gold, num_classes);

    struct Triple {
        long long tp = 0, pred = 0, gold = 0;
    };
    const std::size_t n = gold.size();
    std::vector<Triple> a(n), b(n);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = 0; t < gold[s].size(); ++t) {
            const int pa = static_cast<int>(pred_a[s][t]);
            const int pb = static_cast<int>(pred_b[s][t]);
            const int g = static_cast<int>(gold[s][t]);
            if (pa != 0) ++a[s].pred;
            if (pb != 0) ++b[s].pred;
            if (g != 0) {
                ++a[s].gold;
                ++b[s].gold;
            }
            if (pa != 0 && pa == g) ++a[s].tp;
            if (pb != 0 && pb == g) ++b[s].tp;
        }
    }

    const double observed =
        std::abs(detail::micro_f1(ma.overall.tp, ma.overall.pred, ma.overall.gold) -
                 detail::micro_f1(mb.overall.tp, mb.overall.pred, mb.overall.gold));

    Rng rng(seed);
    long long hits = 0;
    for (int trial = 0; trial < trials; ++trial) {
        Triple ta, tb;
        for (std::size_t s = 0; s < n; ++s) {
            const bool swap = rng.bernoulli(0.5);
            const Triple& xa = swap ? b[s] : a[s];
            const Triple& xb = swap ? a[s] : b[s];
            ta.tp += xa.tp;
            ta.pred += xa.pred;
            ta.gold += xa.gold;
            tb.tp += xb.tp;
            tb.pred += xb.pred;
            tb.gold += xb.gold;
        }
        const double diff = std::abs(detail::micro_f1(ta.tp, ta.pred, ta.gold) -
                                     detail::micro_f1(tb.tp, tb.pred, tb.gold));
        if (diff >= observed) ++hits;
    }
    return static_cast<double>(hits + 1) / (trials + 1);
}

// Key-value report, one line per value, fractions at full precision.
inline std::string metrics_report(const Metrics& m) {
    std::string out;
    char buf[256];
    auto emit = [&](const std::string& prefix, const ClassCounts& c) {
        std::snprintf(buf, sizeof(buf),
                      "%s.precision = %.17g\n%s.recall = %.17g\n%s.f1 = %.17g\n"
                      "%s.gold_count = %lld\n%s.pred_count = %lld\n",
                      prefix.c_str(), c.precision(), prefix.c_str(), c.recall(), prefix.c_str(),
                      c.f1(), prefix.c_str(), c.gold, prefix.c_str(), c.pred);
        out += buf;
    };
    for (int c = 1; c < m.num_classes; ++c)
        emit(label_name(static_cast<PunctLabel>(c)), m.per_class[static_cast<std::size_t>(c)]);
    emit("overall", m.overall);
    std::snprintf(buf, sizeof(buf),
                  "overall.macro_precision = %.17g\noverall.macro_recall = %.17g\n"
                  "overall.macro_f1 = %.17g\nzero_denominator = %s\n",
                  m.macro_precision(), m.macro_recall(), m.macro_f1(),
                  m.zero_denominator ? "true" : "false");
    out += buf;
    return out;
}

// Fixed-column table: one row per model, P/R/F1 (percent, one decimal) per
// punctuation class then overall, in the usual benchmark layout.
inline std::string metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows) {
    std::string out;
    if (rows.empty()) return out;
    const int k = rows.front().second.num_classes;
    char buf[64];
    const int name_width = 28;
    auto pad = [&](std::string s, int width) {
        if (static_cast<int>(s.size()) > width) s = s.substr(0, static_cast<std::size_t>(width));
        s.resize(static_cast<std::size_t>(width), ' ');
        return s;
    };
    out += pad("Model", name_width);
    for (int c = 1; c < k; ++c) out += pad(label_name(static_cast<PunctLabel>(c)), 18);
    out += pad("OVERALL", 18);
    out += "\n";
    out += pad("", name_width);
    for (int c = 1; c <= k; ++c) out += pad("P", 6) + pad("R", 6) + pad("F1", 6);
    out += "\n";
    for (const auto& [name, m] : rows) {
        out += pad(name, name_width);
        auto cell = [&](const ClassCounts& c) {
            std::snprintf(buf, sizeof(buf), "%5.1f %5.1f %5.1f ", 100.0 * c.precision(),
                          100.0 * c.recall(), 100.0 * c.f1());
            out += buf;
        };
        for (int c = 1; c < k; ++c) cell(m.per_class[static_cast<std::size_t>(c)]);
        cell(m.overall);
        out += "\n";
    }
    return out;
}

}  // namespace punctr
