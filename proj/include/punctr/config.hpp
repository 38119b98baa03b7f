#pragma once

#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "punctr/corpus.hpp"
#include "punctr/decode.hpp"
#include "punctr/errors.hpp"
#include "punctr/labels.hpp"
#include "punctr/mlm.hpp"
#include "punctr/model.hpp"
#include "punctr/selftrain.hpp"
#include "punctr/text.hpp"

namespace punctr {

// Flat view of an INI-style config: "[section]" headers, "key = value" lines,
// '#' or ';' comments. Keys are stored as "section.key"; later duplicates win
// (that is how flag overrides layer on top of file values).
using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_ascii_space(s[b])) ++b;
    while (e > b && is_ascii_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace detail

inline ConfigMap parse_config_text(const std::string& text) {
    ConfigMap map;
    std::string section;
    int line_no = 0;
    for (const auto& raw : split_lines(text)) {
        ++line_no;
        std::string line = raw;
        const std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unterminated section header");
            section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(line_no) + ": empty section name");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (section.empty())
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": key outside any [section]");
        map[section + "." + key] = value;
    }
    return map;
}

inline ConfigMap read_config_file(const std::string& path) {
    return parse_config_text(read_file(path));
}

// "section.key=value" from a --set flag.
inline void apply_override(ConfigMap& map, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || assignment.find('.') == std::string::npos ||
        assignment.find('.') > eq)
        throw ConfigError("override must look like section.key=value: " + assignment);
    map[detail::trim(std::string_view(assignment).substr(0, eq))] =
        detail::trim(std::string_view(assignment).substr(eq + 1));
}

namespace detail {

struct ConfigReader {
    const ConfigMap& map;
    std::set<std::string> seen;

    const std::string* find(const std::string& key) {
        seen.insert(key);
        const auto it = map.find(key);
        return it == map.end() ? nullptr : &it->second;
    }
    std::string get_string(const std::string& key, const std::string& fallback) {
        const std::string* v = find(key);
        return v ? *v : fallback;
    }
    double get_double(const std::string& key, double fallback) {
        const std::string* v = find(key);
        if (!v) return fallback;
        try {
            std::size_t used = 0;
            const double x = std::stod(*v, &used);
            if (used != v->size()) throw std::invalid_argument("");
            return x;
        } catch (const std::exception&) {
            throw ConfigError("config value for " + key + " is not a number: " + *v);
        }
    }
    long long get_int(const std::string& key, long long fallback) {
        const std::string* v = find(key);
        if (!v) return fallback;
        try {
            std::size_t used = 0;
            const long long x = std::stoll(*v, &used);
            if (used != v->size()) throw std::invalid_argument("");
            return x;
        } catch (const std::exception&) {
            throw ConfigError("config value for " + key + " is not an integer: " + *v);
        }
    }
    bool get_bool(const std::string& key, bool fallback) {
        const std::string* v = find(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1") return true;
        if (*v == "false" || *v == "0") return false;
        throw ConfigError("config value for " + key + " is not a boolean: " + *v);
    }
    template <typename V, typename F>
    std::vector<V> get_list(const std::string& key, std::vector<V> fallback, F parse_one) {
        const std::string* v = find(key);
        if (!v) return fallback;
        std::vector<V> out;
        std::string item;
        for (std::size_t i = 0; i <= v->size(); ++i) {
            if (i == v->size() || (*v)[i] == ',') {
                const std::string t = trim(item);
                if (!t.empty()) out.push_back(parse_one(key, t));
                item.clear();
            } else {
                item.push_back((*v)[i]);
            }
        }
        if (out.empty()) throw ConfigError("config list " + key + " is empty");
        return out;
    }
    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) {
        return get_list<double>(key, std::move(fallback), [](const std::string& k, const std::string& t) {
            try {
                std::size_t used = 0;
                const double x = std::stod(t, &used);
                if (used != t.size()) throw std::invalid_argument("");
                return x;
            } catch (const std::exception&) {
                throw ConfigError("config list " + k + " has a non-number entry: " + t);
            }
        });
    }
    std::vector<int> get_ints(const std::string& key, std::vector<int> fallback) {
        return get_list<int>(key, std::move(fallback), [](const std::string& k, const std::string& t) {
            try {
                std::size_t used = 0;
                const int x = std::stoi(t, &used);
                if (used != t.size()) throw std::invalid_argument("");
                return x;
            } catch (const std::exception&) {
                throw ConfigError("config list " + k + " has a non-integer entry: " + t);
            }
        });
    }
    std::vector<std::uint64_t> get_seeds(const std::string& key,
                                         std::vector<std::uint64_t> fallback) {
        return get_list<std::uint64_t>(
            key, std::move(fallback), [](const std::string& k, const std::string& t) {
                try {
                    std::size_t used = 0;
                    const unsigned long long x = std::stoull(t, &used);
                    if (used != t.size()) throw std::invalid_argument("");
                    return static_cast<std::uint64_t>(x);
                } catch (const std::exception&) {
                    throw ConfigError("config list " + k + " has a non-integer entry: " + t);
                }
            });
    }
};

}  // namespace detail

// Everything a command needs to run: data paths, model shape, training and
// decoding knobs, label set, seeds, numeric precision. The label set fixes
// the class count everywhere; vocab_size is always derived from the
// vocabulary file, never configured.
struct RunConfig {
    std::string train_path, dev_path, test_path, unlabeled_path, vocab_path;
    ModelConfig model;
    STConfig st;
    WindowSpec window;
    std::string label_set = "english4";
    std::string precision = "f64";
    std::vector<std::uint64_t> seeds = {1};
    bool mlm_enabled = false;
    MlmConfig mlm;
    std::vector<double> tune_alphas = {0.25, 0.5, 1.0};
    std::vector<double> tune_beta1s = {0.0, 0.05, 0.1};
    std::vector<double> tune_beta2s = {0.05, 0.1, 0.2};
    std::vector<int> tune_left_overlaps = {0, 10, 20, 35, 50};
    std::vector<int> tune_right_overlaps = {0, 5, 15, 30};

    LabelSet labels() const { return LabelSet::from_name(label_set); }

    void validate() const {
        LabelSet::from_name(label_set);  // throws on unknown name
        if (precision != "f32" && precision != "f64")
            throw ConfigError("precision must be f32 or f64");
        if (seeds.empty()) throw ConfigError("seeds must not be empty");
        ModelConfig m = model;
        if (m.vocab_size == 0) m.vocab_size = 4;  // real size comes from the vocabulary file
        m.validate();
        st.validate();
        window.validate();
        mlm.validate();
        if (window.window > model.max_positions)
            throw ConfigError("window exceeds the model's position table");
        if (st.chunk_len > model.max_positions)
            throw ConfigError("chunk_len exceeds the model's position table");
    }
};

inline RunConfig make_run_config(const ConfigMap& map) {
    detail::ConfigReader r{map, {}};
    RunConfig c;
    c.train_path = r.get_string("data.train", "");
    c.dev_path = r.get_string("data.dev", "");
    c.test_path = r.get_string("data.test", "");
    c.unlabeled_path = r.get_string("data.unlabeled", "");
    c.vocab_path = r.get_string("data.vocab", "");

    c.model.num_layers = static_cast<int>(r.get_int("model.num_layers", c.model.num_layers));
    c.model.d_model = static_cast<int>(r.get_int("model.d_model", c.model.d_model));
    c.model.num_heads = static_cast<int>(r.get_int("model.num_heads", c.model.num_heads));
    c.model.d_ff = static_cast<int>(r.get_int("model.d_ff", c.model.d_ff));
    c.model.max_positions =
        static_cast<int>(r.get_int("model.max_positions", c.model.max_positions));
    c.model.dropout_rate = r.get_double("model.dropout", c.model.dropout_rate);

    c.st.alpha = r.get_double("train.alpha", c.st.alpha);
    c.st.beta_human = r.get_double("train.beta_human", c.st.beta_human);
    c.st.beta_pseudo = r.get_double("train.beta_pseudo", c.st.beta_pseudo);
    c.st.st_iterations = static_cast<int>(r.get_int("train.st_iterations", c.st.st_iterations));
    c.st.epochs = static_cast<int>(r.get_int("train.epochs", c.st.epochs));
    c.st.batch_size = static_cast<int>(r.get_int("train.batch_size", c.st.batch_size));
    c.st.learning_rate = r.get_double("train.learning_rate", c.st.learning_rate);
    c.st.seed = static_cast<std::uint64_t>(r.get_int("train.seed", static_cast<long long>(c.st.seed)));
    c.st.pseudo_ratio = r.get_double("train.pseudo_ratio", c.st.pseudo_ratio);
    c.st.chunk_len = static_cast<int>(r.get_int("train.chunk_len", c.st.chunk_len));
    c.st.chunk_overlap = static_cast<int>(r.get_int("train.chunk_overlap", c.st.chunk_overlap));
    c.st.selection_metric = r.get_string("train.selection_metric", c.st.selection_metric);

    c.window.window = static_cast<int>(r.get_int("window.window", c.window.window));
    c.window.left_overlap =
        static_cast<int>(r.get_int("window.left_overlap", c.window.left_overlap));
    c.window.right_overlap =
        static_cast<int>(r.get_int("window.right_overlap", c.window.right_overlap));

    c.label_set = r.get_string("run.label_set", c.label_set);
    c.precision = r.get_string("run.precision", c.precision);
    c.seeds = r.get_seeds("run.seeds", c.seeds);

    c.mlm_enabled = r.get_bool("mlm.enabled", c.mlm_enabled);
    c.mlm.mask_rate = r.get_double("mlm.mask_rate", c.mlm.mask_rate);
    c.mlm.seq_len = static_cast<int>(r.get_int("mlm.seq_len", c.mlm.seq_len));
    c.mlm.epochs = static_cast<int>(r.get_int("mlm.epochs", c.mlm.epochs));
    c.mlm.batch_size = static_cast<int>(r.get_int("mlm.batch_size", c.mlm.batch_size));
    c.mlm.learning_rate = r.get_double("mlm.learning_rate", c.mlm.learning_rate);
    c.mlm.seed = static_cast<std::uint64_t>(r.get_int("mlm.seed", static_cast<long long>(c.mlm.seed)));

    c.tune_alphas = r.get_doubles("tune.alphas", c.tune_alphas);
    c.tune_beta1s = r.get_doubles("tune.beta_humans", c.tune_beta1s);
    c.tune_beta2s = r.get_doubles("tune.beta_pseudos", c.tune_beta2s);
    c.tune_left_overlaps = r.get_ints("tune.left_overlaps", c.tune_left_overlaps);
    c.tune_right_overlaps = r.get_ints("tune.right_overlaps", c.tune_right_overlaps);

    // Derived, not configurable: the label set fixes the class count.
    c.model.num_classes = c.labels().num_classes();

    for (const auto& [key, value] : map) {
        if (!r.seen.count(key)) throw ConfigError("unknown config key: " + key);
        (void)value;
    }
    c.validate();
    return c;
}

inline RunConfig load_run_config(const std::string& path,
                                 const std::vector<std::string>& overrides = {}) {
    ConfigMap map = read_config_file(path);
    for (const auto& o : overrides) apply_override(map, o);
    return make_run_config(map);
}

// Canonical echo; parses back to an identical RunConfig and is written to
// every run directory so runs can be reproduced from it alone.
inline std::string render_run_config(const RunConfig& c) {
    std::string out;
    char buf[256];
    auto kv = [&](const char* key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += "\n";
    };
    auto kvd = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        kv(key, buf);
    };
    auto kvi = [&](const char* key, long long v) { kv(key, std::to_string(v)); };
    out += "[data]\n";
    kv("train", c.train_path);
    kv("dev", c.dev_path);
    kv("test", c.test_path);
    kv("unlabeled", c.unlabeled_path);
    kv("vocab", c.vocab_path);
    out += "\n[model]\n";
    kvi("num_layers", c.model.num_layers);
    kvi("d_model", c.model.d_model);
    kvi("num_heads", c.model.num_heads);
    kvi("d_ff", c.model.d_ff);
    kvi("max_positions", c.model.max_positions);
    kvd("dropout", c.model.dropout_rate);
    out += "\n[train]\n";
    kvd("alpha", c.st.alpha);
    kvd("beta_human", c.st.beta_human);
    kvd("beta_pseudo", c.st.beta_pseudo);
    kvi("st_iterations", c.st.st_iterations);
    kvi("epochs", c.st.epochs);
    kvi("batch_size", c.st.batch_size);
    kvd("learning_rate", c.st.learning_rate);
    kvi("seed", static_cast<long long>(c.st.seed));
    kvd("pseudo_ratio", c.st.pseudo_ratio);
    kvi("chunk_len", c.st.chunk_len);
    kvi("chunk_overlap", c.st.chunk_overlap);
    kv("selection_metric", c.st.selection_metric);
    out += "\n[window]\n";
    kvi("window", c.window.window);
    kvi("left_overlap", c.window.left_overlap);
    kvi("right_overlap", c.window.right_overlap);
    out += "\n[run]\n";
    kv("label_set", c.label_set);
    kv("precision", c.precision);
    std::string seeds;
    for (std::size_t i = 0; i < c.seeds.size(); ++i)
        seeds += (i ? "," : "") + std::to_string(c.seeds[i]);
    kv("seeds", seeds);
    out += "\n[mlm]\n";
    kv("enabled", c.mlm_enabled ? "true" : "false");
    kvd("mask_rate", c.mlm.mask_rate);
    kvi("seq_len", c.mlm.seq_len);
    kvi("epochs", c.mlm.epochs);
    kvi("batch_size", c.mlm.batch_size);
    kvd("learning_rate", c.mlm.learning_rate);
    kvi("seed", static_cast<long long>(c.mlm.seed));
    out += "\n[tune]\n";
    auto list_d = [&](const char* key, const std::vector<double>& xs) {
        std::string v;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s%.17g", i ? "," : "", xs[i]);
            v += buf;
        }
        kv(key, v);
    };
    auto list_i = [&](const char* key, const std::vector<int>& xs) {
        std::string v;
        for (std::size_t i = 0; i < xs.size(); ++i) v += (i ? "," : "") + std::to_string(xs[i]);
        kv(key, v);
    };
    list_d("alphas", c.tune_alphas);
    list_d("beta_humans", c.tune_beta1s);
    list_d("beta_pseudos", c.tune_beta2s);
    list_i("left_overlaps", c.tune_left_overlaps);
    list_i("right_overlaps", c.tune_right_overlaps);
    return out;
}

}  // namespace punctr
