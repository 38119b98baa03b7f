// punctr: command line front end for the punctuation toolkit.
//
// Subcommands cover the full workflow: synth (benchmark generation),
// prepare (raw text -> TSV + vocabulary), train (supervised), selftrain
// (teacher -> pseudo-label -> student), pseudo-label, decode (sliding
// window inference), eval (P/R/F1 + significance), tune (hyperparameter
// or window-overlap grids) and ablate (the five-row ladder).
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 training divergence, 4 internal error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "punctr/punctr.hpp"

namespace fs = std::filesystem;
using namespace punctr;

namespace {

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("failed while writing: " + path);
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

void require_key(const std::string& value, const char* key) {
    if (value.empty()) throw ConfigError(std::string("missing required config key: ") + key);
}

Vocabulary load_vocab(const RunConfig& cfg) {
    require_key(cfg.vocab_path, "data.vocab");
    return Vocabulary::load(cfg.vocab_path);
}

std::vector<LabeledExample> load_split(const std::string& path, const LabelSet& labels,
                                       const char* key, Source source = Source::HUMAN) {
    require_key(path, key);
    auto data = read_tsv(path, labels, source);
    if (data.empty()) throw DataError(std::string("no examples in ") + path);
    return data;
}

// Unlabeled text: one document per line; stray punctuation marks are
// stripped by the same scanner the labeled parser uses.
std::vector<std::vector<std::string>> load_unlabeled(const std::string& path,
                                                     const LabelSet& labels) {
    std::vector<std::vector<std::string>> out;
    ParseStats stats;
    ParseOptions opts;
    for (const auto& line : read_lines(path)) {
        LabeledExample ex = parse_line(line, labels, opts, stats);
        if (!ex.words.empty()) out.push_back(std::move(ex.words));
    }
    if (out.empty()) throw DataError("no usable documents in " + path);
    return out;
}

template <typename T>
ModelParams<T> load_ckpt(const std::string& path, const Vocabulary& vocab,
                         const LabelSet& labels) {
    std::uint64_t vocab_hash = 0;
    ModelParams<T> params = load_checkpoint<T>(path, &vocab_hash);
    if (vocab_hash != vocab.hash())
        throw DataError("checkpoint " + path + " was trained with a different vocabulary");
    if (params.config.num_classes != labels.num_classes())
        throw DataError("checkpoint " + path + " predicts " +
                        std::to_string(params.config.num_classes) + " classes but label set " +
                        labels.name() + " has " + std::to_string(labels.num_classes()));
    return params;
}

std::string quote_argv(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        const std::string a = argv[i];
        if (a.find(' ') != std::string::npos)
            s += '"' + a + '"';
        else
            s += a;
    }
    return s;
}

void write_run_files(const std::string& dir, const RunConfig& cfg, const std::string& invocation,
                     const std::string& extra = "") {
    ensure_dir(dir);
    write_text_file(dir + "/config.ini", render_run_config(cfg));
    std::string info = "invocation = " + invocation + "\n";
    if (!extra.empty()) info += extra;
    write_text_file(dir + "/run_info.txt", info);
}

// Initial weights for a training run: fresh random parameters, or the
// encoder left by masked-token pretraining when that is enabled.
template <typename T>
ModelParams<T> initial_params(const RunConfig& cfg, const Vocabulary& vocab,
                              const std::vector<std::vector<std::string>>& unlabeled,
                              std::uint64_t plain_seed, const MlmConfig& mlm_cfg,
                              std::vector<double>* mlm_epoch_loss = nullptr) {
    if (!cfg.mlm_enabled) return init_params<T>(cfg.model, plain_seed);
    if (unlabeled.empty()) throw ConfigError("mlm.enabled requires data.unlabeled");
    MlmResult<T> res = pretrain_mlm<T>(unlabeled, vocab, cfg.model, mlm_cfg);
    if (mlm_epoch_loss) *mlm_epoch_loss = res.epoch_loss;
    return res.params;
}

std::string pretrain_note(const std::vector<double>& epoch_loss) {
    std::string s = "mlm_epoch_loss = [";
    char buf[48];
    for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%s%.17g", i ? ", " : "", epoch_loss[i]);
        s += buf;
    }
    s += "]\n";
    return s;
}

std::vector<std::vector<PunctLabel>> label_rows(const std::vector<LabeledExample>& data) {
    std::vector<std::vector<PunctLabel>> rows;
    rows.reserve(data.size());
    for (const auto& ex : data) rows.push_back(ex.labels);
    return rows;
}

// Dispatches on the numeric precision string ("f32"/"f64").
template <typename F>
int with_precision(const std::string& precision, F&& f) {
    if (precision == "f32") return f(float{});
    if (precision == "f64") return f(double{});
    throw ConfigError("precision must be f32 or f64");
}

// Dispatches on a checkpoint's stored scalar width.
template <typename F>
int with_ckpt_precision(const std::string& path, F&& f) {
    const int width = checkpoint_precision(path);
    return width == 4 ? f(float{}) : f(double{});
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
    std::string out_dir;
    long train_words = 50000;
    long unlabeled_words = 500000;
    long dev_words = 8000;
    long test_words = 8000;
    long tune_dev_words = 12000;
    long tune_test_words = 12000;
    std::uint64_t seed = 1;
    std::string label_set = "english4";
};

int run_synth(const SynthArgs& a) {
    const LabelSet labels = LabelSet::from_name(a.label_set);
    ensure_dir(a.out_dir);

    SynthConfig short_docs;           // 1-3 sentences: training-sized documents
    SynthConfig long_docs;            // 30-50 sentences: stresses window decoding
    long_docs.min_doc_sentences = 30;
    long_docs.max_doc_sentences = 50;

    std::string report;
    char buf[160];
    auto make_split = [&](const char* name, const SynthConfig& cfg, long words,
                          std::uint64_t stream, bool strip_labels) {
        SynthGenerator gen(cfg, derive_seed(a.seed, stream));
        const auto docs = gen.corpus(words);
        long word_count = 0;
        std::vector<long> class_count(static_cast<std::size_t>(labels.num_classes()), 0);
        std::string text;
        for (const auto& doc : docs) {
            word_count += static_cast<long>(doc.words.size());
            for (PunctLabel l : doc.labels) ++class_count[static_cast<std::size_t>(l)];
            if (strip_labels) {
                for (std::size_t i = 0; i < doc.words.size(); ++i) {
                    if (i) text += ' ';
                    text += doc.words[i];
                }
                text += '\n';
            } else {
                text += render_punctuated(doc, labels);
                text += '\n';
            }
        }
        const std::string path = a.out_dir + "/" + name;
        write_text_file(path, text);
        std::snprintf(buf, sizeof(buf), "%s: %zu documents, %ld words", name, docs.size(),
                      word_count);
        std::cout << buf << "\n";
        report += buf;
        report += "\n";
        for (int c = 0; c < labels.num_classes(); ++c) {
            std::snprintf(buf, sizeof(buf), "  %s = %ld\n",
                          label_name(static_cast<PunctLabel>(c)), class_count[static_cast<std::size_t>(c)]);
            report += buf;
        }
    };

    make_split("train.txt", short_docs, a.train_words, 1, false);
    make_split("dev.txt", short_docs, a.dev_words, 2, false);
    make_split("test.txt", short_docs, a.test_words, 3, false);
    make_split("unlabeled.txt", short_docs, a.unlabeled_words, 4, true);
    make_split("tune_dev.txt", long_docs, a.tune_dev_words, 5, false);
    make_split("tune_test.txt", long_docs, a.tune_test_words, 6, false);

    std::snprintf(buf, sizeof(buf), "seed = %llu\nlabel_set = %s\n",
                  static_cast<unsigned long long>(a.seed), labels.name());
    report += buf;
    write_text_file(a.out_dir + "/synth_report.txt", report);
    return 0;
}

// ---------------------------------------------------------------------------
// prepare

struct PrepareArgs {
    std::string input;
    std::string out_dir;
    std::string vocab_reuse;  // parse against an existing vocabulary instead of building one
    std::string label_set = "english4";
    int vocab_size = 8000;
    int min_freq = 2;
    bool keep_case = false;
};

int run_prepare(const PrepareArgs& a) {
    const LabelSet labels = LabelSet::from_name(a.label_set);
    ParseOptions opts;
    opts.lowercase = !a.keep_case;
    ParseStats stats;
    const auto data = parse_punctuated_text(read_file(a.input), labels, opts, &stats);
    if (data.empty()) throw DataError("no examples parsed from " + a.input);
    const Vocabulary vocab = a.vocab_reuse.empty()
                                 ? build_vocabulary(data, a.vocab_size, a.min_freq)
                                 : Vocabulary::load(a.vocab_reuse);

    ensure_dir(a.out_dir);
    write_tsv(a.out_dir + "/data.tsv", data);
    if (a.vocab_reuse.empty()) vocab.save(a.out_dir + "/vocab.txt");

    long covered = 0, total = 0;
    std::vector<long> class_count(static_cast<std::size_t>(labels.num_classes()), 0);
    for (const auto& ex : data) {
        for (const auto& w : ex.words) {
            ++total;
            const auto pieces = vocab.encode_word(w);
            bool has_unk = false;
            for (int id : pieces) has_unk = has_unk || id == Vocabulary::kUnk;
            if (!has_unk) ++covered;
        }
        for (PunctLabel l : ex.labels) ++class_count[static_cast<std::size_t>(l)];
    }

    char buf[160];
    std::string report;
    std::snprintf(buf, sizeof(buf),
                  "lines_in = %zu\nexamples_out = %zu\nskipped_empty = %zu\n"
                  "marks_kept = %zu\nmarks_collapsed = %zu\nmarks_dropped = %zu\n",
                  stats.lines_in, stats.examples_out, stats.skipped_empty, stats.marks_kept,
                  stats.marks_collapsed, stats.marks_dropped);
    report += buf;
    std::snprintf(buf, sizeof(buf), "vocab_size = %d\nword_coverage = %.17g\n", vocab.size(),
                  total ? static_cast<double>(covered) / static_cast<double>(total) : 0.0);
    report += buf;
    for (int c = 0; c < labels.num_classes(); ++c) {
        std::snprintf(buf, sizeof(buf), "count.%s = %ld\n", label_name(static_cast<PunctLabel>(c)),
                      class_count[static_cast<std::size_t>(c)]);
        report += buf;
    }
    write_text_file(a.out_dir + "/prepare_report.txt", report);

    std::cout << "parsed " << data.size() << " examples (" << total << " words), vocabulary "
              << vocab.size() << " pieces\nwrote " << a.out_dir << "/data.tsv\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train / selftrain

struct RunArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool vanilla = false;  // selftrain only
};

RunConfig load_config(const RunArgs& a) {
    require_key(a.config_path, "--config");
    RunConfig cfg = load_run_config(a.config_path, a.overrides);
    if (a.seed_set) {
        cfg.st.seed = a.seed;
        cfg.validate();
    }
    return cfg;
}

template <typename T>
int run_train_t(const RunConfig& cfg_in, const RunArgs& a, const std::string& invocation) {
    RunConfig cfg = cfg_in;
    const LabelSet labels = cfg.labels();
    const Vocabulary vocab = load_vocab(cfg);
    cfg.model.vocab_size = vocab.size();
    cfg.validate();

    const auto train_data = load_split(cfg.train_path, labels, "data.train");
    const auto dev = load_split(cfg.dev_path, labels, "data.dev");
    std::vector<std::vector<std::string>> unlabeled;
    if (cfg.mlm_enabled) {
        require_key(cfg.unlabeled_path, "data.unlabeled");
        unlabeled = load_unlabeled(cfg.unlabeled_path, labels);
    }

    std::vector<double> mlm_loss;
    const ModelParams<T> init = initial_params<T>(cfg, vocab, unlabeled,
                                                  derive_seed(cfg.st.seed, 0), cfg.mlm, &mlm_loss);
    const TrainResult<T> result =
        train_supervised(train_data, dev, vocab, init, cfg.st, cfg.window, cfg.st.beta_human);

    write_run_files(a.out_dir, cfg, invocation);
    write_text_file(a.out_dir + "/report.txt", report_text(result.report));
    if (cfg.mlm_enabled) write_text_file(a.out_dir + "/pretrain_report.txt", pretrain_note(mlm_loss));
    save_checkpoint(a.out_dir + "/model.ckpt", result.params, vocab.hash());

    std::cout << "trained on " << train_data.size() << " examples, best epoch "
              << result.report.best_epoch << ", validation F1 " << result.report.best_val_f1
              << "\n";
    if (!cfg.test_path.empty()) {
        const auto test = load_split(cfg.test_path, labels, "data.test");
        const Metrics m = evaluate_model(result.params, test, vocab, cfg.window);
        write_text_file(a.out_dir + "/test_metrics.txt",
                        metrics_table({{"test", m}}) + "\n" + metrics_report(m));
        std::cout << "test overall F1 " << m.overall.f1() << "\n";
    }
    std::cout << "model saved to " << a.out_dir << "/model.ckpt\n";
    return 0;
}

template <typename T>
int run_selftrain_t(const RunConfig& cfg_in, const RunArgs& a, const std::string& invocation) {
    RunConfig cfg = cfg_in;
    if (a.vanilla) {
        cfg.st.alpha = 1.0;
        cfg.st.beta_human = 0.0;
        cfg.st.beta_pseudo = 0.0;
    }
    const LabelSet labels = cfg.labels();
    const Vocabulary vocab = load_vocab(cfg);
    cfg.model.vocab_size = vocab.size();
    cfg.validate();

    const auto train_data = load_split(cfg.train_path, labels, "data.train");
    const auto dev = load_split(cfg.dev_path, labels, "data.dev");
    require_key(cfg.unlabeled_path, "data.unlabeled");
    const auto unlabeled = load_unlabeled(cfg.unlabeled_path, labels);

    std::vector<double> mlm_loss;
    const ModelParams<T> init = initial_params<T>(cfg, vocab, unlabeled,
                                                  derive_seed(cfg.st.seed, 0), cfg.mlm, &mlm_loss);
    std::vector<LabeledExample> pseudo;
    const SelfTrainOutcome<T> outcome =
        self_train_loop(train_data, dev, unlabeled, vocab, init, cfg.st, cfg.window, &pseudo);

    write_run_files(a.out_dir, cfg, invocation,
                    a.vanilla ? "variant = vanilla (alpha=1, no smoothing)\n"
                              : "variant = discriminative\n");
    write_text_file(a.out_dir + "/teacher_report.txt", report_text(outcome.teacher_report));
    for (std::size_t i = 0; i < outcome.student_reports.size(); ++i)
        write_text_file(a.out_dir + "/student_report_" + std::to_string(i + 1) + ".txt",
                        report_text(outcome.student_reports[i]));
    if (cfg.mlm_enabled) write_text_file(a.out_dir + "/pretrain_report.txt", pretrain_note(mlm_loss));
    write_tsv(a.out_dir + "/pseudo.tsv", pseudo);
    save_checkpoint(a.out_dir + "/model.ckpt", outcome.best_params, vocab.hash());

    char buf[160];
    std::string summary;
    std::snprintf(buf, sizeof(buf), "best_stage = %s\nbest_val_f1 = %.17g\nteacher_val_f1 = %.17g\n",
                  outcome.best_stage.c_str(), outcome.best_val_f1,
                  outcome.teacher_report.best_val_f1);
    summary += buf;
    for (std::size_t i = 0; i < outcome.student_val_f1.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "student_%zu_val_f1 = %.17g\n", i + 1,
                      outcome.student_val_f1[i]);
        summary += buf;
    }
    std::cout << "teacher validation F1 " << outcome.teacher_report.best_val_f1 << "\n";
    for (std::size_t i = 0; i < outcome.student_val_f1.size(); ++i)
        std::cout << "student " << (i + 1) << " validation F1 " << outcome.student_val_f1[i]
                  << "\n";
    std::cout << "selected " << outcome.best_stage << " (validation F1 " << outcome.best_val_f1
              << ")\n";
    if (!cfg.test_path.empty()) {
        const auto test = load_split(cfg.test_path, labels, "data.test");
        const Metrics m = evaluate_model(outcome.best_params, test, vocab, cfg.window);
        std::snprintf(buf, sizeof(buf), "test_overall_f1 = %.17g\n", m.overall.f1());
        summary += buf;
        write_text_file(a.out_dir + "/test_metrics.txt",
                        metrics_table({{"selected", m}}) + "\n" + metrics_report(m));
        std::cout << "test overall F1 " << m.overall.f1() << "\n";
    }
    write_text_file(a.out_dir + "/summary.txt", summary);
    std::cout << "model saved to " << a.out_dir << "/model.ckpt\n";
    return 0;
}

// ---------------------------------------------------------------------------
// pseudo-label

struct PseudoArgs {
    std::string checkpoint, vocab_path, input, output;
    std::string label_set = "english4";
    WindowSpec window;
    int batch_windows = 64;
};

template <typename T>
int run_pseudo_t(const PseudoArgs& a) {
    const LabelSet labels = LabelSet::from_name(a.label_set);
    const Vocabulary vocab = Vocabulary::load(a.vocab_path);
    const ModelParams<T> params = load_ckpt<T>(a.checkpoint, vocab, labels);
    a.window.validate();
    const auto unlabeled = load_unlabeled(a.input, labels);
    const auto pseudo = pseudo_label(params, unlabeled, vocab, a.window, a.batch_windows);
    write_tsv(a.output, pseudo);
    long words = 0;
    for (const auto& ex : pseudo) words += static_cast<long>(ex.words.size());
    std::cout << "labeled " << pseudo.size() << " documents (" << words << " words) -> "
              << a.output << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// decode

struct DecodeArgs {
    std::string checkpoint, vocab_path;
    std::string input = "-";
    std::string output = "-";
    std::string label_set = "english4";
    WindowSpec window;
    int batch_lines = 64;
    bool keep_case = false;
};

template <typename T>
int run_decode_t(const DecodeArgs& a) {
    const LabelSet labels = LabelSet::from_name(a.label_set);
    const Vocabulary vocab = Vocabulary::load(a.vocab_path);
    const ModelParams<T> params = load_ckpt<T>(a.checkpoint, vocab, labels);
    a.window.validate();

    std::ifstream fin;
    if (a.input != "-") {
        fin.open(a.input, std::ios::binary);
        if (!fin) throw DataError("cannot open input: " + a.input);
    }
    std::istream& in = (a.input == "-") ? std::cin : fin;
    std::ofstream fout;
    if (a.output != "-") {
        fout.open(a.output, std::ios::binary);
        if (!fout) throw DataError("cannot open output: " + a.output);
    }
    std::ostream& out = (a.output == "-") ? std::cout : fout;

    ParseOptions opts;
    opts.lowercase = !a.keep_case;
    ParseStats stats;

    // Lines are processed in groups so window batches stay full; slot -1
    // marks lines that held no words and pass through empty.
    std::vector<std::vector<std::string>> group_words;
    std::vector<int> slots;
    auto flush = [&]() {
        if (slots.empty()) return;
        std::vector<EncodedExample> encoded;
        encoded.reserve(group_words.size());
        for (const auto& words : group_words) encoded.push_back(encode_words(words, vocab));
        const auto decoded = decode_many(params, encoded, a.window);
        for (int slot : slots) {
            if (slot < 0) {
                out << '\n';
                continue;
            }
            LabeledExample ex{group_words[static_cast<std::size_t>(slot)],
                              decoded[static_cast<std::size_t>(slot)], Source::HUMAN};
            out << render_punctuated(ex, labels) << '\n';
        }
        group_words.clear();
        slots.clear();
    };

    std::string line;
    while (std::getline(in, line)) {
        LabeledExample ex = parse_line(line, labels, opts, stats);
        if (ex.words.empty()) {
            slots.push_back(-1);
        } else {
            slots.push_back(static_cast<int>(group_words.size()));
            group_words.push_back(std::move(ex.words));
        }
        if (static_cast<int>(group_words.size()) >= a.batch_lines) flush();
    }
    flush();
    out.flush();
    if (a.output != "-" && !fout) throw DataError("failed while writing: " + a.output);
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
    std::string pred, gold, compare, out;
    std::string label_set = "english4";
    int trials = 10000;
    std::uint64_t seed = 1;
};

void check_aligned(const std::vector<LabeledExample>& a, const std::vector<LabeledExample>& b,
                   const std::string& what) {
    if (a.size() != b.size())
        throw DataError(what + ": example counts differ (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].words != b[i].words)
            throw DataError(what + ": word sequences differ at example " + std::to_string(i + 1));
}

int run_eval(const EvalArgs& a) {
    const LabelSet labels = LabelSet::from_name(a.label_set);
    const auto pred = load_split(a.pred, labels, "--pred");
    const auto gold = load_split(a.gold, labels, "--gold");
    check_aligned(pred, gold, "pred vs gold");
    const auto pred_rows = label_rows(pred);
    const auto gold_rows = label_rows(gold);
    const Metrics m = score(pred_rows, gold_rows, labels.num_classes());

    std::string text = metrics_table({{"pred", m}}) + "\n" + metrics_report(m);
    if (!a.compare.empty()) {
        const auto other = load_split(a.compare, labels, "--compare");
        check_aligned(other, gold, "compare vs gold");
        const auto other_rows = label_rows(other);
        const Metrics mo = score(other_rows, gold_rows, labels.num_classes());
        const double p = paired_significance(pred_rows, other_rows, gold_rows,
                                             labels.num_classes(), a.trials, a.seed);
        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "\ncompare.overall_f1 = %.17g\ndelta_f1 = %.17g\np_value = %.17g\n"
                      "trials = %d\n",
                      mo.overall.f1(), m.overall.f1() - mo.overall.f1(), p, a.trials);
        text += buf;
    }
    std::cout << text;
    if (!a.out.empty()) write_text_file(a.out, text);
    return 0;
}

// ---------------------------------------------------------------------------
// tune

struct TuneArgs {
    RunArgs run;
    std::string mode = "hyper";
    std::string checkpoint;
};

template <typename T>
int run_tune_hyper_t(const RunConfig& cfg_in, const TuneArgs& a, const std::string& invocation) {
    RunConfig cfg = cfg_in;
    const LabelSet labels = cfg.labels();
    const Vocabulary vocab = load_vocab(cfg);
    cfg.model.vocab_size = vocab.size();
    cfg.validate();

    const auto train_data = load_split(cfg.train_path, labels, "data.train");
    const auto dev = load_split(cfg.dev_path, labels, "data.dev");
    require_key(cfg.unlabeled_path, "data.unlabeled");
    const auto unlabeled = load_unlabeled(cfg.unlabeled_path, labels);

    std::vector<double> mlm_loss;
    const ModelParams<T> init = initial_params<T>(cfg, vocab, unlabeled,
                                                  derive_seed(cfg.st.seed, 0), cfg.mlm, &mlm_loss);
    const auto [best, board] =
        tune_hyperparams(train_data, dev, unlabeled, vocab, init, cfg.st, cfg.window,
                         cfg.tune_alphas, cfg.tune_beta1s, cfg.tune_beta2s);

    char buf[120];
    std::string table = "alpha  beta_human  beta_pseudo    val_f1\n";
    for (const auto& e : board) {
        std::snprintf(buf, sizeof(buf), "%5.2f  %10.2f  %11.2f  %.6f\n", e.alpha, e.beta_human,
                      e.beta_pseudo, e.val_f1);
        table += buf;
    }
    write_run_files(a.run.out_dir, cfg, invocation, "mode = hyper\n");
    write_text_file(a.run.out_dir + "/leaderboard.txt", table);
    RunConfig tuned = cfg;
    tuned.st = best;
    write_text_file(a.run.out_dir + "/best_config.ini", render_run_config(tuned));

    std::snprintf(buf, sizeof(buf),
                  "best: alpha=%.2f beta_human=%.2f beta_pseudo=%.2f (validation F1 %.6f)\n",
                  best.alpha, best.beta_human, best.beta_pseudo, board.front().val_f1);
    std::cout << table << "\n" << buf << "tuned config written to " << a.run.out_dir
              << "/best_config.ini\n";
    return 0;
}

template <typename T>
int run_tune_window_t(const RunConfig& cfg_in, const TuneArgs& a, const std::string& invocation) {
    RunConfig cfg = cfg_in;
    const LabelSet labels = cfg.labels();
    const Vocabulary vocab = load_vocab(cfg);
    cfg.model.vocab_size = vocab.size();
    cfg.validate();
    const ModelParams<T> params = load_ckpt<T>(a.checkpoint, vocab, labels);

    const auto dev = load_split(cfg.dev_path, labels, "data.dev");
    const auto [best, board] = tune_window(params, dev, vocab, cfg.window.window,
                                           cfg.tune_left_overlaps, cfg.tune_right_overlaps);
    const WindowSpec half = half_window_spec(cfg.window.window);
    const double half_f1 = evaluate_model(params, dev, vocab, half).overall.f1();

    char buf[160];
    std::string table = "window  left  right    val_f1\n";
    for (const auto& e : board) {
        std::snprintf(buf, sizeof(buf), "%6d  %4d  %5d  %.6f\n", e.spec.window,
                      e.spec.left_overlap, e.spec.right_overlap, e.val_f1);
        table += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "half_window_baseline: left=%d right=%d val_f1=%.6f\n"
                  "best: left=%d right=%d val_f1=%.6f\n",
                  half.left_overlap, half.right_overlap, half_f1, best.left_overlap,
                  best.right_overlap, board.front().val_f1);
    table += buf;

    if (!cfg.test_path.empty()) {
        const auto test = load_split(cfg.test_path, labels, "data.test");
        WindowSpec tuned = cfg.window;
        tuned.left_overlap = best.left_overlap;
        tuned.right_overlap = best.right_overlap;
        const double test_tuned = evaluate_model(params, test, vocab, tuned).overall.f1();
        const double test_half = evaluate_model(params, test, vocab, half).overall.f1();
        std::snprintf(buf, sizeof(buf), "test_f1.tuned = %.6f\ntest_f1.half_window = %.6f\n",
                      test_tuned, test_half);
        table += buf;
    }

    write_run_files(a.run.out_dir, cfg, invocation, "mode = window\n");
    write_text_file(a.run.out_dir + "/window_leaderboard.txt", table);
    std::cout << table;
    return 0;
}

// ---------------------------------------------------------------------------
// ablate

template <typename T>
int run_ablate_t(const RunConfig& cfg_in, const RunArgs& a, const std::string& invocation) {
    RunConfig cfg = cfg_in;
    const LabelSet labels = cfg.labels();
    const Vocabulary vocab = load_vocab(cfg);
    cfg.model.vocab_size = vocab.size();
    cfg.validate();

    const auto train_data = load_split(cfg.train_path, labels, "data.train");
    const auto dev = load_split(cfg.dev_path, labels, "data.dev");
    const auto test = load_split(cfg.test_path, labels, "data.test");
    require_key(cfg.unlabeled_path, "data.unlabeled");
    const auto unlabeled = load_unlabeled(cfg.unlabeled_path, labels);

    write_run_files(a.out_dir, cfg, invocation);
    const std::string partial_path = a.out_dir + "/ablation_partial.txt";
    write_text_file(partial_path, "");

    std::function<ModelParams<T>(std::uint64_t)> make_init;
    if (cfg.mlm_enabled) {
        make_init = [&](std::uint64_t seed) {
            MlmConfig m = cfg.mlm;
            m.seed = derive_seed(seed, 0);
            return initial_params<T>(cfg, vocab, unlabeled, derive_seed(seed, 0), m);
        };
    }
    auto on_row = [&](const AblationRow& row) {
        std::ofstream out(partial_path, std::ios::app);
        out << ablation_table({row});
        std::cout << "finished row: " << row.name << " (mean validation F1 "
                  << row.mean_val_f1() << ")\n";
    };

    const auto rows = run_ablation(train_data, dev, test, unlabeled, vocab, cfg.model, cfg.st,
                                   cfg.window, cfg.seeds, make_init, on_row);
    write_text_file(a.out_dir + "/ablation.txt", ablation_table(rows));
    write_text_file(a.out_dir + "/ablation_report.txt", ablation_report(rows));
    std::cout << "\n" << ablation_table(rows) << "results written to " << a.out_dir << "\n";
    return 0;
}

void add_window_flags(CLI::App* cmd, WindowSpec& w) {
    cmd->add_option("--window", w.window, "decode window length in subword pieces");
    cmd->add_option("--left-overlap", w.left_overlap, "left context pieces carried per window");
    cmd->add_option("--right-overlap", w.right_overlap, "right context pieces carried per window");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semi-supervised punctuation prediction toolkit"};
    app.require_subcommand(1);
    const std::string invocation = quote_argv(argc, argv);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic benchmark corpus");
    synth_cmd->add_option("--out-dir", synth.out_dir, "output directory")->required();
    synth_cmd->add_option("--train-words", synth.train_words, "labeled training words");
    synth_cmd->add_option("--unlabeled-words", synth.unlabeled_words, "unlabeled pool words");
    synth_cmd->add_option("--dev-words", synth.dev_words, "validation words");
    synth_cmd->add_option("--test-words", synth.test_words, "test words");
    synth_cmd->add_option("--tune-dev-words", synth.tune_dev_words, "long-document dev words");
    synth_cmd->add_option("--tune-test-words", synth.tune_test_words, "long-document test words");
    synth_cmd->add_option("--seed", synth.seed, "generator seed");
    synth_cmd->add_option("--label-set", synth.label_set, "english4 or chinese5");

    PrepareArgs prepare;
    auto* prepare_cmd = app.add_subcommand("prepare", "parse punctuated text into TSV + vocabulary");
    prepare_cmd->add_option("--input", prepare.input, "punctuated text, one document per line")
        ->required();
    prepare_cmd->add_option("--out-dir", prepare.out_dir, "output directory")->required();
    prepare_cmd->add_option("--label-set", prepare.label_set, "english4 or chinese5");
    prepare_cmd->add_option("--vocab", prepare.vocab_reuse,
                            "reuse this vocabulary instead of building one");
    prepare_cmd->add_option("--vocab-size", prepare.vocab_size, "maximum vocabulary size");
    prepare_cmd->add_option("--min-freq", prepare.min_freq, "minimum word frequency");
    prepare_cmd->add_flag("--keep-case", prepare.keep_case, "skip ASCII lowercasing");

    RunArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "supervised training");
    train_cmd->add_option("--config", train_args.config_path, "run configuration file")->required();
    train_cmd->add_option("--set", train_args.overrides, "override, e.g. --set train.epochs=5");
    train_cmd->add_option("--out-dir", train_args.out_dir, "run directory")->required();
    auto* train_seed = train_cmd->add_option("--seed", train_args.seed, "override train.seed");

    RunArgs st_args;
    auto* st_cmd = app.add_subcommand("selftrain", "teacher -> pseudo-label -> student training");
    st_cmd->add_option("--config", st_args.config_path, "run configuration file")->required();
    st_cmd->add_option("--set", st_args.overrides, "override, e.g. --set train.alpha=0.5");
    st_cmd->add_option("--out-dir", st_args.out_dir, "run directory")->required();
    auto* st_seed = st_cmd->add_option("--seed", st_args.seed, "override train.seed");
    st_cmd->add_flag("--vanilla", st_args.vanilla,
                     "classic self-training: alpha=1, no label smoothing");

    PseudoArgs pseudo;
    auto* pseudo_cmd = app.add_subcommand("pseudo-label", "label an unlabeled pool with a model");
    pseudo_cmd->add_option("--checkpoint", pseudo.checkpoint, "model checkpoint")->required();
    pseudo_cmd->add_option("--vocab", pseudo.vocab_path, "vocabulary file")->required();
    pseudo_cmd->add_option("--input", pseudo.input, "unlabeled text, one document per line")
        ->required();
    pseudo_cmd->add_option("--out", pseudo.output, "output TSV path")->required();
    pseudo_cmd->add_option("--label-set", pseudo.label_set, "english4 or chinese5");
    pseudo_cmd->add_option("--batch-windows", pseudo.batch_windows, "windows per forward batch");
    add_window_flags(pseudo_cmd, pseudo.window);

    DecodeArgs decode;
    auto* decode_cmd = app.add_subcommand("decode", "punctuate raw text (stdin/stdout by default)");
    decode_cmd->add_option("--checkpoint", decode.checkpoint, "model checkpoint")->required();
    decode_cmd->add_option("--vocab", decode.vocab_path, "vocabulary file")->required();
    decode_cmd->add_option("--input", decode.input, "input path, - for stdin");
    decode_cmd->add_option("--output", decode.output, "output path, - for stdout");
    decode_cmd->add_option("--label-set", decode.label_set, "english4 or chinese5");
    decode_cmd->add_option("--batch-lines", decode.batch_lines, "lines per forward batch");
    decode_cmd->add_flag("--keep-case", decode.keep_case, "skip ASCII lowercasing");
    add_window_flags(decode_cmd, decode.window);

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "token-level P/R/F1 against gold labels");
    eval_cmd->add_option("--pred", eval.pred, "predicted TSV")->required();
    eval_cmd->add_option("--gold", eval.gold, "gold TSV")->required();
    eval_cmd->add_option("--compare", eval.compare, "second predicted TSV for significance");
    eval_cmd->add_option("--trials", eval.trials, "randomization trials");
    eval_cmd->add_option("--seed", eval.seed, "randomization seed");
    eval_cmd->add_option("--label-set", eval.label_set, "english4 or chinese5");
    eval_cmd->add_option("--out", eval.out, "also write the report here");

    TuneArgs tune;
    auto* tune_cmd = app.add_subcommand("tune", "grid search: hyperparameters or window overlaps");
    tune_cmd->add_option("--config", tune.run.config_path, "run configuration file")->required();
    tune_cmd->add_option("--set", tune.run.overrides, "config override");
    tune_cmd->add_option("--out-dir", tune.run.out_dir, "run directory")->required();
    tune_cmd->add_option("--mode", tune.mode, "hyper (default) or window");
    tune_cmd->add_option("--checkpoint", tune.checkpoint, "fixed model for window mode");

    RunArgs ablate_args;
    auto* ablate_cmd = app.add_subcommand("ablate", "five-row self-training ablation ladder");
    ablate_cmd->add_option("--config", ablate_args.config_path, "run configuration file")
        ->required();
    ablate_cmd->add_option("--set", ablate_args.overrides, "config override");
    ablate_cmd->add_option("--out-dir", ablate_args.out_dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth_cmd->parsed()) return run_synth(synth);
        if (prepare_cmd->parsed()) return run_prepare(prepare);
        if (train_cmd->parsed()) {
            train_args.seed_set = train_seed->count() > 0;
            const RunConfig cfg = load_config(train_args);
            return with_precision(cfg.precision, [&](auto tag) {
                return run_train_t<decltype(tag)>(cfg, train_args, invocation);
            });
        }
        if (st_cmd->parsed()) {
            st_args.seed_set = st_seed->count() > 0;
            const RunConfig cfg = load_config(st_args);
            return with_precision(cfg.precision, [&](auto tag) {
                return run_selftrain_t<decltype(tag)>(cfg, st_args, invocation);
            });
        }
        if (pseudo_cmd->parsed())
            return with_ckpt_precision(pseudo.checkpoint, [&](auto tag) {
                return run_pseudo_t<decltype(tag)>(pseudo);
            });
        if (decode_cmd->parsed())
            return with_ckpt_precision(decode.checkpoint, [&](auto tag) {
                return run_decode_t<decltype(tag)>(decode);
            });
        if (eval_cmd->parsed()) return run_eval(eval);
        if (tune_cmd->parsed()) {
            const RunConfig cfg = load_config(tune.run);
            if (tune.mode == "hyper")
                return with_precision(cfg.precision, [&](auto tag) {
                    return run_tune_hyper_t<decltype(tag)>(cfg, tune, invocation);
                });
            if (tune.mode == "window") {
                if (tune.checkpoint.empty())
                    throw ConfigError("tune --mode window requires --checkpoint");
                return with_ckpt_precision(tune.checkpoint, [&](auto tag) {
                    return run_tune_window_t<decltype(tag)>(cfg, tune, invocation);
                });
            }
            throw ConfigError("unknown tune mode: " + tune.mode);
        }
        if (ablate_cmd->parsed()) {
            const RunConfig cfg = load_config(ablate_args);
            return with_precision(cfg.precision, [&](auto tag) {
                return run_ablate_t<decltype(tag)>(cfg, ablate_args, invocation);
            });
        }
        throw LogicError("no subcommand dispatched");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
}
