#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "punctr/selftrain.hpp"

namespace punctr {

// One ladder row aggregated over seeds. seed_val_f1 holds the
// method-selected checkpoint's validation F1 (best across teacher and
// student, matching the self-training selection rule); seed_student_f1 holds
// the student-only score so the report shows whether the student itself
// improved; seed_test_f1 scores the selected checkpoint on held-out test data.
struct AblationRow {
    std::string name;
    bool self_training = false;
    double alpha = 0.0;
    double beta_human = 0.0;
    double beta_pseudo = 0.0;
    std::vector<double> seed_val_f1;
    std::vector<double> seed_student_f1;
    std::vector<double> seed_test_f1;

    double mean_val_f1() const { return mean(seed_val_f1); }
    double mean_student_f1() const { return mean(seed_student_f1); }
    double mean_test_f1() const { return mean(seed_test_f1); }

  private:
    static double mean(const std::vector<double>& xs) {
        if (xs.empty()) return 0.0;
        double s = 0.0;
        for (double x : xs) s += x;
        return s / static_cast<double>(xs.size());
    }
};

// The five-row ladder: supervised baseline, then self-training with one knob
// enabled per row until the full discriminative objective is assembled.
// alpha and the smoothing factors for the upper rows come from base_cfg.
// Teachers depend only on their smoothing factor, so each seed trains one
// teacher per distinct factor and reuses its pseudo labels across rows.
// on_row (when set) fires after each completed row so partial results can be
// persisted even if a later row fails.
template <typename T>
inline std::vector<AblationRow> run_ablation(
    const std::vector<LabeledExample>& human_train, const std::vector<LabeledExample>& dev,
    const std::vector<LabeledExample>& test, const std::vector<std::vector<std::string>>& unlabeled,
    const Vocabulary& vocab, const ModelConfig& model_config, const STConfig& base_cfg,
    const WindowSpec& window, const std::vector<std::uint64_t>& seeds,
    const std::function<ModelParams<T>(std::uint64_t)>& make_init = {},
    const std::function<void(const AblationRow&)>& on_row = {}) {
    if (seeds.empty()) throw ConfigError("ablation needs at least one seed");

    struct RowSpec {
        const char* name;
        bool self_training;
        double alpha, beta_human, beta_pseudo;
    };
    const RowSpec specs[] = {
        {"baseline", false, 0.0, 0.0, 0.0},
        {"+ vanilla self-training", true, 1.0, 0.0, 0.0},
        {"+ weighted pseudo loss", true, base_cfg.alpha, 0.0, 0.0},
        {"+ equal label smoothing", true, base_cfg.alpha, base_cfg.beta_human,
         base_cfg.beta_human},
        {"+ discriminative smoothing", true, base_cfg.alpha, base_cfg.beta_human,
         base_cfg.beta_pseudo},
    };

    // Per seed: teacher results and pseudo labels keyed by the teacher's
    // smoothing factor, computed lazily and shared across rows.
    struct TeacherRun {
        TrainResult<T> result;
        std::vector<LabeledExample> pseudo;
    };
    std::vector<std::map<double, TeacherRun>> teacher_cache(seeds.size());
    std::vector<ModelParams<T>> inits;
    inits.reserve(seeds.size());
    for (const std::uint64_t seed : seeds) {
        if (make_init) {
            inits.push_back(make_init(seed));
            continue;
        }
        ModelConfig mc = model_config;
        mc.seed = derive_seed(seed, 0);
        inits.push_back(init_params<T>(mc, mc.seed));
    }

    auto teacher_for = [&](std::size_t seed_index, std::uint64_t seed,
                           double beta_human) -> TeacherRun& {
        auto& cache = teacher_cache[seed_index];
        auto it = cache.find(beta_human);
        if (it != cache.end()) return it->second;
        STConfig cfg = base_cfg;
        cfg.seed = seed;
        TrainResult<T> teacher = train_supervised(human_train, dev, vocab, inits[seed_index], cfg,
                                                  window, beta_human);
        TeacherRun run{std::move(teacher), {}};
        run.pseudo = pseudo_label(run.result.params, unlabeled, vocab, window);
        return cache.emplace(beta_human, std::move(run)).first->second;
    };

    std::vector<AblationRow> rows;
    for (const RowSpec& spec : specs) {
        AblationRow row;
        row.name = spec.name;
        row.self_training = spec.self_training;
        row.alpha = spec.alpha;
        row.beta_human = spec.beta_human;
        row.beta_pseudo = spec.beta_pseudo;

        for (std::size_t i = 0; i < seeds.size(); ++i) {
            const std::uint64_t seed = seeds[i];
            if (!spec.self_training) {
                STConfig cfg = base_cfg;
                cfg.seed = seed;
                const TeacherRun& teacher = teacher_for(i, seed, 0.0);
                row.seed_val_f1.push_back(teacher.result.report.best_val_f1);
                row.seed_student_f1.push_back(teacher.result.report.best_val_f1);
                row.seed_test_f1.push_back(
                    evaluate_model(teacher.result.params, test, vocab, window).overall.f1());
                continue;
            }
            const TeacherRun& teacher = teacher_for(i, seed, spec.beta_human);
            STConfig cfg = base_cfg;
            cfg.alpha = spec.alpha;
            cfg.beta_human = spec.beta_human;
            cfg.beta_pseudo = spec.beta_pseudo;
            cfg.seed = derive_seed(seed, 1);  // the self-training loop's iteration-1 seed
            TrainResult<T> student =
                train_student(human_train, teacher.pseudo, dev, vocab, inits[i], cfg, window);
            row.seed_student_f1.push_back(student.report.best_val_f1);
            // Selection matches self_train_loop: best of teacher and student.
            const bool student_wins =
                student.report.best_val_f1 > teacher.result.report.best_val_f1;
            const ModelParams<T>& selected =
                student_wins ? student.params : teacher.result.params;
            row.seed_val_f1.push_back(student_wins ? student.report.best_val_f1
                                                   : teacher.result.report.best_val_f1);
            row.seed_test_f1.push_back(
                evaluate_model(selected, test, vocab, window).overall.f1());
        }
        if (on_row) on_row(row);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string ablation_table(const std::vector<AblationRow>& rows) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-30s %7s %7s %7s %9s %9s %9s\n", "Row", "alpha", "beta1",
                  "beta2", "val F1", "stud F1", "test F1");
    out += buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-30s %7.2f %7.2f %7.2f %9.4f %9.4f %9.4f\n",
                      r.name.c_str(), r.alpha, r.beta_human, r.beta_pseudo, r.mean_val_f1(),
                      r.mean_student_f1(), r.mean_test_f1());
        out += buf;
    }
    return out;
}

inline std::string ablation_report(const std::vector<AblationRow>& rows) {
    std::string out;
    char buf[64];
    auto array_line = [&](const std::string& key, const std::vector<double>& xs) {
        out += key + " = [";
        for (std::size_t i = 0; i < xs.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s%.17g", i ? ", " : "", xs[i]);
            out += buf;
        }
        out += "]\n";
    };
    for (const auto& r : rows) {
        out += "[row]\nname = " + r.name + "\n";
        std::snprintf(buf, sizeof(buf), "alpha = %.17g\n", r.alpha);
        out += buf;
        std::snprintf(buf, sizeof(buf), "beta_human = %.17g\n", r.beta_human);
        out += buf;
        std::snprintf(buf, sizeof(buf), "beta_pseudo = %.17g\n", r.beta_pseudo);
        out += buf;
        array_line("val_f1", r.seed_val_f1);
        array_line("student_f1", r.seed_student_f1);
        array_line("test_f1", r.seed_test_f1);
        std::snprintf(buf, sizeof(buf), "mean_val_f1 = %.17g\n", r.mean_val_f1());
        out += buf;
        std::snprintf(buf, sizeof(buf), "mean_test_f1 = %.17g\n\n", r.mean_test_f1());
        out += buf;
    }
    return out;
}

}  // namespace punctr
