#include <chrono>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "pcssvm/pcssvm.hpp"

using namespace pcssvm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

void print_summary(const ExperimentReport& rep) {
    for (const auto& c : rep.cells()) {
        std::cout << c.dataset << ' ' << c.method << ' ' << c.kernel << ": F=" << c.value(Metric::f_measure)
                  << " G=" << c.value(Metric::g_mean) << " AUC=" << c.value(Metric::auc) << " folds_ok=" << c.ok
                  << " failed=" << c.failed << " seconds=" << c.seconds << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PCS-SVM toolkit for imbalanced binary classification"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "run an experiment described by a config file");
    run->add_option("--config", config_path, "key=value experiment config")->required();
    run->add_option("--out", out_dir, "output directory (overrides output_dir)");
    run->add_flag("--quiet", quiet, "no per-cell progress on stderr");

    std::string dataset;
    std::string method_text = "pcs_svm";
    std::string kernel_text = "poly:2";
    std::uint64_t seed = 1;
    std::vector<double> c_values;
    int folds = 5;
    int repeats = 1;
    std::string minority;
    std::string nominal = "ordinal";
    std::string model_path;
    auto* bench = app.add_subcommand("bench", "cross-validate one method on one dataset");
    bench->add_option("--dataset", dataset, "KEEL (.dat) or CSV file")->required();
    bench->add_option("--method", method_text, "svm, cs_svm, pcs_svm, svm_rus, svm_ros, svm_smote, pcs_smote_svm");
    bench->add_option("--kernel", kernel_text, "linear | poly:d[:gamma[:coef0]] | rbf:gamma");
    bench->add_option("--seed", seed, "random seed");
    bench->add_option("--c", c_values, "C value(s); several values are grid-searched");
    bench->add_option("--folds", folds, "outer folds");
    bench->add_option("--repeats", repeats, "repetitions of the fold split");
    bench->add_option("--minority", minority, "class value mapped to +1");
    bench->add_option("--nominal", nominal, "reject | ordinal");
    bench->add_option("--save-model", model_path, "train on the whole dataset with the first C and save the model");

    std::string in_dir;
    std::string format = "md";
    auto* report = app.add_subcommand("report", "render tables from a run directory");
    report->add_option("--in", in_dir, "directory holding folds.csv")->required();
    report->add_option("--format", format, "md | csv")->check(CLI::IsMember({"md", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) {
            auto cfg = load_config(config_path);
            if (!out_dir.empty()) cfg.output_dir = out_dir;
            std::function<void(const std::string&)> progress;
            if (!quiet) progress = [](const std::string& line) { std::cerr << line << '\n'; };
            const auto rep = run_experiment(cfg, progress);
            if (!cfg.output_dir.empty()) save_report(rep, cfg.output_dir);
            std::cout << emit_report(rep, ReportFormat::markdown);
            return rep.partial() ? kExitPartial : kExitOk;
        }
        if (*bench) {
            const auto method = parse_method(method_text);
            if (!method) throw ConfigError("unknown method '" + method_text + "'");
            ExperimentConfig cfg;
            cfg.datasets = {dataset};
            cfg.methods = {*method};
            const auto kernel = KernelSpec::parse(kernel_text);
            cfg.kernel_groups = {{kernel.to_string(), {kernel}}};
            if (!c_values.empty()) cfg.c_grid = c_values;
            cfg.folds = folds;
            cfg.repeats = repeats;
            cfg.seed = seed;
            cfg.minority = minority;
            if (nominal == "reject")
                cfg.nominal = NominalPolicy::reject;
            else if (nominal != "ordinal")
                throw ConfigError("nominal must be 'reject' or 'ordinal'");
            const auto start = std::chrono::steady_clock::now();
            const auto rep = run_experiment(cfg);
            print_summary(rep);
            std::cout << "wall_seconds="
                      << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << '\n';
            if (!model_path.empty()) {
                LoadOptions lopts;
                lopts.minority = minority;
                lopts.nominal = cfg.nominal;
                const auto ds = load_dataset(dataset, lopts);
                std::ofstream out(model_path);
                if (*method == Method::pcs_svm) {
                    const auto r = train_pcs_svm(ds, kernel, cfg.c_grid.front(), seed);
                    write_model(out, r.model);
                    std::ofstream diag(model_path + ".diag");
                    write_pcs_diagnostics(diag, r);
                } else {
                    write_model(out, fit_method(*method, ds, kernel, cfg.c_grid.front(), seed, cfg));
                }
            }
            return rep.partial() ? kExitPartial : kExitOk;
        }
        if (*report) {
            const auto rep = load_report(in_dir);
            std::cout << emit_report(rep, format == "csv" ? ReportFormat::csv : ReportFormat::markdown);
            return rep.partial() ? kExitPartial : kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitPartial;
    }
    return kExitOk;
}
