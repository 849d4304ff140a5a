#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "pcssvm/dataset.hpp"
#include "pcssvm/error.hpp"
#include "pcssvm/kernel.hpp"
#include "pcssvm/metrics.hpp"
#include "pcssvm/pcs.hpp"
#include "pcssvm/resampling.hpp"
#include "pcssvm/smo.hpp"

namespace pcssvm {

// ---------------------------------------------------------------------------
// Method registry

enum class Method { svm, cs_svm, pcs_svm, svm_rus, svm_ros, svm_smote, pcs_smote_svm };

/// Column order of every report table.
inline constexpr std::array<Method, 7> kMethodOrder = {Method::svm,     Method::cs_svm,    Method::pcs_svm,
                                                       Method::svm_rus, Method::svm_ros,   Method::svm_smote,
                                                       Method::pcs_smote_svm};

inline const char* method_name(Method m) {
    switch (m) {
        case Method::svm: return "svm";
        case Method::cs_svm: return "cs_svm";
        case Method::pcs_svm: return "pcs_svm";
        case Method::svm_rus: return "svm_rus";
        case Method::svm_ros: return "svm_ros";
        case Method::svm_smote: return "svm_smote";
        case Method::pcs_smote_svm: return "pcs_smote_svm";
    }
    return "?";
}

inline std::optional<Method> parse_method(const std::string& s) {
    for (auto m : kMethodOrder)
        if (s == method_name(m)) return m;
    return std::nullopt;
}

/// Algorithm-level methods form group 0, resampling-based ones group 1.
inline int method_group(Method m) {
    return (m == Method::svm || m == Method::cs_svm || m == Method::pcs_svm) ? 0 : 1;
}

/// Hyper-parameters of the PCS methods are the baseline's, so they are tuned
/// with the baseline method.
inline Method tuning_method(Method m) {
    if (m == Method::pcs_svm) return Method::svm;
    if (m == Method::pcs_smote_svm) return Method::svm_smote;
    return m;
}

// ---------------------------------------------------------------------------
// Configuration

/// Named set of kernel candidates searched together.
struct KernelGroup {
    std::string name;
    std::vector<KernelSpec> candidates;
};

enum class AuditStage { scaler_fit, grid_search, resample, fit };

/// Called with the provenance of the rows used at each stage and of the
/// current test fold.
using LeakageAudit = std::function<void(AuditStage, std::span<const std::int64_t> used,
                                        std::span<const std::int64_t> test)>;

struct ExperimentConfig {
    std::vector<std::string> datasets;
    std::vector<Method> methods;
    std::vector<std::string> kernels = {"polynomial"};
    std::vector<int> poly_degrees = {2, 3};
    double poly_gamma = 1.0;
    double poly_coef0 = 1.0;
    std::vector<double> rbf_gammas = {std::ldexp(1.0, -7), std::ldexp(1.0, -5), std::ldexp(1.0, -3),
                                      std::ldexp(1.0, -1), std::ldexp(1.0, 1),  std::ldexp(1.0, 3)};
    std::vector<double> c_grid = {std::ldexp(1.0, -5), std::ldexp(1.0, -3), std::ldexp(1.0, -1),
                                  std::ldexp(1.0, 1),  std::ldexp(1.0, 3),  std::ldexp(1.0, 5),
                                  std::ldexp(1.0, 7),  std::ldexp(1.0, 9)};
    int folds = 5;
    int repeats = 20;
    int inner_folds = 3;
    std::uint64_t seed = 1;
    double cell_timeout_seconds = 0.0;  ///< 0 disables the budget
    double run_timeout_seconds = 0.0;   ///< whole-run budget; 0 disables it
    int smote_k = 5;
    double epsilon_w = kDefaultSimilarityEpsilon;
    bool standardize = true;
    NominalPolicy nominal = NominalPolicy::ordinal;
    std::string minority;
    std::filesystem::path output_dir;
    std::size_t workers = 0;  ///< 0: PCSSVM_WORKERS, else hardware concurrency
    SvmParams solver = [] {  ///< tolerances and pair rule only
        SvmParams p;
        p.selection = PairSelection::second_order;
        return p;
    }();
    LeakageAudit audit;

    /// Explicit kernel groups; when empty they are built from `kernels`.
    std::vector<KernelGroup> kernel_groups;

    [[nodiscard]] std::vector<KernelGroup> resolved_kernel_groups() const {
        if (!kernel_groups.empty()) return kernel_groups;
        std::vector<KernelGroup> out;
        for (const auto& k : kernels) {
            KernelGroup g{k, {}};
            if (k == "polynomial") {
                for (int d : poly_degrees) g.candidates.push_back(KernelSpec::polynomial(d, poly_gamma, poly_coef0));
            } else if (k == "rbf") {
                for (double gm : rbf_gammas) g.candidates.push_back(KernelSpec::rbf(gm));
            } else if (k == "linear") {
                g.candidates.push_back(KernelSpec::linear());
            } else {
                g.candidates.push_back(KernelSpec::parse(k));
            }
            out.push_back(std::move(g));
        }
        return out;
    }

    void validate() const {
        if (datasets.empty()) throw ConfigError("no datasets configured");
        if (methods.empty()) throw ConfigError("empty method list");
        if (folds < 2) throw ConfigError("folds must be >= 2");
        if (repeats < 1) throw ConfigError("repeats must be >= 1");
        if (inner_folds < 2) throw ConfigError("inner_folds must be >= 2");
        if (c_grid.empty()) throw ConfigError("empty C grid");
        for (double c : c_grid)
            if (!(c > 0.0)) throw ConfigError("C grid values must be > 0");
        if (smote_k < 1) throw ConfigError("smote_k must be >= 1");
        if (cell_timeout_seconds < 0.0 || run_timeout_seconds < 0.0) throw ConfigError("timeouts must be >= 0");
        const auto groups = resolved_kernel_groups();
        if (groups.empty()) throw ConfigError("no kernels configured");
        for (const auto& g : groups) {
            if (g.candidates.empty()) throw ConfigError("kernel grid '" + g.name + "' is empty");
            for (const auto& k : g.candidates) {
                try {
                    k.validate();
                } catch (const DomainError& e) {
                    throw ConfigError(e.what());
                }
            }
        }
    }
};

namespace detail {

/// Accepts plain reals and powers written as `2^k`.
inline double parse_grid_value(const std::string& s) {
    const auto caret = s.find('^');
    if (caret != std::string::npos) {
        const auto base = parse_double(s.substr(0, caret));
        const auto exp = parse_double(s.substr(caret + 1));
        if (!base || !exp) throw ConfigError("bad grid value '" + s + "'");
        return std::pow(*base, *exp);
    }
    const auto v = parse_double(s);
    if (!v) throw ConfigError("bad number '" + s + "'");
    return *v;
}

inline long parse_int(const std::string& key, const std::string& s) {
    const auto v = parse_double(s);
    if (!v || *v != std::floor(*v)) throw ConfigError("key '" + key + "' needs an integer, got '" + s + "'");
    return static_cast<long>(*v);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    for (auto& item : split(s, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace detail

/// Flat `key = value` text; `#` starts a comment. Relative dataset paths are
/// resolved against `base_dir`.
inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
    ExperimentConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    bool repeats_set = false;
    std::optional<std::string> profile;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const auto t = std::string(detail::trim(line));
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const auto key = std::string(detail::trim(std::string_view(t).substr(0, eq)));
        const auto value = std::string(detail::trim(std::string_view(t).substr(eq + 1)));
        try {
            if (key == "datasets") {
                for (auto& p : detail::split_list(value)) {
                    std::filesystem::path path(p);
                    cfg.datasets.push_back((path.is_relative() && !base_dir.empty() ? base_dir / path : path).string());
                }
            } else if (key == "methods") {
                for (auto& m : detail::split_list(value)) {
                    const auto parsed = parse_method(m);
                    if (!parsed) throw ConfigError("unknown method '" + m + "'");
                    cfg.methods.push_back(*parsed);
                }
            } else if (key == "kernels") {
                cfg.kernels = detail::split_list(value);
            } else if (key == "poly_degrees") {
                cfg.poly_degrees.clear();
                for (auto& v : detail::split_list(value)) cfg.poly_degrees.push_back(static_cast<int>(detail::parse_int(key, v)));
            } else if (key == "poly_gamma") {
                cfg.poly_gamma = detail::parse_grid_value(value);
            } else if (key == "poly_coef0") {
                cfg.poly_coef0 = detail::parse_grid_value(value);
            } else if (key == "rbf_gammas") {
                cfg.rbf_gammas.clear();
                for (auto& v : detail::split_list(value)) cfg.rbf_gammas.push_back(detail::parse_grid_value(v));
            } else if (key == "c_grid") {
                cfg.c_grid.clear();
                for (auto& v : detail::split_list(value)) cfg.c_grid.push_back(detail::parse_grid_value(v));
            } else if (key == "folds") {
                cfg.folds = static_cast<int>(detail::parse_int(key, value));
            } else if (key == "repeats") {
                cfg.repeats = static_cast<int>(detail::parse_int(key, value));
                repeats_set = true;
            } else if (key == "inner_folds") {
                cfg.inner_folds = static_cast<int>(detail::parse_int(key, value));
            } else if (key == "seed") {
                cfg.seed = static_cast<std::uint64_t>(detail::parse_int(key, value));
            } else if (key == "cell_timeout_seconds") {
                cfg.cell_timeout_seconds = detail::parse_grid_value(value);
            } else if (key == "run_timeout_seconds") {
                cfg.run_timeout_seconds = detail::parse_grid_value(value);
            } else if (key == "smote_k") {
                cfg.smote_k = static_cast<int>(detail::parse_int(key, value));
            } else if (key == "epsilon_w") {
                cfg.epsilon_w = detail::parse_grid_value(value);
            } else if (key == "standardize") {
                cfg.standardize = value == "true" || value == "1" || value == "yes";
            } else if (key == "nominal") {
                if (value == "reject")
                    cfg.nominal = NominalPolicy::reject;
                else if (value == "ordinal")
                    cfg.nominal = NominalPolicy::ordinal;
                else
                    throw ConfigError("nominal must be 'reject' or 'ordinal'");
            } else if (key == "minority") {
                cfg.minority = value;
            } else if (key == "output_dir") {
                std::filesystem::path path(value);
                cfg.output_dir = path.is_relative() && !base_dir.empty() ? base_dir / path : path;
            } else if (key == "workers") {
                cfg.workers = static_cast<std::size_t>(detail::parse_int(key, value));
            } else if (key == "kkt_tol") {
                cfg.solver.kkt_tol = detail::parse_grid_value(value);
            } else if (key == "profile") {
                if (value != "smoke" && value != "full") throw ConfigError("profile must be 'smoke' or 'full'");
                profile = value;
            } else {
                throw ConfigError("unknown key '" + key + "'");
            }
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (profile == "smoke" && !repeats_set) cfg.repeats = 3;
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    return parse_config(in, path.parent_path());
}

// ---------------------------------------------------------------------------
// Report

struct FoldRecord {
    std::string dataset;
    std::string method;
    std::string kernel;
    int repeat = 0;
    int fold = 0;
    std::string status = "ok";  ///< ok, timeout, or error:<message>
    double f_measure = 0.0;
    double g_mean = 0.0;
    double auc = 0.0;
    double seconds = 0.0;
    std::string choice;  ///< selected hyper-parameters
};

enum class Metric { f_measure, g_mean, auc };
inline constexpr std::array<Metric, 3> kMetrics = {Metric::f_measure, Metric::g_mean, Metric::auc};

inline const char* metric_name(Metric m) {
    switch (m) {
        case Metric::f_measure: return "f_measure";
        case Metric::g_mean: return "g_mean";
        case Metric::auc: return "auc";
    }
    return "?";
}

inline double metric_value(const FoldRecord& r, Metric m) {
    switch (m) {
        case Metric::f_measure: return r.f_measure;
        case Metric::g_mean: return r.g_mean;
        case Metric::auc: return r.auc;
    }
    return 0.0;
}

struct CellSummary {
    std::string dataset;
    std::string method;
    std::string kernel;
    std::array<double, 3> mean{};
    std::size_t ok = 0;
    std::size_t failed = 0;
    double seconds = 0.0;

    [[nodiscard]] double value(Metric m) const { return mean[static_cast<std::size_t>(m)]; }
};

struct ExperimentReport {
    std::vector<FoldRecord> folds;

    /// Datasets, methods and kernels in order of first appearance; methods
    /// are then sorted into the canonical table order.
    [[nodiscard]] std::vector<std::string> datasets() const { return unique([](const FoldRecord& r) { return r.dataset; }); }
    [[nodiscard]] std::vector<std::string> kernels() const { return unique([](const FoldRecord& r) { return r.kernel; }); }
    [[nodiscard]] std::vector<std::string> methods() const {
        auto names = unique([](const FoldRecord& r) { return r.method; });
        std::vector<std::string> out;
        for (auto m : kMethodOrder)
            if (std::find(names.begin(), names.end(), method_name(m)) != names.end()) out.emplace_back(method_name(m));
        for (auto& n : names)
            if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
        return out;
    }

    [[nodiscard]] std::vector<CellSummary> cells() const {
        std::vector<CellSummary> out;
        for (const auto& d : datasets())
            for (const auto& k : kernels())
                for (const auto& m : methods())
                    if (auto c = cell(d, m, k)) out.push_back(*c);
        return out;
    }

    /// Arithmetic mean over the successful folds of one cell.
    [[nodiscard]] std::optional<CellSummary> cell(const std::string& dataset, const std::string& method,
                                                  const std::string& kernel) const {
        CellSummary c{dataset, method, kernel, {}, 0, 0, 0.0};
        bool any = false;
        for (const auto& r : folds) {
            if (r.dataset != dataset || r.method != method || r.kernel != kernel) continue;
            any = true;
            c.seconds += r.seconds;
            if (r.status != "ok") {
                ++c.failed;
                continue;
            }
            ++c.ok;
            for (auto m : kMetrics) c.mean[static_cast<std::size_t>(m)] += metric_value(r, m);
        }
        if (!any) return std::nullopt;
        if (c.ok)
            for (auto& v : c.mean) v /= static_cast<double>(c.ok);
        return c;
    }

    /// Number of (dataset, method, kernel, metric) entries.
    [[nodiscard]] std::size_t metric_cells() const { return cells().size() * kMetrics.size(); }

    [[nodiscard]] bool partial() const {
        return std::any_of(folds.begin(), folds.end(), [](const FoldRecord& r) { return r.status != "ok"; });
    }

    /// Per method: datasets on which it attains the best mean within its
    /// method group (ties count for every tied method).
    [[nodiscard]] std::map<std::string, int> wins(Metric metric, const std::string& kernel) const {
        std::map<std::string, int> out;
        const auto ms = methods();
        for (const auto& m : ms) out[m] = 0;
        for (const auto& d : datasets()) {
            for (int group : {0, 1}) {
                double best = -1.0;
                std::vector<std::string> winners;
                for (const auto& m : ms) {
                    const auto parsed = parse_method(m);
                    if (!parsed || method_group(*parsed) != group) continue;
                    const auto c = cell(d, m, kernel);
                    if (!c || c->ok == 0) continue;
                    const double v = c->value(metric);
                    if (v > best) {
                        best = v;
                        winners = {m};
                    } else if (v == best) {
                        winners.push_back(m);
                    }
                }
                for (const auto& w : winners) ++out[w];
            }
        }
        return out;
    }

private:
    template <typename F>
    std::vector<std::string> unique(F key) const {
        std::vector<std::string> out;
        for (const auto& r : folds) {
            auto k = key(r);
            if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(std::move(k));
        }
        return out;
    }
};

namespace detail {

inline std::string csv_safe(std::string s) {
    for (auto& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace detail

inline constexpr const char* kFoldCsvHeader = "dataset,method,kernel,repeat,fold,status,f_measure,g_mean,auc,seconds,choice";

inline void write_folds_csv(std::ostream& os, const ExperimentReport& rep) {
    os << kFoldCsvHeader << '\n';
    for (const auto& r : rep.folds) {
        os << detail::csv_safe(r.dataset) << ',' << r.method << ',' << detail::csv_safe(r.kernel) << ',' << r.repeat << ','
           << r.fold << ',' << detail::csv_safe(r.status) << ',' << detail::fmt17(r.f_measure) << ','
           << detail::fmt17(r.g_mean) << ',' << detail::fmt17(r.auc) << ',' << detail::fmt17(r.seconds) << ','
           << detail::csv_safe(r.choice) << '\n';
    }
}

inline ExperimentReport read_folds_csv(std::istream& is) {
    ExperimentReport rep;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line_no == 1) {
            if (std::string(detail::trim(line)) != kFoldCsvHeader) throw ParseError("unexpected fold table header", 1);
            continue;
        }
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split(line, ',');
        if (cells.size() != 11) throw ParseError("expected 11 fields", line_no);
        FoldRecord r;
        r.dataset = cells[0];
        r.method = cells[1];
        r.kernel = cells[2];
        auto num = [&](std::size_t i) {
            const auto v = detail::parse_double(cells[i]);
            if (!v) throw ParseError("bad number '" + cells[i] + "'", line_no);
            return *v;
        };
        r.repeat = static_cast<int>(num(3));
        r.fold = static_cast<int>(num(4));
        r.status = cells[5];
        r.f_measure = num(6);
        r.g_mean = num(7);
        r.auc = num(8);
        r.seconds = num(9);
        r.choice = cells[10];
        rep.folds.push_back(std::move(r));
    }
    return rep;
}

enum class ReportFormat { csv, markdown };

/// One table per metric and kernel; rows are datasets, columns the methods in
/// canonical order, followed by a wins row. The best value of each method
/// group in a row is marked (bold in markdown, listed in the `best` column of
/// the CSV).
inline std::string emit_report(const ExperimentReport& rep, ReportFormat format) {
    std::ostringstream os;
    const auto methods = rep.methods();
    const auto datasets = rep.datasets();
    const bool md = format == ReportFormat::markdown;
    for (const auto& kernel : rep.kernels()) {
        for (auto metric : kMetrics) {
            if (md) {
                os << "### " << metric_name(metric) << " (" << kernel << ")\n\n| dataset |";
                for (const auto& m : methods) os << ' ' << m << " |";
                os << "\n|---|";
                for (std::size_t i = 0; i < methods.size(); ++i) os << "---|";
                os << '\n';
            } else {
                os << "# " << metric_name(metric) << ' ' << kernel << "\ndataset";
                for (const auto& m : methods) os << ',' << m;
                os << ",best\n";
            }
            for (const auto& d : datasets) {
                std::array<double, 2> best{-1.0, -1.0};
                std::vector<std::optional<CellSummary>> row;
                for (const auto& m : methods) {
                    auto c = rep.cell(d, m, kernel);
                    if (c && c->ok) {
                        const auto g = static_cast<std::size_t>(method_group(parse_method(m).value_or(Method::svm)));
                        best[g] = std::max(best[g], c->value(metric));
                    }
                    row.push_back(std::move(c));
                }
                os << (md ? "| " : "") << d;
                std::string best_list;
                for (std::size_t i = 0; i < methods.size(); ++i) {
                    const auto& c = row[i];
                    std::string text = !c ? "" : (c->ok ? detail::fmt4(c->value(metric)) : "failed");
                    bool is_best = false;
                    if (c && c->ok) {
                        const auto g = static_cast<std::size_t>(method_group(parse_method(methods[i]).value_or(Method::svm)));
                        is_best = c->value(metric) == best[g];
                    }
                    if (is_best) best_list += (best_list.empty() ? "" : ";") + methods[i];
                    if (md)
                        os << " | " << (is_best ? "**" + text + "**" : text);
                    else
                        os << ',' << text;
                }
                os << (md ? " |\n" : "," + best_list + "\n");
            }
            const auto wins = rep.wins(metric, kernel);
            os << (md ? "| wins" : "wins");
            for (const auto& m : methods) {
                const std::string text = std::to_string(wins.at(m)) + "/" + std::to_string(datasets.size());
                os << (md ? " | " : ",") << text;
            }
            os << (md ? " |\n\n" : ",\n\n");
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Running

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finaliser over a combined word
    std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline void audit_disjoint(const ExperimentConfig& cfg, AuditStage stage, const Dataset& used,
                           const std::vector<std::int64_t>& test_origins) {
    if (cfg.audit) cfg.audit(stage, used.origin, test_origins);
    for (auto o : used.origin)
        if (std::binary_search(test_origins.begin(), test_origins.end(), o))
            throw Error("leakage: test row " + std::to_string(o) + " reached a training stage");
}

struct Choice {
    KernelSpec kernel;
    double c = 1.0;
};

}  // namespace detail

namespace detail {

inline int smote_neighbors(const ExperimentConfig& cfg, const Dataset& train) {
    return std::max(1, std::min<int>(cfg.smote_k, static_cast<int>(train.positives()) - 1));
}

/// The rows a method trains on: the data itself or its resampled version.
inline Dataset training_rows(Method method, const Dataset& train, std::uint64_t seed, const ExperimentConfig& cfg) {
    ResamplePlan plan;
    plan.k_neighbors = smote_neighbors(cfg, train);
    plan.seed = seed;
    switch (method) {
        case Method::svm_rus: plan.method = ResampleMethod::rus; break;
        case Method::svm_ros: plan.method = ResampleMethod::ros; break;
        case Method::svm_smote:
        case Method::pcs_smote_svm: plan.method = ResampleMethod::smote; break;
        default: return train;
    }
    return resample(train, plan);
}

/// (C+, C-) of the single SVM fit behind the non-PCS methods.
inline std::pair<double, double> penalties(Method method, const Dataset& rows, double c) {
    if (method == Method::cs_svm) return {c * imbalance_ratio(rows), c};
    return {c, c};
}

}  // namespace detail

/// Trains `method` on (already scaled) training data and returns a model ready
/// for prediction. `test_origins` feeds the leakage audit; pass empty to skip.
inline SvmModel fit_method(Method method, const Dataset& train, const KernelSpec& kernel, double c,
                           std::uint64_t seed, const ExperimentConfig& cfg,
                           const std::vector<std::int64_t>& test_origins = {}) {
    const Dataset rows = detail::training_rows(method, train, seed, cfg);
    if (!test_origins.empty()) {
        if (&rows != &train) detail::audit_disjoint(cfg, AuditStage::resample, rows, test_origins);
        detail::audit_disjoint(cfg, AuditStage::fit, rows, test_origins);
    }
    if (method == Method::pcs_svm || method == Method::pcs_smote_svm) {
        PcsOptions pcs;
        pcs.epsilon_w = cfg.epsilon_w;
        pcs.solver = cfg.solver;
        return train_pcs_svm(rows, kernel, c, seed, pcs).model;
    }
    SvmParams params = cfg.solver;
    params.kernel = kernel;
    std::tie(params.c_pos, params.c_neg) = detail::penalties(method, rows, c);
    return train_smo(rows, params);
}

struct FoldScores {
    Scores scores;
    double auc = 0.0;
};

inline FoldScores evaluate(const SvmModel& model, const Dataset& test) {
    const Eigen::VectorXd f = model.decision_values(test.features);
    std::vector<int> pred(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) pred[i] = f(static_cast<Eigen::Index>(i)) >= 0.0 ? 1 : -1;
    FoldScores out;
    out.scores = scores(confusion(test.labels, pred));
    out.auc = auc(test.labels, std::span<const double>(f.data(), static_cast<std::size_t>(f.size())));
    return out;
}

/// Inner stratified CV over the kernel x C grid; the candidate with the
/// highest mean G-mean wins, ties resolved by grid order. PCS methods must be
/// mapped to their baseline first (see tuning_method). For each kernel and
/// inner fold the Gram matrix is built once and C is swept upwards, each fit
/// warm-started from the previous solution.
inline detail::Choice grid_search(Method method, const Dataset& train, const KernelGroup& group,
                                  std::uint64_t seed, const ExperimentConfig& cfg) {
    if (method == Method::pcs_svm || method == Method::pcs_smote_svm)
        throw ConfigError("grid search runs on the baseline of a PCS method");
    if (group.candidates.size() == 1 && cfg.c_grid.size() == 1) return {group.candidates[0], cfg.c_grid[0]};
    const int inner = std::min<int>(cfg.inner_folds, static_cast<int>(std::min(train.positives(), train.negatives())));
    if (inner < 2) return {group.candidates[0], cfg.c_grid[0]};
    const auto plan = stratified_kfold(train, inner, seed);

    std::vector<std::size_t> c_order(cfg.c_grid.size());
    for (std::size_t i = 0; i < c_order.size(); ++i) c_order[i] = i;
    std::stable_sort(c_order.begin(), c_order.end(), [&](auto a, auto b) { return cfg.c_grid[a] < cfg.c_grid[b]; });

    // score[k][c], summed over inner folds
    std::vector<std::vector<double>> score(group.candidates.size(), std::vector<double>(cfg.c_grid.size(), 0.0));
    for (int f = 0; f < inner; ++f) {
        const auto tr_idx = plan.train_indices(f);
        const auto te_idx = plan.test_indices(f);
        const Dataset test = subset(train, te_idx);
        Dataset rows;
        try {
            rows = detail::training_rows(method, subset(train, tr_idx),
                                         detail::mix_seed(seed, static_cast<std::uint64_t>(f)), cfg);
        } catch (const Error&) {
            continue;  // every candidate scores 0 on this fold
        }
        for (std::size_t ki = 0; ki < group.candidates.size(); ++ki) {
            SvmParams params = cfg.solver;
            params.kernel = group.candidates[ki];
            const GramMatrix g = gram(rows.features, params.kernel);
            std::vector<double> warm;
            for (auto ci : c_order) {
                std::tie(params.c_pos, params.c_neg) = detail::penalties(method, rows, cfg.c_grid[ci]);
                try {
                    const auto model = train_smo(rows, g, params, {}, warm);
                    score[ki][ci] += evaluate(model, test).scores.g_mean;
                    warm = model.alphas;
                } catch (const Error&) {
                    warm.clear();
                }
            }
        }
    }
    detail::Choice best{group.candidates[0], cfg.c_grid[0]};
    double best_score = -1.0;
    for (std::size_t ki = 0; ki < group.candidates.size(); ++ki) {
        for (std::size_t ci = 0; ci < cfg.c_grid.size(); ++ci) {
            if (score[ki][ci] > best_score) {
                best_score = score[ki][ci];
                best = {group.candidates[ki], cfg.c_grid[ci]};
            }
        }
    }
    return best;
}

namespace detail {

struct CellJob {
    std::size_t dataset_index;
    std::size_t group_index;
    Method method;
};

class TuningCache {
public:
    using Key = std::tuple<std::size_t, std::size_t, int, int, int>;

    std::optional<Choice> get(const Key& k) {
        std::lock_guard lock(mutex_);
        const auto it = map_.find(k);
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }
    void put(const Key& k, const Choice& c) {
        std::lock_guard lock(mutex_);
        map_.emplace(k, c);
    }

private:
    std::mutex mutex_;
    std::map<Key, Choice> map_;
};

inline std::size_t worker_count(const ExperimentConfig& cfg, std::size_t jobs) {
    std::size_t w = cfg.workers;
    if (w == 0) {
        if (const char* env = std::getenv("PCSSVM_WORKERS")) w = static_cast<std::size_t>(std::max(0L, std::atol(env)));
    }
    if (w == 0) w = std::max(1u, std::thread::hardware_concurrency());
    return std::max<std::size_t>(1, std::min(w, jobs));
}

}  // namespace detail

/// Repeated stratified k-fold evaluation of every (dataset, kernel group,
/// method) cell. Cells run on a worker pool; every random stream is derived
/// from the config seed and the cell coordinates, so results do not depend on
/// scheduling.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                       const std::function<void(const std::string&)>& progress = {}) {
    cfg.validate();
    LoadOptions lopts;
    lopts.nominal = cfg.nominal;
    lopts.minority = cfg.minority;
    std::vector<Dataset> data;
    for (const auto& path : cfg.datasets) data.push_back(load_dataset(path, lopts));
    const auto groups = cfg.resolved_kernel_groups();

    std::vector<detail::CellJob> jobs;
    for (std::size_t d = 0; d < data.size(); ++d)
        for (std::size_t g = 0; g < groups.size(); ++g)
            for (auto m : cfg.methods) jobs.push_back({d, g, m});

    std::vector<std::vector<FoldRecord>> results(jobs.size());
    const auto run_start = std::chrono::steady_clock::now();
    detail::TuningCache cache;
    std::mutex progress_mutex;
    std::atomic<std::size_t> next{0};

    auto run_cell = [&](std::size_t job_index) {
        const auto& job = jobs[job_index];
        const Dataset& ds = data[job.dataset_index];
        const auto& group = groups[job.group_index];
        const auto start = std::chrono::steady_clock::now();
        auto& out = results[job_index];
        bool timed_out = false;

        for (int rep = 0; rep < cfg.repeats; ++rep) {
            const auto rep_seed = detail::mix_seed(cfg.seed, job.dataset_index * 1000003ULL + static_cast<std::uint64_t>(rep));
            std::optional<FoldPlan> plan;
            std::string plan_error;
            try {
                plan = stratified_kfold(ds, cfg.folds, rep_seed);
            } catch (const Error& e) {
                plan_error = e.what();
            }
            for (int fold = 0; fold < cfg.folds; ++fold) {
                FoldRecord rec{ds.name, method_name(job.method), group.name, rep, fold};
                const auto fold_start = std::chrono::steady_clock::now();
                if (!timed_out && cfg.cell_timeout_seconds > 0.0 &&
                    std::chrono::duration<double>(fold_start - start).count() > cfg.cell_timeout_seconds)
                    timed_out = true;
                if (!timed_out && cfg.run_timeout_seconds > 0.0 &&
                    std::chrono::duration<double>(fold_start - run_start).count() > cfg.run_timeout_seconds)
                    timed_out = true;
                if (timed_out) {
                    rec.status = "timeout";
                    out.push_back(rec);
                    continue;
                }
                if (!plan) {
                    rec.status = "error:" + plan_error;
                    out.push_back(rec);
                    continue;
                }
                try {
                    Dataset train = subset(ds, plan->train_indices(fold));
                    Dataset test = subset(ds, plan->test_indices(fold));
                    std::vector<std::int64_t> test_origins = test.origin;
                    std::sort(test_origins.begin(), test_origins.end());
                    if (cfg.standardize) {
                        detail::audit_disjoint(cfg, AuditStage::scaler_fit, train, test_origins);
                        const auto scaler = Scaler::fit(train.features);
                        train = scaler.transform(train);
                        test = scaler.transform(test);
                    }
                    const auto fold_seed = detail::mix_seed(rep_seed, static_cast<std::uint64_t>(fold));
                    const Method tuner = tuning_method(job.method);
                    const detail::TuningCache::Key key{job.dataset_index, job.group_index, rep, fold,
                                                       static_cast<int>(tuner)};
                    auto choice = cache.get(key);
                    if (!choice) {
                        detail::audit_disjoint(cfg, AuditStage::grid_search, train, test_origins);
                        choice = grid_search(tuner, train, group, detail::mix_seed(fold_seed, 17), cfg);
                        cache.put(key, *choice);
                    }
                    const auto model = fit_method(job.method, train, choice->kernel, choice->c, fold_seed, cfg, test_origins);
                    const auto s = evaluate(model, test);
                    rec.f_measure = s.scores.f_measure;
                    rec.g_mean = s.scores.g_mean;
                    rec.auc = s.auc;
                    rec.choice = choice->kernel.to_string() + " C=" + detail::fmt17(choice->c);
                } catch (const std::exception& e) {
                    rec.status = std::string("error:") + e.what();
                }
                rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - fold_start).count();
                out.push_back(rec);
            }
        }
        if (progress) {
            std::lock_guard lock(progress_mutex);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            progress(ds.name + " / " + group.name + " / " + method_name(job.method) + " done in " + detail::fmt4(secs) + " s");
        }
    };

    const auto workers = detail::worker_count(cfg, jobs.size());
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) run_cell(j);
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    ExperimentReport rep;
    for (auto& r : results) rep.folds.insert(rep.folds.end(), r.begin(), r.end());
    return rep;
}

/// Writes folds.csv, report.md and report.csv into `dir`.
inline void save_report(const ExperimentReport& rep, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "folds.csv");
        write_folds_csv(out, rep);
    }
    std::ofstream(dir / "report.md") << emit_report(rep, ReportFormat::markdown);
    std::ofstream(dir / "report.csv") << emit_report(rep, ReportFormat::csv);
}

inline ExperimentReport load_report(const std::filesystem::path& dir) {
    std::ifstream in(dir / "folds.csv");
    if (!in) throw Error("cannot open " + (dir / "folds.csv").string());
    return read_folds_csv(in);
}

}  // namespace pcssvm
