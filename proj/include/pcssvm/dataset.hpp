#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pcssvm/error.hpp"

namespace pcssvm {

/// Binary-labelled tabular data. Labels are +1 (minority) or -1.
///
/// `origin` records, for every row, the index of the row it came from in the
/// originally loaded file. Resampling keeps the parent's origin so that the
/// harness can audit which source rows influenced a fitted model.
struct Dataset {
    Eigen::MatrixXd features;
    std::vector<int> labels;
    std::string name;
    std::vector<std::string> attribute_names;
    std::vector<std::int64_t> origin;

    [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
    [[nodiscard]] std::size_t dims() const noexcept { return static_cast<std::size_t>(features.cols()); }

    [[nodiscard]] std::size_t count(int label) const noexcept {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
    }
    [[nodiscard]] std::size_t positives() const noexcept { return count(+1); }
    [[nodiscard]] std::size_t negatives() const noexcept { return count(-1); }
};

namespace detail {

inline void check_shape(const Dataset& ds) {
    if (static_cast<std::size_t>(ds.features.rows()) != ds.labels.size())
        throw DataError("feature rows and label count differ");
    for (int y : ds.labels)
        if (y != 1 && y != -1) throw DataError("labels must be +1 or -1");
}

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(std::string_view s, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(delim, start);
        out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    // from_chars rejects a leading '+'
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace detail

/// Check the invariants required by training entry points: both classes
/// present and finite features.
inline void require_trainable(const Dataset& ds) {
    detail::check_shape(ds);
    if (ds.size() < 2 || ds.dims() < 1) throw DataError("dataset needs n >= 2 and d >= 1");
    if (ds.positives() == 0 || ds.negatives() == 0) throw DataError("single-class dataset");
    if (!ds.features.allFinite()) throw DataError("non-finite feature value");
}

// ---------------------------------------------------------------------------
// Loading

enum class DataFormat { keel, csv };

/// How nominal (non-class) KEEL attributes are treated.
enum class NominalPolicy {
    reject,   ///< raise a ParseError
    ordinal,  ///< replace each value by its 0-based position in the declaration
};

struct LoadOptions {
    /// Class value mapped to +1. When empty, the less frequent class is used;
    /// on a tie, a value spelled "positive" wins, else the first value seen.
    std::string minority;
    NominalPolicy nominal = NominalPolicy::reject;
    // csv only
    bool header = false;
    /// Class column index; negative counts from the end (-1 = last).
    int class_column = -1;
    char delimiter = ',';
};

namespace detail {

struct RawTable {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> classes;
    std::vector<std::size_t> lines;
};

inline Dataset finish_table(RawTable table, std::string name, std::vector<std::string> attrs,
                            const LoadOptions& opts, const std::vector<std::string>& declared_classes) {
    std::map<std::string, std::size_t> freq;
    std::vector<std::string> order;
    for (const auto& c : table.classes)
        if (freq[c]++ == 0) order.push_back(c);
    if (order.size() < 2) throw DataError("single-class dataset");
    if (order.size() > 2) throw ParseError("non-binary class column (" + std::to_string(order.size()) + " values)", 0);

    std::string minority = opts.minority;
    if (minority.empty()) {
        const auto& a = order[0];
        const auto& b = order[1];
        if (freq[a] != freq[b]) {
            minority = freq[a] < freq[b] ? a : b;
        } else if (lower(a) == "positive" || lower(b) == "positive") {
            minority = lower(a) == "positive" ? a : b;
        } else {
            minority = declared_classes.empty() ? a : declared_classes.front();
        }
    } else if (!freq.count(minority)) {
        throw DataError("minority value '" + minority + "' not present in class column");
    }

    Dataset ds;
    ds.name = std::move(name);
    ds.attribute_names = std::move(attrs);
    const std::size_t n = table.rows.size();
    const std::size_t d = ds.attribute_names.size();
    ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    ds.labels.resize(n);
    ds.origin.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double v = table.rows[i][j];
            if (!std::isfinite(v)) throw ParseError("non-finite feature value", table.lines[i]);
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
        ds.labels[i] = table.classes[i] == minority ? 1 : -1;
        ds.origin[i] = static_cast<std::int64_t>(i);
    }
    return ds;
}

struct KeelAttribute {
    std::string name;
    bool nominal = false;
    std::vector<std::string> values;
};

inline KeelAttribute parse_keel_attribute(std::string_view rest, std::size_t line_no) {
    rest = trim(rest);
    KeelAttribute attr;
    const auto brace = rest.find('{');
    if (brace != std::string_view::npos) {
        const auto close = rest.find('}', brace);
        if (close == std::string_view::npos) throw ParseError("unterminated nominal value list", line_no);
        attr.name = std::string(trim(rest.substr(0, brace)));
        attr.nominal = true;
        for (auto& v : split(rest.substr(brace + 1, close - brace - 1), ','))
            if (!v.empty()) attr.values.push_back(v);
    } else {
        const auto sp = rest.find_first_of(" \t");
        if (sp == std::string_view::npos) throw ParseError("attribute declaration lacks a type", line_no);
        attr.name = std::string(rest.substr(0, sp));
        const auto type = lower(trim(rest.substr(sp)));
        if (!(type.starts_with("real") || type.starts_with("integer") || type.starts_with("numeric")))
            throw ParseError("unsupported attribute type '" + type + "'", line_no);
    }
    if (attr.name.empty()) throw ParseError("attribute without a name", line_no);
    return attr;
}

}  // namespace detail

/// Parse a KEEL `.dat` stream. The class attribute is the last declared one.
inline Dataset parse_keel(std::istream& in, const LoadOptions& opts = {}, std::string fallback_name = {}) {
    std::string relation = std::move(fallback_name);
    std::vector<detail::KeelAttribute> attrs;
    detail::RawTable table;
    bool in_data = false;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '%') continue;
        if (!in_data) {
            if (t.front() != '@') throw ParseError("data row before @data", line_no);
            const auto sp = t.find_first_of(" \t");
            const auto keyword = detail::lower(t.substr(0, sp));
            const auto rest = sp == std::string_view::npos ? std::string_view{} : t.substr(sp);
            if (keyword == "@relation") {
                relation = std::string(detail::trim(rest));
            } else if (keyword == "@attribute") {
                attrs.push_back(detail::parse_keel_attribute(rest, line_no));
            } else if (keyword == "@data") {
                if (attrs.size() < 2) throw ParseError("header declares fewer than two attributes", line_no);
                const auto& cls = attrs.back();
                if (!cls.nominal) throw ParseError("class attribute '" + cls.name + "' is not nominal", line_no);
                if (cls.values.size() != 2)
                    throw ParseError("non-binary class attribute '" + cls.name + "'", line_no);
                for (std::size_t j = 0; j + 1 < attrs.size(); ++j)
                    if (attrs[j].nominal && opts.nominal == NominalPolicy::reject)
                        throw ParseError("nominal attribute '" + attrs[j].name + "' not supported", line_no);
                in_data = true;
            } else if (keyword == "@inputs" || keyword == "@outputs" || keyword == "@input" || keyword == "@output") {
                // informational; class is always the last attribute
            } else {
                throw ParseError("unknown header keyword '" + keyword + "'", line_no);
            }
            continue;
        }

        const auto cells = detail::split(t, ',');
        if (cells.size() != attrs.size())
            throw ParseError("expected " + std::to_string(attrs.size()) + " fields, got " + std::to_string(cells.size()),
                             line_no);
        std::vector<double> row(attrs.size() - 1);
        for (std::size_t j = 0; j + 1 < attrs.size(); ++j) {
            if (attrs[j].nominal) {
                const auto& vals = attrs[j].values;
                const auto it = std::find(vals.begin(), vals.end(), cells[j]);
                if (it == vals.end())
                    throw ParseError("value '" + cells[j] + "' not declared for '" + attrs[j].name + "'", line_no);
                row[j] = static_cast<double>(it - vals.begin());
            } else {
                const auto v = detail::parse_double(cells[j]);
                if (!v) throw ParseError("non-numeric cell '" + cells[j] + "' in column " + std::to_string(j + 1), line_no);
                row[j] = *v;
            }
        }
        const auto& cls = attrs.back().values;
        if (std::find(cls.begin(), cls.end(), cells.back()) == cls.end())
            throw ParseError("undeclared class value '" + cells.back() + "'", line_no);
        table.rows.push_back(std::move(row));
        table.classes.push_back(cells.back());
        table.lines.push_back(line_no);
    }
    if (!in_data) throw ParseError("missing @data section", 0);

    std::vector<std::string> names;
    for (std::size_t j = 0; j + 1 < attrs.size(); ++j) names.push_back(attrs[j].name);
    return detail::finish_table(std::move(table), relation, std::move(names), opts, attrs.back().values);
}

/// Parse a delimited text stream with one class column.
inline Dataset parse_csv(std::istream& in, const LoadOptions& opts = {}, std::string name = {}) {
    detail::RawTable table;
    std::vector<std::string> header;
    std::size_t width = 0;
    std::size_t class_col = 0;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;

    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto cells = detail::split(t, opts.delimiter);
        if (first) {
            width = cells.size();
            if (width < 2) throw ParseError("need at least one feature column and a class column", line_no);
            const int idx = opts.class_column < 0 ? static_cast<int>(width) + opts.class_column : opts.class_column;
            if (idx < 0 || idx >= static_cast<int>(width)) throw ParseError("class column index out of range", line_no);
            class_col = static_cast<std::size_t>(idx);
            first = false;
            if (opts.header) {
                header = std::move(cells);
                continue;
            }
        }
        if (cells.size() != width)
            throw ParseError("expected " + std::to_string(width) + " fields, got " + std::to_string(cells.size()),
                             line_no);
        std::vector<double> row;
        row.reserve(width - 1);
        for (std::size_t j = 0; j < width; ++j) {
            if (j == class_col) continue;
            const auto v = detail::parse_double(cells[j]);
            if (!v) throw ParseError("non-numeric cell '" + cells[j] + "' in column " + std::to_string(j + 1), line_no);
            row.push_back(*v);
        }
        table.rows.push_back(std::move(row));
        table.classes.push_back(cells[class_col]);
        table.lines.push_back(line_no);
    }
    if (table.rows.empty()) throw ParseError("no data rows", 0);

    std::vector<std::string> names;
    for (std::size_t j = 0; j < width; ++j) {
        if (j == class_col) continue;
        names.push_back(header.empty() ? "x" + std::to_string(names.size()) : header[j]);
    }
    return detail::finish_table(std::move(table), std::move(name), std::move(names), opts, {});
}

inline Dataset load_dataset(const std::filesystem::path& path, DataFormat format, const LoadOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    const auto stem = path.stem().string();
    return format == DataFormat::keel ? parse_keel(in, opts, stem) : parse_csv(in, opts, stem);
}

/// Chooses the format from the extension: `.dat` is KEEL, anything else CSV.
inline Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& opts = {}) {
    const auto ext = detail::lower(path.extension().string());
    return load_dataset(path, ext == ".dat" || ext == ".keel" ? DataFormat::keel : DataFormat::csv, opts);
}

// ---------------------------------------------------------------------------
// Imbalance, subsets, scaling

/// N- / N+.
inline double imbalance_ratio(std::size_t negatives, std::size_t positives) {
    if (positives == 0) throw DataError("imbalance ratio undefined without positive samples");
    return static_cast<double>(negatives) / static_cast<double>(positives);
}

inline double imbalance_ratio(const Dataset& ds) { return imbalance_ratio(ds.negatives(), ds.positives()); }

/// Rows of `ds` at `indices`, in that order.
inline Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
    Dataset out;
    out.name = ds.name;
    out.attribute_names = ds.attribute_names;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), ds.features.cols());
    out.labels.reserve(indices.size());
    out.origin.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto i = indices[r];
        out.features.row(static_cast<Eigen::Index>(r)) = ds.features.row(static_cast<Eigen::Index>(i));
        out.labels.push_back(ds.labels[i]);
        out.origin.push_back(ds.origin.empty() ? static_cast<std::int64_t>(i) : ds.origin[i]);
    }
    return out;
}

/// Per-feature affine z-score map. Features with zero variance map to 0.
struct Scaler {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;  ///< population standard deviation; 0 marks a constant column

    static Scaler fit(const Eigen::MatrixXd& x) {
        if (x.rows() < 2) throw DataError("standardize needs at least two rows");
        Scaler s;
        s.mean = x.colwise().mean();
        const Eigen::MatrixXd centered = x.rowwise() - s.mean;
        s.scale = (centered.colwise().squaredNorm() / static_cast<double>(x.rows())).cwiseSqrt();
        return s;
    }

    [[nodiscard]] Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd out = x.rowwise() - mean;
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
            if (scale(j) > 0.0)
                out.col(j) /= scale(j);
            else
                out.col(j).setZero();
        }
        return out;
    }

    [[nodiscard]] Dataset transform(const Dataset& ds) const {
        Dataset out = ds;
        out.features = transform(ds.features);
        return out;
    }
};

inline std::pair<Dataset, Scaler> standardize(const Dataset& ds) {
    auto scaler = Scaler::fit(ds.features);
    return {scaler.transform(ds), std::move(scaler)};
}

// ---------------------------------------------------------------------------
// Stratified folds

struct FoldPlan {
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<int> assignments;

    [[nodiscard]] std::vector<std::size_t> test_indices(int fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] == fold) out.push_back(i);
        return out;
    }
    [[nodiscard]] std::vector<std::size_t> train_indices(int fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] != fold) out.push_back(i);
        return out;
    }
};

/// Shuffles each class with a seeded engine and deals it round-robin, the
/// negatives continuing where the positives stopped.
inline FoldPlan stratified_kfold(const Dataset& ds, int k, std::uint64_t seed) {
    if (k < 2) throw DataError("k-fold needs k >= 2");
    detail::check_shape(ds);
    if (ds.positives() < static_cast<std::size_t>(k) || ds.negatives() < static_cast<std::size_t>(k))
        throw DataError("insufficient minority samples for " + std::to_string(k) + " folds");

    std::mt19937_64 rng(seed);
    FoldPlan plan{k, seed, std::vector<int>(ds.size(), -1)};
    std::size_t next = 0;
    for (int label : {+1, -1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.labels[i] == label) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (auto i : idx) plan.assignments[i] = static_cast<int>(next++ % static_cast<std::size_t>(k));
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Synthetic data

/// Two isotropic unit-variance 2-D Gaussian clouds whose means are
/// `separation` apart along the first axis. Negatives come first.
inline Dataset synth_imbalanced(std::size_t n_neg, std::size_t n_pos, double separation, std::uint64_t seed) {
    if (n_pos < 2) throw DataError("synth_imbalanced needs n_pos >= 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Dataset ds;
    ds.name = "synthetic";
    ds.attribute_names = {"x0", "x1"};
    const std::size_t n = n_neg + n_pos;
    ds.features.resize(static_cast<Eigen::Index>(n), 2);
    ds.labels.resize(n);
    ds.origin.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool pos = i >= n_neg;
        const auto r = static_cast<Eigen::Index>(i);
        ds.features(r, 0) = gauss(rng) + (pos ? 0.5 : -0.5) * separation;
        ds.features(r, 1) = gauss(rng);
        ds.labels[i] = pos ? 1 : -1;
        ds.origin[i] = static_cast<std::int64_t>(i);
    }
    return ds;
}

}  // namespace pcssvm
