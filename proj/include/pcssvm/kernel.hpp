#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "pcssvm/dataset.hpp"
#include "pcssvm/error.hpp"

namespace pcssvm {

enum class KernelKind { linear, polynomial, rbf };

struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    int degree = 3;
    double gamma = 1.0;
    double coef0 = 1.0;

    static KernelSpec linear() { return {KernelKind::linear, 1, 1.0, 0.0}; }
    static KernelSpec polynomial(int degree, double gamma = 1.0, double coef0 = 1.0) {
        return {KernelKind::polynomial, degree, gamma, coef0};
    }
    static KernelSpec rbf(double gamma) { return {KernelKind::rbf, 1, gamma, 0.0}; }

    void validate() const {
        if (kind == KernelKind::polynomial && degree < 1) throw DomainError("polynomial degree must be >= 1");
        if (kind != KernelKind::linear && !(gamma > 0.0)) throw DomainError("kernel gamma must be > 0");
    }

    /// `linear`, `poly:<degree>[:<gamma>[:<coef0>]]` or `rbf:<gamma>`.
    [[nodiscard]] std::string to_string() const {
        std::ostringstream os;
        os << std::setprecision(17);
        switch (kind) {
            case KernelKind::linear: os << "linear"; break;
            case KernelKind::polynomial: os << "poly:" << degree << ':' << gamma << ':' << coef0; break;
            case KernelKind::rbf: os << "rbf:" << gamma; break;
        }
        return os.str();
    }

    static KernelSpec parse(const std::string& text) {
        const auto parts = detail::split(text, ':');
        const auto kind = detail::lower(parts.at(0));
        auto num = [&](std::size_t i, double fallback) {
            if (i >= parts.size()) return fallback;
            const auto v = detail::parse_double(parts[i]);
            if (!v) throw ConfigError("bad number '" + parts[i] + "' in kernel spec '" + text + "'");
            return *v;
        };
        KernelSpec spec;
        if (kind == "linear" && parts.size() == 1) {
            spec = linear();
        } else if ((kind == "poly" || kind == "polynomial") && parts.size() >= 2 && parts.size() <= 4) {
            const double deg = num(1, 3.0);
            if (deg != std::floor(deg)) throw ConfigError("polynomial degree must be an integer");
            spec = polynomial(static_cast<int>(deg), num(2, 1.0), num(3, 1.0));
        } else if (kind == "rbf" && parts.size() == 2) {
            spec = rbf(num(1, 1.0));
        } else {
            throw ConfigError("unrecognised kernel spec '" + text + "'");
        }
        try {
            spec.validate();
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
        return spec;
    }

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// k(x, y) for a single pair.
template <typename A, typename B>
double kernel_value(const KernelSpec& spec, const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
    switch (spec.kind) {
        case KernelKind::linear: return x.dot(y);
        case KernelKind::polynomial: {
            const double base = spec.gamma * x.dot(y) + spec.coef0;
            double out = 1.0;
            for (int p = 0; p < spec.degree; ++p) out *= base;
            return out;
        }
        case KernelKind::rbf: {
            // Values below the normal range are flushed to zero.
            const double e = -spec.gamma * (x - y).squaredNorm();
            return e < -708.0 ? 0.0 : std::exp(e);
        }
    }
    return 0.0;
}

/// Dense symmetric kernel matrix over the rows of a feature matrix.
struct GramMatrix {
    Eigen::MatrixXd values;
    KernelSpec spec;

    [[nodiscard]] Eigen::Index size() const noexcept { return values.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return values(i, j); }
};

/// Upper triangle evaluated pairwise and mirrored, so the result is exactly
/// symmetric. RBF diagonals are exactly 1.
inline GramMatrix gram(const Eigen::MatrixXd& features, const KernelSpec& spec) {
    spec.validate();
    if (!features.allFinite()) throw DomainError("gram: non-finite features");
    const Eigen::Index n = features.rows();
    // Row-major copy keeps each sample contiguous for the pair loop.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x = features;
    GramMatrix g{Eigen::MatrixXd(n, n), spec};
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            const double v = (spec.kind == KernelKind::rbf && i == j) ? 1.0 : kernel_value(spec, x.row(i), x.row(j));
            g.values(i, j) = v;
            g.values(j, i) = v;
        }
    }
    if (!g.values.allFinite()) throw DomainError("gram: kernel evaluation overflowed");
    return g;
}

/// Kernel values between rows of `a` (rows of result) and rows of `b`.
inline Eigen::MatrixXd cross_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelSpec& spec) {
    Eigen::MatrixXd out(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = kernel_value(spec, a.row(i), b.row(j));
    return out;
}

/// Pairwise similarities mapped into the open unit interval.
struct SimilarityMatrix {
    Eigen::MatrixXd w;
    double epsilon = 1e-3;

    [[nodiscard]] Eigen::Index size() const noexcept { return w.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return w(i, j); }
};

inline constexpr double kDefaultSimilarityEpsilon = 1e-3;

/// RBF entries are clamped directly. Other kernels are cosine-normalised to
/// [-1, 1] and mapped affinely to [0, 1] before clamping to [eps, 1 - eps].
inline SimilarityMatrix similarity_from_gram(const GramMatrix& g, double epsilon = kDefaultSimilarityEpsilon) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw DomainError("similarity epsilon must lie in (0, 0.5)");
    const Eigen::Index n = g.size();
    const double lo = epsilon;
    const double hi = 1.0 - epsilon;
    SimilarityMatrix s{Eigen::MatrixXd(n, n), epsilon};
    if (g.spec.kind == KernelKind::rbf) {
        s.w = g.values.cwiseMax(lo).cwiseMin(hi);
        return s;
    }
    const Eigen::VectorXd diag = g.values.diagonal();
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(diag(i) > 0.0)) throw DomainError("invalid Gram diagonal at row " + std::to_string(i));
    const Eigen::VectorXd inv = diag.cwiseSqrt().cwiseInverse();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            const double cosine = g.values(i, j) * inv(i) * inv(j);
            const double v = std::clamp(0.5 * (cosine + 1.0), lo, hi);
            s.w(i, j) = v;
            s.w(j, i) = v;
        }
    }
    return s;
}

/// Debug dump of W as plain CSV.
inline void write_similarity_csv(const SimilarityMatrix& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        for (Eigen::Index j = 0; j < s.size(); ++j) out << (j ? "," : "") << s.w(i, j);
        out << '\n';
    }
}

}  // namespace pcssvm
