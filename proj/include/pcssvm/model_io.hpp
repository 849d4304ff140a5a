#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "pcssvm/error.hpp"
#include "pcssvm/smo.hpp"

namespace pcssvm {

// Text model format, version 1. One record per line:
//
//   pcssvm-model 1
//   kernel <linear | poly:<degree>:<gamma>:<coef0> | rbf:<gamma>>
//   c_pos <real>
//   c_neg <real>
//   kkt_tol <real>
//   alpha_eps <real>
//   bias <real>
//   converged <0|1>
//   features <d>
//   support_vectors <m>
//   <alpha> <label> <x_1> ... <x_d>      (m lines)
//
// Reals are written with 17 significant digits so a reload reproduces the
// decision function bit for bit. A loaded model's training reference is its
// support set: alphas and support_indices refer to the m stored rows.

inline constexpr int kModelFormatVersion = 1;

inline void write_model(std::ostream& os, const SvmModel& m) {
    const auto old = os.precision(17);
    os << "pcssvm-model " << kModelFormatVersion << '\n'
       << "kernel " << m.params.kernel.to_string() << '\n'
       << "c_pos " << m.params.c_pos << '\n'
       << "c_neg " << m.params.c_neg << '\n'
       << "kkt_tol " << m.params.kkt_tol << '\n'
       << "alpha_eps " << m.params.alpha_eps << '\n'
       << "bias " << m.bias << '\n'
       << "converged " << (m.converged ? 1 : 0) << '\n'
       << "features " << m.sv_features.cols() << '\n'
       << "support_vectors " << m.sv_features.rows() << '\n';
    for (Eigen::Index s = 0; s < m.sv_features.rows(); ++s) {
        const double alpha = m.alphas[m.support_indices[static_cast<std::size_t>(s)]];
        os << alpha << ' ' << (m.sv_coef(s) >= 0.0 ? 1 : -1);
        for (Eigen::Index j = 0; j < m.sv_features.cols(); ++j) os << ' ' << m.sv_features(s, j);
        os << '\n';
    }
    os.precision(old);
}

inline SvmModel read_model(std::istream& is) {
    std::size_t line_no = 0;
    std::string line;
    auto next = [&](const std::string& key) {
        if (!std::getline(is, line)) throw ParseError("unexpected end of model, expected '" + key + "'", line_no + 1);
        ++line_no;
        std::istringstream ls(line);
        std::string got;
        std::string value;
        ls >> got >> value;
        if (got != key || value.empty()) throw ParseError("expected '" + key + "'", line_no);
        return value;
    };
    auto number = [&](const std::string& key) {
        const auto text = next(key);
        const auto v = detail::parse_double(text);
        if (!v) throw ParseError("bad number for '" + key + "'", line_no);
        return *v;
    };

    if (next("pcssvm-model") != std::to_string(kModelFormatVersion))
        throw ParseError("unsupported model format version", line_no);
    SvmModel m;
    try {
        m.params.kernel = KernelSpec::parse(next("kernel"));
    } catch (const ConfigError& e) {
        throw ParseError(e.what(), line_no);
    }
    m.params.c_pos = number("c_pos");
    m.params.c_neg = number("c_neg");
    m.params.kkt_tol = number("kkt_tol");
    m.params.alpha_eps = number("alpha_eps");
    m.bias = number("bias");
    m.converged = number("converged") != 0.0;
    const auto d = static_cast<Eigen::Index>(number("features"));
    const auto count = static_cast<Eigen::Index>(number("support_vectors"));
    if (d < 0 || count < 0) throw ParseError("negative size", line_no);

    m.sv_features.resize(count, d);
    m.sv_coef.resize(count);
    m.alphas.resize(static_cast<std::size_t>(count));
    for (Eigen::Index s = 0; s < count; ++s) {
        if (!std::getline(is, line)) throw ParseError("missing support vector row", line_no + 1);
        ++line_no;
        std::istringstream ls(line);
        double alpha = 0.0;
        int label = 0;
        if (!(ls >> alpha >> label) || (label != 1 && label != -1))
            throw ParseError("bad support vector header", line_no);
        for (Eigen::Index j = 0; j < d; ++j)
            if (!(ls >> m.sv_features(s, j))) throw ParseError("short support vector row", line_no);
        m.alphas[static_cast<std::size_t>(s)] = alpha;
        m.sv_coef(s) = alpha * label;
        m.support_indices.push_back(static_cast<std::size_t>(s));
    }
    return m;
}

}  // namespace pcssvm
