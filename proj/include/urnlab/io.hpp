#pragma once

#include <json.hpp>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "urnlab/moments.hpp"
#include "urnlab/simulator.hpp"
#include "urnlab/spectral.hpp"
#include "urnlab/urn_model.hpp"

namespace urnlab {

using nlohmann::json;

inline UrnSpec spec_from_json(const json& j) {
    UrnSpec spec;
    spec.k = j.at("k").get<int>();
    spec.s = j.at("s").get<int>();
    const auto& rows = j.at("core");
    spec.core.entries.resize(spec.k, spec.k);
    if (static_cast<int>(rows.size()) != spec.k)
        throw model_error("core must have k rows");
    for (int i = 0; i < spec.k; ++i) {
        if (static_cast<int>(rows[i].size()) != spec.k)
            throw model_error("core row " + std::to_string(i) + " must have k entries");
        for (int c = 0; c < spec.k; ++c) spec.core.entries(i, c) = rows[i][c].get<int>();
    }
    if (j.contains("b"))
        spec.b = j.at("b").get<int>();
    else
        spec.b = spec.core.entries.row(0).sum(); // inferred; validate() flags mismatches
    const auto& x0 = j.at("x0");
    if (static_cast<int>(x0.size()) != spec.k) throw model_error("x0 must have k entries");
    spec.x0.resize(spec.k);
    for (int i = 0; i < spec.k; ++i) spec.x0(i) = x0[i].get<int>();
    const std::string mode = j.value("mode", "without_replacement");
    if (mode == "without_replacement")
        spec.mode = SamplingMode::WithoutReplacement;
    else if (mode == "with_replacement")
        spec.mode = SamplingMode::WithReplacement;
    else
        throw model_error("unknown sampling mode: " + mode);
    return spec;
}

inline UrnSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read spec file: " + path);
    json j;
    in >> j;
    return spec_from_json(j);
}

inline json to_json(const UrnSpec& spec) {
    json rows = json::array();
    for (int i = 0; i < spec.k; ++i) {
        json row = json::array();
        for (int c = 0; c < spec.k; ++c) row.push_back(spec.core.entries(i, c));
        rows.push_back(row);
    }
    json x0 = json::array();
    for (int i = 0; i < spec.k; ++i) x0.push_back(spec.x0(i));
    return json{{"k", spec.k}, {"s", spec.s}, {"b", spec.b},
                {"core", rows}, {"x0", x0}, {"mode", to_string(spec.mode)}};
}

inline json to_json(const ValidationReport& rep) {
    json v = json::array();
    for (const auto& [rule, msg] : rep.violations) v.push_back({{"rule", rule}, {"message", msg}});
    return json{{"ok", rep.ok},
                {"violations", v},
                {"irreducible", rep.irreducible},
                {"warnings", rep.warnings}};
}

inline json vector_json(const Eigen::RowVectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline json to_json(const SpectralDecomposition& dec) {
    json lambda = json::array(), mult = json::array(), nu = json::array();
    for (const EigenGroup& g : dec.groups) {
        lambda.push_back({{"re", g.lambda.real()}, {"im", g.lambda.imag()}});
        mult.push_back(g.algebraic_multiplicity);
        nu.push_back(g.nu);
    }
    return json{{"lambda", lambda},
                {"multiplicity", mult},
                {"nu", nu},
                {"index", dec.index},
                {"nu2", dec.nu2},
                {"regime", to_string(dec.regime)},
                {"regime_near_boundary", dec.regime_near_boundary},
                {"v1", vector_json(dec.v1)}};
}

inline json to_json(const AsymptoticSummary& s) {
    json j{{"regime", to_string(s.regime)},
           {"index", s.index},
           {"nu2", s.nu2},
           {"Qcal", matrix_json(s.qcal)},
           {"B", matrix_json(s.b_sym)},
           {"xi", s.xi_description},
           {"mu_slope", vector_json(s.mu_slope)}};
    if (s.sigma_inf)
        j["sigma_inf"] = matrix_json(*s.sigma_inf);
    else
        j["sigma_inf_note"] = s.sigma_inf_note;
    return j;
}

inline json to_json(const MonteCarloSummary& s) {
    return json{{"reps", s.reps},
                {"n", s.n},
                {"seed", s.seed},
                {"mode", to_string(s.mode)},
                {"mean_hat", vector_json(s.mean_hat)},
                {"cov_hat", matrix_json(s.cov_hat)},
                {"mean_se", vector_json(s.mean_se)},
                {"cov_se", matrix_json(s.cov_se)},
                {"skewness", vector_json(s.skewness)},
                {"excess_kurtosis", vector_json(s.excess_kurtosis)}};
}

inline json to_json(const ComparisonReport& r) {
    return json{{"max_mean_dev", r.max_mean_dev},
                {"max_mean_z", r.max_mean_z},
                {"cov_z", matrix_json(r.cov_z)},
                {"limit_applicable", r.limit_applicable},
                {"limit_rel_dev", r.limit_rel_dev},
                {"skewness", vector_json(r.skewness)},
                {"excess_kurtosis", vector_json(r.excess_kurtosis)},
                {"mean_ok", r.mean_ok},
                {"cov_ok", r.cov_ok},
                {"limit_ok", r.limit_ok},
                {"moments_ok", r.moments_ok},
                {"all_ok", r.all_ok}};
}

// CSV: '.' decimal, 17 significant digits, no locale.
inline std::string csv_number(double v) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17) << v;
    return os.str();
}

inline std::string replacement_matrix_csv(const ReplacementMatrix& m) {
    std::ostringstream os;
    const int k = static_cast<int>(m.rows.cols());
    os << "sample";
    for (int j = 0; j < k; ++j) os << ",m_" << (j + 1);
    os << "\n";
    for (const Composition& c : m.labels) {
        for (int i = 0; i < k; ++i) os << c.parts[i];
        for (int j = 0; j < k; ++j) os << "," << m.rows(static_cast<int>(c.rank), j);
        os << "\n";
    }
    return os.str();
}

inline std::string moments_csv(const MomentTrajectory& t) {
    std::ostringstream os;
    const int k = static_cast<int>(t.mu[0].size());
    os << "n";
    for (int i = 0; i < k; ++i) os << ",mu_" << (i + 1);
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) os << ",sigma_" << (i + 1) << (j + 1);
    os << "\n";
    for (int n = 0; n <= t.n_max; ++n) {
        os << n;
        for (int i = 0; i < k; ++i) os << "," << csv_number(t.mu[n](i));
        for (int i = 0; i < k; ++i)
            for (int j = i; j < k; ++j) os << "," << csv_number(t.sigma[n](i, j));
        os << "\n";
    }
    return os.str();
}

inline std::string terminal_states_csv(const MonteCarloSummary& s) {
    std::ostringstream os;
    const int k = static_cast<int>(s.mean_hat.size());
    os << "rep";
    for (int i = 0; i < k; ++i) os << ",x_" << (i + 1);
    os << "\n";
    for (size_t r = 0; r < s.terminal_states.size(); ++r) {
        os << r;
        for (int i = 0; i < k; ++i)
            os << "," << static_cast<long long>(s.terminal_states[r](i));
        os << "\n";
    }
    return os.str();
}

} // namespace urnlab
