#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "urnlab/combinatorics.hpp"
#include "urnlab/errors.hpp"

namespace urnlab {

enum class SamplingMode { WithoutReplacement, WithReplacement };

inline std::string to_string(SamplingMode m) {
    return m == SamplingMode::WithoutReplacement ? "without_replacement" : "with_replacement";
}

/// The k x k submatrix of the replacement matrix at single-color samples.
/// Row i says what is added when the whole sample is color i.
struct CoreMatrix {
    Eigen::MatrixXi entries;

    int k() const { return static_cast<int>(entries.rows()); }

    /// Common row sum; throws model_error if rows disagree.
    int balance() const {
        const int b = entries.row(0).sum();
        for (int i = 1; i < k(); ++i)
            if (entries.row(i).sum() != b)
                throw model_error("core rows have unequal sums");
        return b;
    }
};

struct UrnSpec {
    int k = 0;
    int s = 1;
    int b = 0;
    CoreMatrix core;
    Eigen::RowVectorXi x0;
    SamplingMode mode = SamplingMode::WithoutReplacement;

    int tau0() const { return x0.sum(); }
};

/// Full replacement matrix, one row per sample in canonical order.
struct ReplacementMatrix {
    Eigen::MatrixXi rows;
    std::vector<Composition> labels;
};

struct ValidationReport {
    bool ok = true;
    std::vector<std::pair<std::string, std::string>> violations; // (rule-id, message)
    bool irreducible = false;
    std::vector<std::string> warnings;

    void fail(const std::string& rule, const std::string& msg) {
        ok = false;
        violations.emplace_back(rule, msg);
    }
};

namespace detail {

/// Strong connectivity of the graph with an edge i->j when edge(i,j) holds.
template <typename EdgeFn>
bool strongly_connected(int k, EdgeFn edge) {
    auto reach_all = [&](auto neighbors) {
        std::vector<bool> seen(k, false);
        std::vector<int> stack{0};
        seen[0] = true;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < k; ++v) {
                if (!seen[v] && neighbors(u, v)) {
                    seen[v] = true;
                    stack.push_back(v);
                }
            }
        }
        for (bool s : seen)
            if (!s) return false;
        return true;
    };
    return reach_all(edge) && reach_all([&](int u, int v) { return edge(v, u); });
}

inline std::string parts_string(const std::vector<int>& parts) {
    std::string s;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(parts[i]);
    }
    return s;
}

} // namespace detail

/// True iff every color is dominant: the directed graph with an edge i->j
/// whenever (A + s*I)[i,j] > 0 is strongly connected.
inline bool check_irreducible(const CoreMatrix& core, int s) {
    const int k = core.k();
    return detail::strongly_connected(k, [&](int i, int j) {
        return core.entries(i, j) + (i == j ? s : 0) > 0;
    });
}

/// Expand the core to the full replacement matrix: row for sample c is
/// (1/s) * c * A. Throws model_error for a non-integer row.
inline ReplacementMatrix build_replacement_matrix(const CoreMatrix& core, int s) {
    if (s < 1) throw std::invalid_argument("build_replacement_matrix: s must be >= 1");
    const int k = core.k();
    ReplacementMatrix m;
    m.labels = enumerate_compositions(k, s);
    m.rows.resize(static_cast<int>(m.labels.size()), k);
    for (const Composition& c : m.labels) {
        for (int j = 0; j < k; ++j) {
            long long num = 0;
            for (int i = 0; i < k; ++i)
                num += static_cast<long long>(c.parts[i]) * core.entries(i, j);
            if (num % s != 0)
                throw model_error("replacement row for sample (" +
                                  detail::parts_string(c.parts) + ") is not integral");
            m.rows(static_cast<int>(c.rank), j) = static_cast<int>(num / s);
        }
    }
    return m;
}

/// Tenability / balance / integrality / irreducibility checks. Failures are
/// recorded, never thrown; irreducibility is informational only.
inline ValidationReport validate(const UrnSpec& spec) {
    ValidationReport rep;
    const int k = spec.core.k();
    const Eigen::MatrixXi& a = spec.core.entries;

    if (k != spec.k || a.cols() != spec.k)
        rep.fail("shape", "core is not k x k");
    if (spec.x0.size() != spec.k)
        rep.fail("shape", "x0 does not have k entries");
    if (!rep.ok) return rep;

    for (int i = 0; i < k; ++i) {
        if (a.row(i).sum() != spec.b)
            rep.fail("balance", "core row " + std::to_string(i) + " sums to " +
                                std::to_string(a.row(i).sum()) + ", expected b = " +
                                std::to_string(spec.b));
    }
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            if (i != j && a(i, j) < 0)
                rep.fail("tenability", "off-diagonal entry (" + std::to_string(i) + "," +
                                       std::to_string(j) + ") is negative");
            if (i == j && a(i, i) < -spec.s)
                rep.fail("tenability", "diagonal entry " + std::to_string(i) +
                                       " is below -s");
        }
    }
    if (spec.tau0() < spec.s)
        rep.fail("initial-total", "tau0 = " + std::to_string(spec.tau0()) +
                                  " is below the sample size s = " + std::to_string(spec.s));
    for (int i = 0; i < k; ++i)
        if (spec.x0(i) < 0)
            rep.fail("initial-counts", "x0[" + std::to_string(i) + "] is negative");

    // pairwise congruence mod s makes every derived row integral
    for (int i = 1; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            int d = a(i, j) - a(0, j);
            if (((d % spec.s) + spec.s) % spec.s != 0) {
                rep.fail("integrality", "rows 0 and " + std::to_string(i) +
                                        " differ at column " + std::to_string(j) +
                                        " by a non-multiple of s");
            }
        }
    }

    rep.irreducible = check_irreducible(spec.core, spec.s);
    if (!rep.irreducible)
        rep.warnings.push_back("core is reducible; asymptotic results do not apply");
    return rep;
}

} // namespace urnlab
