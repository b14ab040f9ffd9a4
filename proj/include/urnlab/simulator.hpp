#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "urnlab/combinatorics.hpp"
#include "urnlab/errors.hpp"
#include "urnlab/moments.hpp"
#include "urnlab/rng.hpp"
#include "urnlab/urn_model.hpp"

namespace urnlab {

struct UrnState {
    Eigen::RowVectorXi x;
    long long n = 0;
    long long tau = 0;
};

struct Trajectory {
    std::vector<UrnState> states;            // states[0] = initial
    std::vector<Composition> draws;          // draws[i] produced states[i+1]
    std::vector<Eigen::RowVectorXd> y_seq;   // optional martingale differences
};

struct MonteCarloSummary {
    long long reps = 0;
    long long n = 0;
    Eigen::RowVectorXd mean_hat;
    Eigen::MatrixXd cov_hat;
    Eigen::RowVectorXd mean_se;
    Eigen::MatrixXd cov_se;
    Eigen::RowVectorXd skewness;       // of (X_n - b v1 n)/sqrt(xi_n), per component
    Eigen::RowVectorXd excess_kurtosis;
    std::uint64_t seed = 0;
    SamplingMode mode = SamplingMode::WithoutReplacement;
    std::vector<Eigen::RowVectorXd> terminal_states; // one per replication
};

namespace detail {

/// Sample counts color by color through conditional univariate laws; exact
/// multivariate hypergeometric (without replacement) or multinomial (with).
inline void draw_parts(const long long* x, long long tau, int k, int s, SamplingMode mode,
                       CounterRng& rng, int* out) {
    long long rem_pop = tau;
    int rem_s = s;
    for (int i = 0; i < k; ++i) {
        if (i == k - 1) {
            out[i] = rem_s;
            break;
        }
        if (rem_s == 0) {
            out[i] = 0;
            continue;
        }
        const long long ki = x[i];
        int c;
        const double u = rng.next_unit();
        if (mode == SamplingMode::WithoutReplacement) {
            const long long rest = rem_pop - ki;
            const int cmin = static_cast<int>(std::max<long long>(0, rem_s - rest));
            const int cmax = static_cast<int>(std::min<long long>(rem_s, ki));
            // P(c) = C(s',c) (ki)_c (rest)_{s'-c} / (pop)_{s'}
            double denom = 1.0;
            for (int t = 0; t < rem_s; ++t) denom *= static_cast<double>(rem_pop - t);
            c = cmin;
            double p = falling_factorial(static_cast<double>(rem_s), cmin) /
                       falling_factorial(static_cast<double>(cmin), cmin) *
                       falling_factorial(static_cast<double>(ki), cmin) *
                       falling_factorial(static_cast<double>(rest), rem_s - cmin) / denom;
            double cum = p;
            while (c < cmax && cum < u) {
                // ratio P(c+1)/P(c)
                p *= static_cast<double>(ki - c) * (rem_s - c) /
                     (static_cast<double>(c + 1) * (rest - rem_s + c + 1));
                cum += p;
                ++c;
            }
        } else if (ki == 0) {
            c = 0;
        } else if (ki == rem_pop) {
            c = rem_s;
        } else {
            const double pr = static_cast<double>(ki) / static_cast<double>(rem_pop);
            const int cmax = rem_s;
            c = 0;
            double p = std::pow(1.0 - pr, rem_s);
            double cum = p;
            while (c < cmax && cum < u) {
                p *= static_cast<double>(rem_s - c) / (c + 1) * pr / (1.0 - pr);
                cum += p;
                ++c;
            }
        }
        out[i] = c;
        rem_s -= c;
        rem_pop -= ki;
    }
}

inline int thread_budget() {
    if (const char* env = std::getenv("URNLAB_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Order-independent pairwise reduction of f(i) over [lo, hi).
template <typename T, typename F>
T pairwise_sum(long long lo, long long hi, F f) {
    if (hi - lo == 1) return f(lo);
    long long mid = lo + (hi - lo) / 2;
    return pairwise_sum<T>(lo, mid, f) + pairwise_sum<T>(mid, hi, f);
}

} // namespace detail

/// One sample from the current urn contents.
inline Composition draw_sample(const UrnState& state, int s, SamplingMode mode,
                               CounterRng& rng) {
    const int k = static_cast<int>(state.x.size());
    if (mode == SamplingMode::WithoutReplacement && state.tau < s)
        throw tenability_violation("fewer than s balls in the urn");
    if (state.tau < 1) throw tenability_violation("empty urn");
    std::vector<long long> x(k);
    for (int i = 0; i < k; ++i) x[i] = state.x(i);
    Composition c;
    c.k = k;
    c.s = s;
    c.parts.resize(k);
    detail::draw_parts(x.data(), state.tau, k, s, mode, rng, c.parts.data());
    c.rank = composition_rank(c.parts);
    return c;
}

/// Apply the replacement row for the drawn sample.
inline UrnState step(const UrnState& state, const ReplacementMatrix& m, const Composition& draw) {
    UrnState next;
    next.x = state.x + m.rows.row(static_cast<int>(draw.rank));
    next.n = state.n + 1;
    next.tau = next.x.sum();
    for (int i = 0; i < next.x.size(); ++i)
        if (next.x(i) < 0)
            throw tenability_violation("color " + std::to_string(i) +
                                       " went negative at step " + std::to_string(next.n));
    return next;
}

/// Exact annihilation check: s * tau * (Y_n . 1) computed in integers from the
/// actual draw. Zero for every balanced scheme.
inline __int128 y_annihilation_residue(const UrnSpec& spec, const Eigen::RowVectorXi& x_prev,
                                       const Composition& draw) {
    const long long tau = x_prev.sum();
    __int128 qa = 0, xa = 0;
    for (int j = 0; j < spec.k; ++j) {
        for (int i = 0; i < spec.k; ++i) {
            qa += static_cast<__int128>(draw.parts[i]) * spec.core.entries(i, j);
            xa += static_cast<__int128>(x_prev(i)) * spec.core.entries(i, j);
        }
    }
    return static_cast<__int128>(tau) * qa - static_cast<__int128>(spec.s) * xa;
}

inline Trajectory simulate_one(const UrnSpec& spec, long long n, CounterRng& rng,
                               bool record_y = false) {
    const ReplacementMatrix m = build_replacement_matrix(spec.core, spec.s);
    const Eigen::MatrixXd a = spec.core.entries.cast<double>();
    Trajectory t;
    UrnState st{spec.x0, 0, spec.tau0()};
    t.states.push_back(st);
    for (long long i = 0; i < n; ++i) {
        Composition q = draw_sample(st, spec.s, spec.mode, rng);
        if (record_y) {
            Eigen::RowVectorXd qv(spec.k);
            for (int j = 0; j < spec.k; ++j) qv(j) = q.parts[j];
            const Eigen::RowVectorXd xv = st.x.cast<double>();
            t.y_seq.push_back((qv / spec.s - xv / static_cast<double>(st.tau)) * a);
        }
        st = step(st, m, q);
        t.draws.push_back(std::move(q));
        t.states.push_back(st);
    }
    return t;
}

/// Replicated terminal-state estimation. Replication r uses the stream
/// (master_seed, r); results do not depend on thread count or scheduling.
inline MonteCarloSummary monte_carlo(const UrnSpec& spec, long long n, long long reps,
                                     std::uint64_t master_seed) {
    if (reps < 2) throw std::invalid_argument("monte_carlo: need reps >= 2");
    const int k = spec.k;
    const ReplacementMatrix m = build_replacement_matrix(spec.core, spec.s);

    // dense sample -> replacement-row lookup, indexed by base-(s+1) digits
    const int base = spec.s + 1;
    long long table_size = 1;
    for (int i = 0; i < k; ++i) table_size *= base;
    std::vector<std::vector<long long>> row_of(static_cast<size_t>(table_size));
    for (const Composition& c : m.labels) {
        long long code = 0;
        for (int i = k - 1; i >= 0; --i) code = code * base + c.parts[i];
        std::vector<long long> row(k);
        for (int j = 0; j < k; ++j) row[j] = m.rows(static_cast<int>(c.rank), j);
        row_of[static_cast<size_t>(code)] = std::move(row);
    }

    std::vector<Eigen::RowVectorXd> finals(static_cast<size_t>(reps));
    const int nthreads = std::min<long long>(detail::thread_budget(), reps);
    std::vector<std::thread> pool;
    std::vector<std::string> thread_errors(nthreads);
    for (int t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t]() {
            try {
                std::vector<long long> x(k);
                std::vector<int> parts(k);
                for (long long r = t; r < reps; r += nthreads) {
                    CounterRng rng(master_seed, static_cast<std::uint64_t>(r));
                    for (int i = 0; i < k; ++i) x[i] = spec.x0(i);
                    long long tau = spec.tau0();
                    for (long long stepi = 0; stepi < n; ++stepi) {
                        detail::draw_parts(x.data(), tau, k, spec.s, spec.mode, rng,
                                           parts.data());
                        long long code = 0;
                        for (int i = k - 1; i >= 0; --i) code = code * base + parts[i];
                        const std::vector<long long>& row = row_of[static_cast<size_t>(code)];
                        for (int i = 0; i < k; ++i) {
                            x[i] += row[i];
                            if (x[i] < 0) throw tenability_violation("negative count on path");
                        }
                        tau += spec.b;
                    }
                    Eigen::RowVectorXd xv(k);
                    for (int i = 0; i < k; ++i) xv(i) = static_cast<double>(x[i]);
                    finals[static_cast<size_t>(r)] = xv;
                }
            } catch (const std::exception& e) {
                thread_errors[t] = e.what();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const std::string& err : thread_errors)
        if (!err.empty()) throw tenability_violation(err);

    MonteCarloSummary sum;
    sum.reps = reps;
    sum.n = n;
    sum.seed = master_seed;
    sum.mode = spec.mode;

    sum.mean_hat = detail::pairwise_sum<Eigen::RowVectorXd>(
                       0, reps, [&](long long r) { return finals[static_cast<size_t>(r)]; }) /
                   static_cast<double>(reps);
    sum.cov_hat = detail::pairwise_sum<Eigen::MatrixXd>(0, reps, [&](long long r) {
                      const Eigen::RowVectorXd d = finals[static_cast<size_t>(r)] - sum.mean_hat;
                      return Eigen::MatrixXd(d.transpose() * d);
                  }) /
                  static_cast<double>(reps - 1);

    // moment-based standard errors of the covariance entries
    Eigen::MatrixXd m22 = detail::pairwise_sum<Eigen::MatrixXd>(0, reps, [&](long long r) {
                              const Eigen::RowVectorXd d =
                                  finals[static_cast<size_t>(r)] - sum.mean_hat;
                              const Eigen::MatrixXd o = d.transpose() * d;
                              return Eigen::MatrixXd(o.cwiseProduct(o));
                          }) /
                          static_cast<double>(reps);
    sum.cov_se.resize(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            sum.cov_se(i, j) = std::sqrt(
                std::max(0.0, m22(i, j) - sum.cov_hat(i, j) * sum.cov_hat(i, j)) / reps);
    sum.mean_se.resize(k);
    for (int i = 0; i < k; ++i) sum.mean_se(i) = std::sqrt(sum.cov_hat(i, i) / reps);

    // standardized residual moments against the theory centering/scale when
    // the core is irreducible, sample centering otherwise
    Eigen::RowVectorXd center;
    double scale = std::sqrt(static_cast<double>(n));
    if (check_irreducible(spec.core, spec.s)) {
        const auto [l1, v1] = principal_pair(spec.core);
        center = l1 * static_cast<double>(n) * v1;
        SpectralDecomposition dec = decompose(spec.core);
        if (dec.regime == Regime::Critical)
            scale = std::sqrt(n * std::pow(std::log(static_cast<double>(n)),
                                           2.0 * dec.nu2 + 1.0));
    } else {
        center = sum.mean_hat;
    }
    sum.skewness.resize(k);
    sum.excess_kurtosis.resize(k);
    for (int i = 0; i < k; ++i) {
        auto mom = [&](int p) {
            return detail::pairwise_sum<double>(0, reps, [&](long long r) {
                       const double d =
                           (finals[static_cast<size_t>(r)](i) - center(i)) / scale;
                       return std::pow(d, p);
                   }) /
                   static_cast<double>(reps);
        };
        const double m1 = mom(1);
        const double m2 = mom(2) - m1 * m1;
        double c3 = 0.0, c4 = 0.0;
        for (long long r = 0; r < reps; ++r) {
            const double d = (finals[static_cast<size_t>(r)](i) - center(i)) / scale - m1;
            c3 += d * d * d;
            c4 += d * d * d * d;
        }
        c3 /= reps;
        c4 /= reps;
        sum.skewness(i) = c3 / std::pow(m2, 1.5);
        sum.excess_kurtosis(i) = c4 / (m2 * m2) - 3.0;
    }
    sum.terminal_states = std::move(finals);
    return sum;
}

struct CompareThresholds {
    double mean_z = 5.0;
    double cov_z = 5.0;
    double limit_rel = 0.2;
    double skew = 0.1;
    double excess_kurtosis = 0.2;
};

struct ComparisonReport {
    double max_mean_dev = 0.0;
    double max_mean_z = 0.0;
    Eigen::MatrixXd cov_z;             // against exact Sigma_n
    bool limit_applicable = false;
    double limit_rel_dev = 0.0;        // against sigma_inf * xi_n, when applicable
    Eigen::RowVectorXd skewness;
    Eigen::RowVectorXd excess_kurtosis;
    bool mean_ok = false;
    bool cov_ok = false;
    bool limit_ok = true;
    bool moments_ok = false;
    bool all_ok = false;
};

/// Empirical summary vs exact moments and (where applicable) the limit law.
inline ComparisonReport compare(const MonteCarloSummary& summary, const AsymptoticSummary& theory,
                                const MomentTrajectory& exact,
                                const CompareThresholds& thr = {}) {
    const int k = static_cast<int>(summary.mean_hat.size());
    if (exact.n_max < summary.n || static_cast<int>(exact.mu[0].size()) != k)
        throw std::invalid_argument("compare: exact trajectory does not cover the summary");
    const Eigen::RowVectorXd& mu = exact.mu[static_cast<size_t>(summary.n)];
    const Eigen::MatrixXd& sig = exact.sigma[static_cast<size_t>(summary.n)];

    ComparisonReport rep;
    rep.max_mean_dev = (summary.mean_hat - mu).cwiseAbs().maxCoeff();
    for (int i = 0; i < k; ++i)
        rep.max_mean_z = std::max(rep.max_mean_z,
                                  std::abs(summary.mean_hat(i) - mu(i)) /
                                      std::max(summary.mean_se(i), 1e-300));
    rep.cov_z.resize(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            rep.cov_z(i, j) = (summary.cov_hat(i, j) - sig(i, j)) /
                              std::max(summary.cov_se(i, j), 1e-300);

    rep.limit_applicable = theory.sigma_inf.has_value();
    if (rep.limit_applicable) {
        double xi = static_cast<double>(summary.n);
        if (theory.regime == Regime::Critical)
            xi = summary.n * std::pow(std::log(static_cast<double>(summary.n)),
                                      2.0 * theory.nu2 + 1.0);
        const Eigen::MatrixXd target = xi * (*theory.sigma_inf);
        rep.limit_rel_dev = (summary.cov_hat - target).norm() / target.norm();
        rep.limit_ok = rep.limit_rel_dev < thr.limit_rel;
    }
    rep.skewness = summary.skewness;
    rep.excess_kurtosis = summary.excess_kurtosis;

    rep.mean_ok = rep.max_mean_z < thr.mean_z;
    rep.cov_ok = rep.cov_z.cwiseAbs().maxCoeff() < thr.cov_z;
    rep.moments_ok = summary.skewness.cwiseAbs().maxCoeff() < thr.skew &&
                     summary.excess_kurtosis.cwiseAbs().maxCoeff() < thr.excess_kurtosis;
    rep.all_ok = rep.mean_ok && rep.cov_ok && rep.moments_ok && rep.limit_ok;
    return rep;
}

} // namespace urnlab
