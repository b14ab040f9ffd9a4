#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "urnlab/errors.hpp"
#include "urnlab/urn_model.hpp"

namespace urnlab {

enum class Regime { Small, Critical, Large };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::Small: return "small";
        case Regime::Critical: return "critical";
        default: return "large";
    }
}

/// One (possibly merged) eigenvalue with its projection P, nilpotent N and
/// index nu (largest power with N^nu != 0).
struct EigenGroup {
    std::complex<double> lambda;
    int algebraic_multiplicity = 1;
    Eigen::MatrixXcd P;
    Eigen::MatrixXcd N;
    int nu = 0;
};

struct SpectralDecomposition {
    std::vector<EigenGroup> groups; // ordered by decreasing real part
    double lambda1 = 0.0;
    Eigen::RowVectorXd v1; // principal left eigenvector, components sum to 1
    int nu2 = 0;           // max nu over groups with Re(lambda) = Re(lambda_2)
    double index = 0.0;    // Re(lambda_2) / lambda_1
    Regime regime = Regime::Small;
    bool regime_near_boundary = false; // |index - 1/2| < 1e-6, call is tolerance-sensitive
};

namespace detail {

/// Swap adjacent diagonal entries p, p+1 of a complex Schur form by a
/// unitary similarity; U accumulates the rotation.
inline void schur_swap(Eigen::MatrixXcd& t, Eigen::MatrixXcd& u, int p) {
    using cd = std::complex<double>;
    const cd a = t(p, p), b = t(p + 1, p + 1), c = t(p, p + 1);
    const cd d = b - a;
    const double r = std::sqrt(std::norm(c) + std::norm(d));
    if (r == 0.0) return; // equal eigenvalues, nothing to move
    // first column of q is the unit eigenvector of [[a,c],[0,b]] for b
    Eigen::Matrix2cd q;
    q(0, 0) = c / r;
    q(1, 0) = d / r;
    q(0, 1) = -std::conj(q(1, 0));
    q(1, 1) = std::conj(q(0, 0));
    const int n = static_cast<int>(t.rows());
    t.block(p, 0, 2, n) = q.adjoint() * t.block(p, 0, 2, n);
    t.block(0, p, n, 2) = t.block(0, p, n, 2) * q;
    u.block(0, p, n, 2) = u.block(0, p, n, 2) * q;
    t(p + 1, p) = 0.0;
}

/// Solve the small Sylvester equation T11 Y - Y T22 = -T12 by vectorization.
inline Eigen::MatrixXcd sylvester_dense(const Eigen::MatrixXcd& t11,
                                        const Eigen::MatrixXcd& t22,
                                        const Eigen::MatrixXcd& t12) {
    const int m = static_cast<int>(t11.rows());
    const int n = static_cast<int>(t22.rows());
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(m * n, m * n);
    // vec is column-major: vec(T11 Y) = (I (x) T11) vec Y, vec(Y T22) = (T22^T (x) I) vec Y
    for (int j = 0; j < n; ++j)
        op.block(j * m, j * m, m, m) += t11;
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l)
            op.block(j * m, l * m, m, m) -= t22(l, j) * Eigen::MatrixXcd::Identity(m, m);
    Eigen::VectorXcd rhs(m * n);
    for (int j = 0; j < n; ++j) rhs.segment(j * m, m) = -t12.col(j);
    Eigen::VectorXcd y = op.fullPivLu().solve(rhs);
    Eigen::MatrixXcd out(m, n);
    for (int j = 0; j < n; ++j) out.col(j) = y.segment(j * m, m);
    return out;
}

} // namespace detail

/// Perron pair of an irreducible balanced core: lambda_1 = b and the left
/// eigenvector with positive components summing to 1.
inline std::pair<double, Eigen::RowVectorXd> principal_pair(const CoreMatrix& core) {
    const int k = core.k();
    if (!check_irreducible(core, 1))
        throw model_error("principal_pair requires an irreducible core");
    const double b = static_cast<double>(core.balance());
    Eigen::MatrixXd at = core.entries.cast<double>().transpose();
    at -= b * Eigen::MatrixXd::Identity(k, k);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(at, Eigen::ComputeFullV);
    Eigen::VectorXd v = svd.matrixV().col(k - 1); // null direction
    double sum = v.sum();
    if (std::abs(sum) < 1e-14) throw numeric_error("degenerate principal eigenvector");
    v /= sum;
    for (int i = 0; i < k; ++i)
        if (v(i) <= 0.0)
            throw numeric_error("principal eigenvector has a nonpositive component");
    return {b, v.transpose()};
}

/// Regime from the core index with a tolerance band around 1/2. Exact-half
/// detection runs first: the critical cases of interest have 2 Re(lambda_2)
/// equal to b as integers.
inline Regime classify(double index, double lambda1, double re_lambda2, double tol_half,
                       bool* near_boundary = nullptr) {
    if (near_boundary) *near_boundary = std::abs(index - 0.5) < 1e-6;
    if (std::abs(2.0 * re_lambda2 - lambda1) <= 1e-9 * lambda1) return Regime::Critical;
    if (index < 0.5 - tol_half) return Regime::Small;
    if (index > 0.5 + tol_half) return Regime::Large;
    return Regime::Critical;
}

inline Regime classify(const SpectralDecomposition& dec, double tol_half) {
    double re2 = dec.groups.size() > 1 ? dec.groups[1].lambda.real() : dec.lambda1;
    return classify(dec.index, dec.lambda1, re2, tol_half);
}

/// Grouped eigen-structure of a square matrix via a reordered complex Schur
/// form. Eigenvalues within tol*(1+|lambda|) of each other are merged into one
/// group; each group gets its spectral projection and nilpotent part. Groups
/// come back sorted by decreasing real part, then decreasing imaginary part.
inline std::vector<EigenGroup> eigen_groups(const Eigen::MatrixXd& a_real, double tol = -1.0) {
    using cd = std::complex<double>;
    const int k = static_cast<int>(a_real.rows());
    const Eigen::MatrixXcd a = a_real.cast<cd>();
    if (tol <= 0.0) tol = 1e-7 * (1.0 + a_real.norm());

    Eigen::MatrixXcd t0, u0;
    {
        Eigen::ComplexSchur<Eigen::MatrixXcd> schur(a);
        if (schur.info() == Eigen::Success) {
            t0 = schur.matrixT();
            u0 = schur.matrixU();
        } else {
            // shifted QR can cycle on permutation-like matrices; a fixed random
            // unitary similarity breaks the symmetry without changing spectra
            std::mt19937_64 gen(0x9e3779b97f4a7c15ull);
            std::uniform_real_distribution<double> unif(-1.0, 1.0);
            Eigen::MatrixXcd r(k, k);
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) r(i, j) = cd(unif(gen), unif(gen));
            const Eigen::MatrixXcd q =
                Eigen::HouseholderQR<Eigen::MatrixXcd>(r).householderQ();
            Eigen::ComplexSchur<Eigen::MatrixXcd> retry(q.adjoint() * a * q);
            if (retry.info() != Eigen::Success)
                throw numeric_error("complex Schur iteration failed");
            t0 = retry.matrixT();
            u0 = q * retry.matrixU();
        }
    }

    std::vector<cd> eig(k);
    for (int i = 0; i < k; ++i) eig[i] = t0(i, i);

    // union-find clustering at tolerance tol*(1+|lambda|)
    std::vector<int> parent(k);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    auto close = [&](cd x, cd y) {
        return std::abs(x - y) <= tol * (1.0 + std::max(std::abs(x), std::abs(y)));
    };
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            if (close(eig[i], eig[j])) parent[find(i)] = find(j);

    std::vector<int> cluster_of(k);
    std::vector<std::vector<int>> members;
    {
        std::vector<int> root_to_cluster(k, -1);
        for (int i = 0; i < k; ++i) {
            int r = find(i);
            if (root_to_cluster[r] < 0) {
                root_to_cluster[r] = static_cast<int>(members.size());
                members.emplace_back();
            }
            cluster_of[i] = root_to_cluster[r];
            members[cluster_of[i]].push_back(i);
        }
    }
    // merged-group ambiguity: distinct clusters separated by less than twice
    // the merge tolerance cannot be resolved at this tol
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            if (cluster_of[i] != cluster_of[j] &&
                std::abs(eig[i] - eig[j]) <=
                    2.0 * tol * (1.0 + std::max(std::abs(eig[i]), std::abs(eig[j]))))
                throw numeric_error("eigenvalue clusters overlap near the merge tolerance; "
                                    "retry with a different tol");

    const int nc = static_cast<int>(members.size());
    std::vector<cd> cluster_lambda(nc);
    for (int c = 0; c < nc; ++c) {
        cd sum = 0.0;
        for (int i : members[c]) sum += eig[i];
        cluster_lambda[c] = sum / static_cast<double>(members[c].size());
    }

    std::vector<EigenGroup> groups;
    const double nilpotent_floor = 1e-8 * (1.0 + a_real.norm());

    for (int c = 0; c < nc; ++c) {
        // bring cluster c to the leading block of a fresh copy of the Schur form
        Eigen::MatrixXcd t = t0, u = u0;
        std::vector<int> ids = cluster_of;
        const int m = static_cast<int>(members[c].size());
        for (int target = 0; target < m; ++target) {
            int pos = target;
            while (ids[pos] != c) ++pos;
            for (; pos > target; --pos) {
                detail::schur_swap(t, u, pos - 1);
                std::swap(ids[pos - 1], ids[pos]);
            }
        }
        EigenGroup g;
        g.lambda = cluster_lambda[c];
        g.algebraic_multiplicity = m;
        if (m == k) {
            g.P = Eigen::MatrixXcd::Identity(k, k);
        } else {
            const Eigen::MatrixXcd y = detail::sylvester_dense(
                t.topLeftCorner(m, m), t.bottomRightCorner(k - m, k - m),
                t.topRightCorner(m, k - m));
            Eigen::MatrixXcd basis = Eigen::MatrixXcd::Zero(k, k);
            basis.topLeftCorner(m, m) = Eigen::MatrixXcd::Identity(m, m);
            basis.topRightCorner(m, k - m) = -y;
            g.P = u * basis * u.adjoint();
        }
        g.N = a * g.P - g.lambda * g.P;
        if (g.N.norm() <= nilpotent_floor) {
            g.N.setZero();
            g.nu = 0;
        } else {
            const double rank_tol = 1e-8 * g.N.norm();
            Eigen::MatrixXcd pw = g.N;
            int nu = 1;
            while (nu < m) {
                Eigen::MatrixXcd next = pw * g.N;
                if (next.norm() <= rank_tol) break;
                pw = next;
                ++nu;
            }
            g.nu = nu;
        }
        groups.push_back(std::move(g));
    }

    std::sort(groups.begin(), groups.end(), [](const EigenGroup& x, const EigenGroup& y) {
        if (x.lambda.real() != y.lambda.real()) return x.lambda.real() > y.lambda.real();
        return x.lambda.imag() > y.lambda.imag();
    });
    return groups;
}

inline SpectralDecomposition decompose(const CoreMatrix& core, double tol = -1.0) {
    const int k = core.k();
    SpectralDecomposition dec;
    dec.groups = eigen_groups(core.entries.cast<double>(), tol);
    if (tol <= 0.0) tol = 1e-7 * (1.0 + core.entries.cast<double>().norm());

    const int b = core.balance();
    dec.lambda1 = static_cast<double>(b);
    if (check_irreducible(core, 1)) {
        dec.v1 = principal_pair(core).second;
    } else {
        dec.v1 = Eigen::RowVectorXd::Zero(k);
    }

    if (dec.groups.size() > 1) {
        const double re2 = dec.groups[1].lambda.real();
        dec.index = re2 / dec.lambda1;
        dec.nu2 = 0;
        for (size_t i = 1; i < dec.groups.size(); ++i)
            if (std::abs(dec.groups[i].lambda.real() - re2) <= tol * (1.0 + std::abs(re2)))
                dec.nu2 = std::max(dec.nu2, dec.groups[i].nu);
        dec.regime = classify(dec.index, dec.lambda1, re2, 1e-9, &dec.regime_near_boundary);
    } else {
        dec.index = 1.0;
        dec.nu2 = dec.groups[0].nu;
        dec.regime = Regime::Large;
    }
    return dec;
}

/// Propagator F_{i,j} = prod_{i <= l < j} (I + A / (b l + tau0)); F_{i,i} = I.
inline Eigen::MatrixXd f_product(long long i, long long j, const CoreMatrix& core, int tau0,
                                 int b) {
    if (i < 0 || j < i) throw std::invalid_argument("f_product: need 0 <= i <= j");
    const int k = core.k();
    const Eigen::MatrixXd a = core.entries.cast<double>();
    Eigen::MatrixXd f = Eigen::MatrixXd::Identity(k, k);
    for (long long l = i; l < j; ++l) {
        const double tau = static_cast<double>(b) * l + tau0;
        f = f * (Eigen::MatrixXd::Identity(k, k) + a / tau);
    }
    return f;
}

/// Scalar counterpart f_{i,j}(z) evaluated through the Gamma-ratio closed
/// form, valid for complex z.
inline std::complex<double> f_scalar_gamma(long long i, long long j, std::complex<double> z,
                                           int tau0, int b) {
    // lgamma of complex argument via the Lanczos approximation
    auto clgamma = [](std::complex<double> x) {
        static const double g[] = {676.5203681218851,     -1259.1392167224028,
                                   771.32342877765313,    -176.61502916214059,
                                   12.507343278686905,    -0.13857109526572012,
                                   9.9843695780195716e-6, 1.5056327351493116e-7};
        std::complex<double> sum(0.99999999999980993, 0.0);
        for (int n = 0; n < 8; ++n) sum += g[n] / (x + static_cast<double>(n));
        const std::complex<double> t = x + 6.5;
        return 0.5 * std::log(2.0 * M_PI) + (x - 0.5) * std::log(t) - t + std::log(sum);
    };
    const std::complex<double> tb(static_cast<double>(tau0) / b, 0.0);
    const std::complex<double> zb = z / static_cast<double>(b);
    return std::exp(clgamma(static_cast<double>(j) + tb + zb) - clgamma(static_cast<double>(j) + tb) +
                    clgamma(static_cast<double>(i) + tb) - clgamma(static_cast<double>(i) + tb + zb));
}

/// The limit of F_{ceil(xn), n}: x^{-A/b} = exp(-ln(x) A / b).
inline Eigen::MatrixXd matrix_power_x(const CoreMatrix& core, int b, double x) {
    if (x <= 0.0 || x > 1.0) throw std::invalid_argument("matrix_power_x: need x in (0,1]");
    const Eigen::MatrixXd a = core.entries.cast<double>();
    const Eigen::MatrixXd e = (-std::log(x) / b) * a;
    return e.exp();
}

} // namespace urnlab
