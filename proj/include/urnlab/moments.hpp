#pragma once

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "urnlab/errors.hpp"
#include "urnlab/spectral.hpp"
#include "urnlab/urn_model.hpp"

namespace urnlab {

struct MomentTrajectory {
    int n_max = 0;
    std::vector<Eigen::RowVectorXd> mu;  // mu_0 .. mu_{n_max}
    std::vector<Eigen::MatrixXd> sigma;  // Sigma_0 .. Sigma_{n_max}
    SamplingMode mode = SamplingMode::WithoutReplacement;
};

struct AsymptoticSummary {
    Regime regime = Regime::Small;
    Eigen::MatrixXd qcal;              // s(s-1) v1^T v1 + s diag(v1)
    Eigen::MatrixXd b_sym;             // B = A^T Qcal A / s^2
    std::optional<Eigen::MatrixXd> sigma_inf; // absent for large-index urns
    std::string sigma_inf_note;
    std::string xi_description;
    Eigen::RowVectorXd mu_slope;       // b * v1
    int nu2 = 0;
    double index = 0.0;
};

/// mu_n = X0 * F_{0,n}; the mean is the same under both sampling modes.
inline Eigen::RowVectorXd exact_mean(const UrnSpec& spec, long long n) {
    const int k = spec.k;
    const Eigen::MatrixXd a = spec.core.entries.cast<double>();
    Eigen::RowVectorXd mu = spec.x0.cast<double>();
    for (long long i = 0; i < n; ++i) {
        const double tau = static_cast<double>(spec.b) * i + spec.tau0();
        mu += (mu * a) / tau;
    }
    (void)k;
    return mu;
}

/// Conditional second-moment matrix E[Q^T Q | state] of the without-replacement
/// sample: multivariate hypergeometric second moments.
inline Eigen::MatrixXd qcal_conditional(const Eigen::RowVectorXd& state, double tau, int s) {
    if (tau < s) throw std::invalid_argument("qcal_conditional: tau must be >= s");
    const int k = static_cast<int>(state.size());
    Eigen::MatrixXd q(k, k);
    const double denom = tau * (tau - 1.0);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            if (i == j)
                q(i, i) = (s * (s - 1.0) * state(i) * state(i) +
                           s * (tau - s) * state(i)) / denom;
            else
                q(i, j) = s * (s - 1.0) * state(i) * state(j) / denom;
        }
    }
    return q;
}

namespace detail {

/// One covariance-recurrence step shared by both sampling modes.
inline void cov_step(Eigen::MatrixXd& sigma, Eigen::RowVectorXd& mu, const Eigen::MatrixXd& a,
                     double tau, int s, SamplingMode mode) {
    const int k = static_cast<int>(mu.size());
    const Eigen::MatrixXd prop = Eigen::MatrixXd::Identity(k, k) + a / tau;
    const double c_tau = mode == SamplingMode::WithoutReplacement
                             ? (tau - s) / (s * tau * tau * (tau - 1.0))
                             : 1.0 / (s * tau * tau);
    const Eigen::MatrixXd inner =
        sigma + mu.transpose() * mu - tau * Eigen::MatrixXd(mu.asDiagonal());
    sigma = prop.transpose() * sigma * prop - c_tau * a.transpose() * inner * a;
    mu = mu * prop;
}

} // namespace detail

/// Sigma_n from the exact covariance recurrence (Sigma_0 = 0).
inline Eigen::MatrixXd exact_cov(const UrnSpec& spec, long long n) {
    const int k = spec.k;
    const Eigen::MatrixXd a = spec.core.entries.cast<double>();
    Eigen::RowVectorXd mu = spec.x0.cast<double>();
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(k, k);
    for (long long i = 0; i < n; ++i) {
        const double tau = static_cast<double>(spec.b) * i + spec.tau0();
        detail::cov_step(sigma, mu, a, tau, spec.s, spec.mode);
    }
    return sigma;
}

/// Full mu/Sigma sequences up to n_max.
inline MomentTrajectory compute_moments(const UrnSpec& spec, int n_max) {
    MomentTrajectory t;
    t.n_max = n_max;
    t.mode = spec.mode;
    const int k = spec.k;
    const Eigen::MatrixXd a = spec.core.entries.cast<double>();
    Eigen::RowVectorXd mu = spec.x0.cast<double>();
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(k, k);
    t.mu.push_back(mu);
    t.sigma.push_back(sigma);
    for (int i = 0; i < n_max; ++i) {
        const double tau = static_cast<double>(spec.b) * i + spec.tau0();
        detail::cov_step(sigma, mu, a, tau, spec.s, spec.mode);
        t.mu.push_back(mu);
        t.sigma.push_back(sigma);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Exact rational evaluation of the same recurrences, used as a verification
// mode for modest n.

using Rational = boost::multiprecision::cpp_rational;
using RationalVector = std::vector<Rational>;
using RationalMatrix = std::vector<std::vector<Rational>>;

inline std::pair<RationalVector, RationalMatrix> exact_moments_rational(const UrnSpec& spec,
                                                                        int n) {
    const int k = spec.k;
    RationalVector mu(k);
    for (int i = 0; i < k; ++i) mu[i] = spec.x0(i);
    RationalMatrix sigma(k, RationalVector(k, Rational(0)));
    RationalMatrix a(k, RationalVector(k));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) a[i][j] = spec.core.entries(i, j);

    auto matmul = [&](const RationalMatrix& x, const RationalMatrix& y) {
        RationalMatrix r(k, RationalVector(k, Rational(0)));
        for (int i = 0; i < k; ++i)
            for (int l = 0; l < k; ++l)
                if (x[i][l] != 0)
                    for (int j = 0; j < k; ++j) r[i][j] += x[i][l] * y[l][j];
        return r;
    };
    auto transpose = [&](const RationalMatrix& x) {
        RationalMatrix r(k, RationalVector(k));
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) r[i][j] = x[j][i];
        return r;
    };

    for (int step = 0; step < n; ++step) {
        const Rational tau = Rational(spec.b) * step + spec.tau0();
        RationalMatrix prop(k, RationalVector(k, Rational(0)));
        for (int i = 0; i < k; ++i) {
            prop[i][i] = 1;
            for (int j = 0; j < k; ++j) prop[i][j] += a[i][j] / tau;
        }
        const Rational c_tau = spec.mode == SamplingMode::WithoutReplacement
                                   ? (tau - spec.s) / (Rational(spec.s) * tau * tau * (tau - 1))
                                   : Rational(1) / (Rational(spec.s) * tau * tau);
        RationalMatrix inner = sigma;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) inner[i][j] += mu[i] * mu[j];
        for (int i = 0; i < k; ++i) inner[i][i] -= tau * mu[i];
        RationalMatrix corr = matmul(transpose(a), matmul(inner, a));
        sigma = matmul(transpose(prop), matmul(sigma, prop));
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) sigma[i][j] -= c_tau * corr[i][j];
        RationalVector next(k, Rational(0));
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) next[j] += mu[i] * prop[i][j];
        mu = next;
    }
    return {mu, sigma};
}

// ---------------------------------------------------------------------------
// Asymptotic matrices

/// B = (1/s^2) A^T Qcal A with Qcal = s(s-1) v1^T v1 + s diag(v1).
inline Eigen::MatrixXd b_matrix(const SpectralDecomposition& dec, const CoreMatrix& core,
                                int s) {
    if (dec.v1.size() == 0 || dec.v1.cwiseAbs().sum() == 0.0)
        throw model_error("b_matrix requires an irreducible core");
    const int k = core.k();
    const Eigen::MatrixXd a = core.entries.cast<double>();
    Eigen::MatrixXd qcal = s * (s - 1.0) * dec.v1.transpose() * dec.v1 +
                           s * Eigen::MatrixXd(dec.v1.asDiagonal());
    Eigen::MatrixXd b = a.transpose() * qcal * a / (static_cast<double>(s) * s);
    (void)k;
    return 0.5 * (b + b.transpose()); // symmetrize roundoff
}

namespace detail {

// 16-point Gauss-Legendre on [-1, 1]
inline const double* gl16_nodes() {
    static const double x[16] = {
        -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
        -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
        0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
        0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
    return x;
}
inline const double* gl16_weights() {
    static const double w[16] = {
        0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
        0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
        0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
        0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
    return w;
}

/// integral_0^1 x^{-A^T/b} C x^{-A/b} dx with geometric refinement toward the
/// integrable endpoint singularity at 0.
inline Eigen::MatrixXd sigma_integral_quadrature(const Eigen::MatrixXd& a, int b,
                                                 const Eigen::MatrixXd& c) {
    const int k = static_cast<int>(a.rows());
    auto integrand = [&](double x) -> Eigen::MatrixXd {
        const Eigen::MatrixXd e = ((-std::log(x) / b) * a).exp();
        return e.transpose() * c * e;
    };
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(k, k);
    double hi = 1.0;
    const double* xs = gl16_nodes();
    const double* ws = gl16_weights();
    for (int panel = 0; panel < 2000; ++panel) {
        const double lo = hi / 2.0;
        const double mid = (lo + hi) / 2.0, half = (hi - lo) / 2.0;
        Eigen::MatrixXd part = Eigen::MatrixXd::Zero(k, k);
        for (int q = 0; q < 16; ++q) part += ws[q] * integrand(mid + half * xs[q]);
        part *= half;
        total += part;
        if (part.norm() < 1e-15 * (1.0 + total.norm()) &&
            integrand(lo).norm() * lo < 1e-14 * (1.0 + total.norm()))
            break;
        hi = lo;
    }
    return total;
}

/// Minimum-norm solve of (A^T - (b/2) I) S + S (A - (b/2) I) = -C.
inline Eigen::MatrixXd sigma_integral_sylvester(const Eigen::MatrixXd& a, int b,
                                                const Eigen::MatrixXd& c,
                                                const Eigen::MatrixXd& p_hat) {
    const int k = static_cast<int>(a.rows());
    const Eigen::MatrixXd l = a.transpose() - 0.5 * b * Eigen::MatrixXd::Identity(k, k);
    const Eigen::MatrixXd r = a - 0.5 * b * Eigen::MatrixXd::Identity(k, k);
    Eigen::MatrixXd op = Eigen::MatrixXd::Zero(k * k, k * k);
    for (int j = 0; j < k; ++j) op.block(j * k, j * k, k, k) += l;
    for (int j = 0; j < k; ++j)
        for (int m = 0; m < k; ++m)
            op.block(j * k, m * k, k, k) += r(m, j) * Eigen::MatrixXd::Identity(k, k);
    Eigen::VectorXd rhs(k * k);
    for (int j = 0; j < k; ++j) rhs.segment(j * k, k) = -c.col(j);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(op);
    Eigen::VectorXd sv = cod.solve(rhs);
    Eigen::MatrixXd s(k, k);
    for (int j = 0; j < k; ++j) s.col(j) = sv.segment(j * k, k);
    // the true solution lives in the P-hat-invariant subspace; restrict
    return p_hat.transpose() * s * p_hat;
}

} // namespace detail

/// Sigma(A) for small-index urns, computed by the Sylvester system and by
/// quadrature of the defining integral; the two must agree.
inline Eigen::MatrixXd sigma_small(const SpectralDecomposition& dec, const Eigen::MatrixXd& b_sym,
                                   int b, const CoreMatrix& core) {
    if (dec.regime != Regime::Small)
        throw model_error("sigma_small applies to small-index urns only");
    const int k = core.k();
    const Eigen::MatrixXd a = core.entries.cast<double>();
    const Eigen::MatrixXd p1 = Eigen::MatrixXd::Ones(k, 1) * dec.v1;
    const Eigen::MatrixXd p_hat = Eigen::MatrixXd::Identity(k, k) - p1;
    const Eigen::MatrixXd c = p_hat.transpose() * b_sym * p_hat;

    const Eigen::MatrixXd via_quad = b * detail::sigma_integral_quadrature(a, b, c);
    const Eigen::MatrixXd via_syl = b * detail::sigma_integral_sylvester(a, b, c, p_hat);
    const double scale = std::max(1.0, via_quad.norm());
    if ((via_quad - via_syl).norm() / scale > 1e-6)
        throw numeric_error("sigma_small: Sylvester and quadrature routes disagree");
    return 0.5 * (via_syl + via_syl.transpose());
}

/// Critical-index limit of Sigma_n / (n ln^{2 nu2 + 1} n).
inline Eigen::MatrixXd sigma_critical(const SpectralDecomposition& dec,
                                      const Eigen::MatrixXd& b_sym, int b) {
    if (dec.regime != Regime::Critical)
        throw model_error("sigma_critical applies to critical-index urns only");
    const int k = static_cast<int>(b_sym.rows());
    const int nu2 = dec.nu2;
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(k, k);
    const Eigen::MatrixXcd bc = b_sym.cast<std::complex<double>>();
    for (const EigenGroup& g : dec.groups) {
        if (std::abs(g.lambda.real() - 0.5 * b) > 1e-7 * (1.0 + b)) continue;
        Eigen::MatrixXcd npow = Eigen::MatrixXcd::Identity(k, k);
        for (int i = 0; i < nu2; ++i) npow = npow * g.N;
        sum += npow.adjoint() * g.P.adjoint() * bc * g.P * npow;
    }
    double fact = 1.0;
    for (int i = 2; i <= nu2; ++i) fact *= i;
    sum /= std::pow(static_cast<double>(b), 2 * nu2) * (2 * nu2 + 1) * fact * fact;
    if (sum.imag().norm() > 1e-10 * (1.0 + sum.real().norm()))
        throw numeric_error("sigma_critical: non-negligible imaginary residue");
    Eigen::MatrixXd r = sum.real();
    return 0.5 * (r + r.transpose());
}

/// Scaling law, mean slope and limiting covariance for the CLT, per regime.
inline AsymptoticSummary clt_params(const UrnSpec& spec) {
    if (!check_irreducible(spec.core, spec.s))
        throw model_error("clt_params requires an irreducible core");
    SpectralDecomposition dec = decompose(spec.core);
    AsymptoticSummary sum;
    sum.regime = dec.regime;
    sum.index = dec.index;
    sum.nu2 = dec.nu2;
    sum.qcal = spec.s * (spec.s - 1.0) * dec.v1.transpose() * dec.v1 +
               spec.s * Eigen::MatrixXd(dec.v1.asDiagonal());
    sum.b_sym = b_matrix(dec, spec.core, spec.s);
    sum.mu_slope = spec.b * dec.v1;
    switch (dec.regime) {
        case Regime::Small:
            sum.xi_description = "n";
            sum.sigma_inf = sigma_small(dec, sum.b_sym, spec.b, spec.core);
            break;
        case Regime::Critical:
            sum.xi_description = "n*ln^" + std::to_string(2 * dec.nu2 + 1) + "(n)";
            sum.sigma_inf = sigma_critical(dec, sum.b_sym, spec.b);
            break;
        case Regime::Large:
            sum.xi_description = "n^" + std::to_string(dec.index) + " scale (no limit law)";
            sum.sigma_inf_note =
                "large-index urns: the covariance limit may depend on the initial "
                "composition; only the exact recurrence is available";
            break;
    }
    return sum;
}

} // namespace urnlab
