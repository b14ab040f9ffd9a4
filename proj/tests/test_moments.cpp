#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "urnlab/moments.hpp"

using namespace urnlab;

namespace {

UrnSpec make_spec(std::initializer_list<std::initializer_list<int>> core, int s,
                  std::initializer_list<int> x0,
                  SamplingMode mode = SamplingMode::WithoutReplacement) {
    UrnSpec spec;
    spec.k = static_cast<int>(core.size());
    spec.s = s;
    spec.mode = mode;
    spec.core.entries.resize(spec.k, spec.k);
    int i = 0;
    for (const auto& row : core) {
        int j = 0;
        for (int v : row) spec.core.entries(i, j++) = v;
        ++i;
    }
    spec.b = spec.core.entries.row(0).sum();
    spec.x0.resize(spec.k);
    i = 0;
    for (int v : x0) spec.x0(i++) = v;
    return spec;
}

UrnSpec small_diag_spec() {
    return make_spec({{6, 4, 6}, {2, 6, 8}, {4, 6, 6}}, 2, {4, 3, 5});
}
UrnSpec small_jordan_spec() {
    return make_spec({{-2, 3, 0, 0}, {1, -3, 3, 0}, {1, 0, -3, 3}, {1, 0, 0, 0}}, 3,
                     {4, 0, 0, 0});
}
UrnSpec critical_spec() {
    return make_spec({{4, 0, 2}, {2, 4, 0}, {0, 2, 4}}, 2, {2, 2, 2});
}
UrnSpec large_spec() {
    return make_spec({{9, 3, 0}, {0, 9, 3}, {3, 0, 9}}, 3, {3, 2, 2});
}

} // namespace

TEST_CASE("exact mean: n = 0, one step by hand, and the long-run benchmark") {
    UrnSpec spec = small_diag_spec();
    CHECK((exact_mean(spec, 0) - spec.x0.cast<double>()).cwiseAbs().maxCoeff() == 0.0);

    Eigen::RowVectorXd mu1 = exact_mean(spec, 1);
    CHECK(std::abs(mu1(0) - 49.0 / 6.0) < 1e-13);
    CHECK(std::abs(mu1(1) - 25.0 / 3.0) < 1e-13);
    CHECK(std::abs(mu1(2) - 23.0 / 2.0) < 1e-13);

    Eigen::RowVectorXd mu2000 = exact_mean(spec, 2000) / 2000.0;
    CHECK(std::abs(mu2000(0) - 3.787) < 5e-4);
    CHECK(std::abs(mu2000(1) - 5.527) < 5e-4);
    CHECK(std::abs(mu2000(2) - 6.692) < 5e-4);

    Eigen::RowVectorXd mu2000l = exact_mean(large_spec(), 2000) / 2000.0;
    CHECK(std::abs(mu2000l(0) - 3.992) < 5e-4);
    CHECK(std::abs(mu2000l(1) - 4.062) < 5e-4);
    CHECK(std::abs(mu2000l(2) - 3.9487) < 5e-4);
}

TEST_CASE("mean and covariance match exhaustive path enumeration, both modes") {
    for (SamplingMode mode :
         {SamplingMode::WithoutReplacement, SamplingMode::WithReplacement}) {
        UrnSpec spec = critical_spec();
        spec.mode = mode;
        for (int n : {1, 2, 3, 4}) {
            oracle::PathMoments pm = oracle::path_tree_moments(spec, n);
            const Eigen::RowVectorXd mu = exact_mean(spec, n);
            const Eigen::MatrixXd sigma = exact_cov(spec, n);
            CHECK((mu - pm.mean_d).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + n));
            CHECK((sigma - pm.cov_d).cwiseAbs().maxCoeff() < 1e-11);
        }
    }
    // a defective 4-color core as well
    UrnSpec spec = small_jordan_spec();
    for (int n : {1, 2, 3}) {
        oracle::PathMoments pm = oracle::path_tree_moments(spec, n);
        CHECK((exact_mean(spec, n) - pm.mean_d).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((exact_cov(spec, n) - pm.cov_d).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("covariance rows sum to zero for balanced urns") {
    for (const UrnSpec& spec :
         {small_diag_spec(), small_jordan_spec(), critical_spec(), large_spec()}) {
        const Eigen::MatrixXd sigma = exact_cov(spec, 200);
        const Eigen::VectorXd rowsum = sigma * Eigen::VectorXd::Ones(spec.k);
        CHECK(rowsum.cwiseAbs().maxCoeff() < 1e-8 * (1.0 + sigma.norm()));
    }
}

TEST_CASE("rational recurrence agrees with the double recurrence at n = 64") {
    UrnSpec spec = small_diag_spec();
    auto [mu_r, sigma_r] = exact_moments_rational(spec, 64);
    const Eigen::RowVectorXd mu = exact_mean(spec, 64);
    const Eigen::MatrixXd sigma = exact_cov(spec, 64);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(mu(i) - static_cast<double>(mu_r[i])) < 1e-9 * std::abs(mu(i)));
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(sigma(i, j) - static_cast<double>(sigma_r[i][j])) <
                  1e-8 * (1.0 + std::abs(sigma(i, j))));
    }
}

TEST_CASE("conditional sample second moments match enumeration") {
    const std::vector<long long> x = {4, 3, 5};
    Eigen::RowVectorXd xd(3);
    xd << 4.0, 3.0, 5.0;
    const Eigen::MatrixXd expected =
        oracle::sample_second_moment(x, 2, SamplingMode::WithoutReplacement);
    const Eigen::MatrixXd got = qcal_conditional(xd, 12.0, 2);
    CHECK((expected - got).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("B matrix: s = 1 reduces to A^T diag(v1) A") {
    UrnSpec spec = make_spec({{-2, 3, 0, 0}, {1, -3, 3, 0}, {1, 0, -3, 3}, {1, 0, 0, 0}}, 1,
                             {4, 0, 0, 0});
    SpectralDecomposition dec = decompose(spec.core);
    const Eigen::MatrixXd b = b_matrix(dec, spec.core, 1);
    const Eigen::MatrixXd a = spec.core.entries.cast<double>();
    const Eigen::MatrixXd expected =
        a.transpose() * Eigen::MatrixXd(dec.v1.asDiagonal()) * a;
    CHECK((b - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("limiting covariance of the small diagonalizable urn") {
    UrnSpec spec = small_diag_spec();
    AsymptoticSummary sum = clt_params(spec);
    REQUIRE(sum.regime == Regime::Small);
    REQUIRE(sum.sigma_inf.has_value());
    Eigen::MatrixXd expected(3, 3);
    expected << 5552, -2864, -2688,
                -2864, 1808, 1056,
                -2688, 1056, 1632;
    expected /= 3025.0;
    CHECK((*sum.sigma_inf - expected).cwiseAbs().maxCoeff() < 1e-8);
    // mean slope 16 v1 = (208, 304, 368)/55
    CHECK(std::abs(sum.mu_slope(0) - 208.0 / 55.0) < 1e-12);
    CHECK(std::abs(sum.mu_slope(1) - 304.0 / 55.0) < 1e-12);
    CHECK(std::abs(sum.mu_slope(2) - 368.0 / 55.0) < 1e-12);
    CHECK(sum.xi_description == "n");
}

TEST_CASE("limiting covariance of the small defective urn") {
    AsymptoticSummary sum = clt_params(small_jordan_spec());
    REQUIRE(sum.regime == Regime::Small);
    REQUIRE(sum.sigma_inf.has_value());
    Eigen::MatrixXd expected(4, 4);
    expected << 9.0 / 112, -207.0 / 3136, -2043.0 / 87808, 783.0 / 87808,
        -207.0 / 3136, 11349.0 / 87808, -88983.0 / 2458624, -66501.0 / 2458624,
        -2043.0 / 87808, -88983.0 / 2458624, 7480413.0 / 68841472, -3387177.0 / 68841472,
        783.0 / 87808, -66501.0 / 2458624, -3387177.0 / 68841472, 4635333.0 / 68841472;
    CHECK((*sum.sigma_inf - expected).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(sum.nu2 == 2);
}

TEST_CASE("limiting covariance of the critical urn") {
    AsymptoticSummary sum = clt_params(critical_spec());
    REQUIRE(sum.regime == Regime::Critical);
    REQUIRE(sum.sigma_inf.has_value());
    Eigen::MatrixXd expected(3, 3);
    expected << 4, -2, -2,
                -2, 4, -2,
                -2, -2, 4;
    expected /= 3.0;
    CHECK((*sum.sigma_inf - expected).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(sum.nu2 == 0);
    CHECK(sum.xi_description == "n*ln^1(n)");
}

TEST_CASE("large urns report no covariance limit") {
    AsymptoticSummary sum = clt_params(large_spec());
    CHECK(sum.regime == Regime::Large);
    CHECK_FALSE(sum.sigma_inf.has_value());
    CHECK_FALSE(sum.sigma_inf_note.empty());
    CHECK(std::abs(sum.mu_slope(0) - 4.0) < 1e-10);
}

TEST_CASE("sigma integral of a zero forcing matrix is zero") {
    UrnSpec spec = small_diag_spec();
    const Eigen::MatrixXd a = spec.core.entries.cast<double>();
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 3);
    CHECK(detail::sigma_integral_quadrature(a, spec.b, zero).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("covariance growth follows the regime's order") {
    struct Case {
        UrnSpec spec;
        std::function<double(double)> xi;
    };
    std::vector<Case> cases;
    cases.push_back({small_diag_spec(), [](double n) { return n; }});
    cases.push_back({critical_spec(), [](double n) { return n * std::log(n); }});
    {
        const double lam = 0.625 * 2.0; // 2 * index
        cases.push_back({large_spec(), [lam](double n) { return std::pow(n, lam); }});
    }
    for (const Case& c : cases) {
        double prev_ratio = -1.0;
        std::vector<double> ratios;
        Eigen::RowVectorXd mu = c.spec.x0.cast<double>();
        Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(c.spec.k, c.spec.k);
        const Eigen::MatrixXd a = c.spec.core.entries.cast<double>();
        long long n = 0;
        for (long long stop : {1024LL, 4096LL, 16384LL, 65536LL}) {
            for (; n < stop; ++n) {
                const double tau = static_cast<double>(c.spec.b) * n + c.spec.tau0();
                detail::cov_step(sigma, mu, a, tau, c.spec.s, c.spec.mode);
            }
            ratios.push_back(sigma.norm() / c.xi(static_cast<double>(stop)));
        }
        // normalized covariance stays within a fixed band: no runaway growth
        for (double r : ratios) {
            CHECK(r > 0.0);
            CHECK(r < 60.0 * ratios.front());
        }
        (void)prev_ratio;
    }
}

TEST_CASE("scaled covariance of the small urn approaches its limit") {
    UrnSpec spec = small_diag_spec();
    AsymptoticSummary sum = clt_params(spec);
    const Eigen::MatrixXd target = *sum.sigma_inf;
    double prev = 1e300;
    for (long long n : {2000LL, 8000LL, 32000LL}) {
        const Eigen::MatrixXd scaled = exact_cov(spec, n) / static_cast<double>(n);
        const double err = (scaled - target).norm() / target.norm();
        CHECK(err < prev * 1.01);
        prev = err;
    }
    CHECK(prev < 0.02);
}

TEST_CASE("scaled covariance of the critical urn approaches its limit") {
    UrnSpec spec = critical_spec();
    AsymptoticSummary sum = clt_params(spec);
    const Eigen::MatrixXd target = *sum.sigma_inf;
    const long long n = 2000000;
    Eigen::RowVectorXd mu = spec.x0.cast<double>();
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(3, 3);
    const Eigen::MatrixXd a = spec.core.entries.cast<double>();
    for (long long i = 0; i < n; ++i) {
        const double tau = static_cast<double>(spec.b) * i + spec.tau0();
        detail::cov_step(sigma, mu, a, tau, spec.s, spec.mode);
    }
    // convergence in ln(n) is slow; just require the right ballpark
    const Eigen::MatrixXd scaled =
        sigma / (static_cast<double>(n) * std::log(static_cast<double>(n)));
    CHECK((scaled - target).norm() / target.norm() < 0.35);
}
