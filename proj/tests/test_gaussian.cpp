#include <Eigen/Eigenvalues>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "tweedie/gaussian.hpp"
#include "tweedie/oracle.hpp"

using namespace tweedie;
using Catch::Approx;

namespace {

const PriorSpec kTwoAtoms = PriorSpec::atomic({{-1.0, 0.5}, {1.0, 0.5}});
const NoiseSpec kUnitNoise = NoiseSpec::gaussian(0.0, 1.0);

double conj_mean(double y) { return 0.5 * y; }  // X~N(0,1), sigma=1
constexpr double kConjVar = 0.5;

}  // namespace

TEST_CASE("gauss_functional point mass and conjugate values") {
    const auto pm = exact_density(PriorSpec::atomic({{2.0, 1.0}}), kUnitNoise);
    for (double y : {-1.0, 0.5, 3.0})
        CHECK(gauss_functional(1.0, pm, y, FunctionalSpec::mean()).scalar() ==
              Approx(2.0).margin(1e-10));

    const auto conj = exact_density(PriorSpec::gaussian_mixture({{0.0, 1.0, 1.0}}), kUnitNoise);
    for (double y : {-2.0, 0.0, 1.0, 2.0}) {
        CHECK(gauss_functional(1.0, conj, y, FunctionalSpec::variance()).scalar() ==
              Approx(kConjVar).margin(1e-12));
        CHECK(gauss_functional(1.0, conj, y, FunctionalSpec::mean()).scalar() ==
              Approx(conj_mean(y)).margin(1e-12));
    }
}

TEST_CASE("gauss_functional mgf against the oracle") {
    const auto model = exact_density(kTwoAtoms, kUnitNoise);
    const double t = 0.3, y = 0.4;
    const double expected =
        oracle::oracle_posterior(kTwoAtoms, kUnitNoise, FunctionalSpec::mgf(t), y);
    CHECK(gauss_functional(1.0, model, y, FunctionalSpec::mgf(t)).scalar() ==
          Approx(expected).margin(1e-12));
    for (double y2 : {-1.2, 0.0, 2.0})
        CHECK(gauss_functional(1.0, model, y2, FunctionalSpec::mgf(0.0)).scalar() ==
              Approx(1.0).margin(1e-15));
}

TEST_CASE("moments and risks against the oracle") {
    const auto model = exact_density(kTwoAtoms, kUnitNoise);
    for (double y : {-0.7, 0.4, 1.6}) {
        for (int k : {1, 2, 3, 4, 7}) {
            const double expected =
                oracle::oracle_posterior(kTwoAtoms, kUnitNoise, FunctionalSpec::raw_moment(k), y);
            CHECK(gauss_functional(1.0, model, y, FunctionalSpec::raw_moment(k)).scalar() ==
                  Approx(expected).epsilon(1e-10));
        }
        for (int k : {2, 3}) {
            const double expected = oracle::oracle_functional(
                kTwoAtoms, kUnitNoise, FunctionalSpec::centered_moment(k), y);
            CHECK(gauss_functional(1.0, model, y, FunctionalSpec::centered_moment(k)).scalar() ==
                  Approx(expected).margin(1e-10));
        }
        const double sq = oracle::oracle_posterior(kTwoAtoms, kUnitNoise,
                                                   FunctionalSpec::squared_risk(0.3), y);
        CHECK(gauss_functional(1.0, model, y, FunctionalSpec::squared_risk(0.3)).scalar() ==
              Approx(sq).epsilon(1e-10));
        for (int m : {1, 2}) {
            const double er = oracle::oracle_posterior(kTwoAtoms, kUnitNoise,
                                                       FunctionalSpec::even_risk(0.5, m), y);
            CHECK(gauss_functional(1.0, model, y, FunctionalSpec::even_risk(0.5, m)).scalar() ==
                  Approx(er).epsilon(1e-10));
        }
    }
    CHECK_THROWS_AS(gauss_functional(1.0, model, 0.0, FunctionalSpec::raw_moment(11)),
                    unsupported);
    CHECK_THROWS_AS(gauss_functional(1.0, model, 0.0, FunctionalSpec::even_risk(0.0, 6)),
                    unsupported);
}

TEST_CASE("moment coherence and variance nonnegativity") {
    const auto model = exact_density(kTwoAtoms, kUnitNoise);
    for (int i = 0; i <= 20; ++i) {
        const double y = -3.0 + 6.0 * i / 20.0;
        const double mean = gauss_functional(1.0, model, y, FunctionalSpec::mean()).scalar();
        const double m2 =
            gauss_functional(1.0, model, y, FunctionalSpec::second_moment()).scalar();
        const double var = gauss_functional(1.0, model, y, FunctionalSpec::variance()).scalar();
        CHECK(var >= -1e-9);
        CHECK(var == Approx(m2 - mean * mean).margin(1e-8));
    }
}

TEST_CASE("MGF derivative reproduces the posterior mean") {
    const auto model = exact_density(kTwoAtoms, kUnitNoise);
    const double h = 1e-4;
    for (double y : {-1.0, 0.2, 1.1}) {
        const double up = gauss_functional(1.0, model, y, FunctionalSpec::mgf(h)).scalar();
        const double dn = gauss_functional(1.0, model, y, FunctionalSpec::mgf(-h)).scalar();
        const double mean = gauss_functional(1.0, model, y, FunctionalSpec::mean()).scalar();
        CHECK((up - dn) / (2.0 * h) == Approx(mean).margin(1e-6));
    }
}

TEST_CASE("gauss_cdf conjugate closed form via Mehler") {
    const auto model = exact_density(PriorSpec::gaussian_mixture({{0.0, 1.0, 1.0}}), kUnitNoise);
    for (double y : {-2.0, 0.0, 2.0}) {
        for (double a : {-1.0, 0.0, 1.0}) {
            const double expected =
                numerics::norm_cdf((a - conj_mean(y)) / std::sqrt(kConjVar));
            const auto r = gauss_cdf(1.0, model, y, a, 60, default_n_schedule(), 1e-4);
            CHECK(r.converged);
            CHECK(r.scalar() == Approx(expected).margin(1e-4));
            CHECK(r.series_terms_used > 0);
        }
    }
}

TEST_CASE("gauss_cdf upper limit and degenerate atom diagnostics") {
    const auto conj = exact_density(PriorSpec::gaussian_mixture({{0.0, 1.0, 1.0}}), kUnitNoise);
    const double y = 0.4;
    const auto hi = gauss_cdf(1.0, conj, y, y + 12.0, 60, default_n_schedule(), 1e-6);
    CHECK(hi.scalar() == Approx(1.0).margin(1e-6));

    // Point mass at the threshold: the posterior is degenerate and the oracle
    // CDF is exactly 1; the truncated series cannot settle there and must
    // say so via the convergence diagnostic.
    const PriorSpec atom = PriorSpec::atomic({{0.0, 1.0}});
    CHECK(oracle::oracle_posterior(atom, kUnitNoise, FunctionalSpec::cdf(0.0), 0.5) == 1.0);
    const auto m = exact_density(atom, kUnitNoise);
    const auto r = gauss_cdf(1.0, m, 0.5, 0.0, 60, default_n_schedule(), 1e-6);
    CHECK_FALSE(r.converged);
    // The far-tail threshold is fine even for the atom model.
    const auto far = gauss_cdf(1.0, m, 0.5, 0.5 + 12.0, 60, default_n_schedule(), 1e-6);
    CHECK(far.scalar() == Approx(1.0).margin(1e-6));
}

TEST_CASE("gauss_cdf is nondecreasing with values in [0,1] within tolerance") {
    const auto model = exact_density(PriorSpec::gaussian_mixture({{0.3, 0.6, 1.0}}), kUnitNoise);
    const double y = 0.8;
    double prev = -1.0;
    for (int i = 0; i <= 10; ++i) {
        const double a = -2.5 + 5.0 * i / 10.0;
        const double v = gauss_cdf(1.0, model, y, a, 60, default_n_schedule(), 1e-4).scalar();
        CHECK(v >= prev - 1e-6);
        CHECK(v >= -1e-6);
        CHECK(v <= 1.0 + 1e-6);
        prev = v;
    }
}

TEST_CASE("hinge loss far below the support reduces to mean minus a") {
    const double x0 = 2.0, y = 1.0, sigma = 1.0;
    const auto m = exact_density(PriorSpec::atomic({{x0, 1.0}}), kUnitNoise);
    const double a = y - 12.0 * sigma;
    const auto r = gauss_hinge_abs(1.0, m, y, a, LossKind::kHinge);
    CHECK(r.scalar() == Approx(x0 - a).margin(1e-6));
}

TEST_CASE("absolute risk matches the folded-normal closed form") {
    const auto model = exact_density(PriorSpec::gaussian_mixture({{0.0, 1.0, 1.0}}), kUnitNoise);
    // X | Y=0 ~ N(0, 1/2); E|X| = sqrt(2/pi) * sqrt(1/2).
    const double expected = std::sqrt(2.0 / M_PI) * std::sqrt(kConjVar);
    const auto r =
        gauss_hinge_abs(1.0, model, 0.0, 0.0, LossKind::kAbsolute, 60, default_n_schedule(), 1e-4);
    CHECK(r.scalar() == Approx(expected).margin(1e-5));
    CHECK(r.converged);
}

TEST_CASE("pinball consistency against the oracle") {
    const PriorSpec prior = PriorSpec::gaussian_mixture({{0.0, 1.0, 1.0}});
    const auto model = exact_density(prior, kUnitNoise);
    const double tau = 0.3, a = 0.4, y = 0.7;
    const double hinge = gauss_hinge_abs(1.0, model, y, a, LossKind::kHinge).scalar();
    const double absr = gauss_hinge_abs(1.0, model, y, a, LossKind::kAbsolute).scalar();
    const double reverse = absr - hinge;  // E[(a-X)+] = E|X-a| - E[(X-a)+]
    const double pinball = tau * hinge + (1.0 - tau) * reverse;
    const double expected =
        oracle::oracle_posterior(prior, kUnitNoise, FunctionalSpec::pinball(a, tau), y, 1e-11);
    CHECK(pinball == Approx(expected).margin(2e-5));
}

TEST_CASE("hetero conditioning") {
    const auto joint = HeteroJointSpec::scalar({{0.0, 1.0, 0.5}, {3.0, 4.0, 0.5}});
    auto [model, prior] = hetero_condition(joint, 1.0);
    CHECK(prior.atoms.size() == 1);
    CHECK(prior.atoms[0].location[0] == 0.0);
    for (double y : {-1.0, 0.5, 2.0})
        CHECK(model(y) == Approx(numerics::norm_pdf(y)).epsilon(1e-14));
    CHECK_THROWS_AS(hetero_condition(joint, 2.5), no_mass);

    // Two atoms sharing a sigma^2 renormalize.
    const auto joint2 =
        HeteroJointSpec::scalar({{0.0, 1.0, 0.2}, {1.0, 1.0, 0.3}, {2.0, 4.0, 0.5}});
    auto [m2, p2] = hetero_condition(joint2, 1.0);
    REQUIRE(p2.atoms.size() == 2);
    CHECK(p2.atoms[0].weight == Approx(0.4));
    CHECK(p2.atoms[1].weight == Approx(0.6));

    // Degenerate single-sigma joint: conditional prior is the X-marginal.
    const auto joint3 = HeteroJointSpec::scalar({{0.0, 1.0, 0.5}, {1.0, 1.0, 0.5}});
    auto [m3, p3] = hetero_condition(joint3, 1.0);
    CHECK(p3.atoms.size() == 2);
    CHECK(p3.atoms[0].weight == Approx(0.5));
}

TEST_CASE("hetero degeneracy reproduces the homoskedastic result exactly") {
    const auto joint = HeteroJointSpec::scalar({{-0.5, 0.81, 0.4}, {1.5, 0.81, 0.6}});
    auto [model, prior] = hetero_condition(joint, 0.81);
    const auto homo =
        exact_density(PriorSpec::atomic({{-0.5, 0.4}, {1.5, 0.6}}), NoiseSpec::gaussian(0.0, 0.9));
    for (double y : {-1.0, 0.3, 2.0}) {
        const double a = gauss_functional(0.81, model, y, FunctionalSpec::mean()).scalar();
        const double b = gauss_functional(0.81, homo, y, FunctionalSpec::mean()).scalar();
        CHECK(a == b);
        CHECK(gauss_functional(0.81, model, y, FunctionalSpec::variance()).scalar() ==
              gauss_functional(0.81, homo, y, FunctionalSpec::variance()).scalar());
    }
}

TEST_CASE("series divergence is detected for wildly rough densities") {
    // A near-degenerate KDE makes f^{(k)} grow faster than k!, so the
    // truncated series blows up rather than settles.
    std::vector<double> samples;
    Rng rng(3);
    for (int i = 0; i < 40; ++i) samples.push_back(0.05 * rng.uniform());
    const auto model = kde_fit(samples, BandwidthRule::fixed(0.01));
    CHECK_THROWS_AS(gauss_cdf(1.0, model, 1.2, 0.4), series_divergence);
}

TEST_CASE("multivariate hetero conditioning feeds gauss_multivariate") {
    VectorXd x1(2), x2(2);
    x1 << 0.0, 0.0;
    x2 << 2.0, 1.0;
    MatrixXd s1(2, 2), s2(2, 2);
    s1 << 1.0, 0.2, 0.2, 0.8;
    s2 << 2.0, 0.0, 0.0, 2.0;
    const auto joint = HeteroJointSpec::vector({{x1, s1, 0.5}, {x2, s2, 0.5}});
    auto [model, cond_prior] = hetero_condition(joint, s1);
    REQUIRE(cond_prior.atoms.size() == 1);
    VectorXd y(2);
    y << 0.4, -0.2;
    // Single conditional atom: posterior collapses onto it.
    const auto mean = gauss_multivariate(s1, model, y, MvTarget::kMean);
    CHECK((mean.vec() - x1).lpNorm<Eigen::Infinity>() < 1e-10);
    MatrixXd missing(2, 2);
    missing << 3.0, 0.0, 0.0, 3.0;
    CHECK_THROWS_AS(hetero_condition(joint, missing), no_mass);
}

TEST_CASE("multivariate point mass") {
    VectorXd loc(2);
    loc << 1.0, 2.0;
    const MatrixXd sigma0 = MatrixXd::Identity(2, 2);
    const auto model = exact_density_mvn(PriorSpec::atomic_vec({{loc, 1.0}}), sigma0);
    VectorXd y(2);
    y << 0.3, -0.7;
    const auto mean = gauss_multivariate(sigma0, model, y, MvTarget::kMean);
    CHECK(mean.vec()(0) == Approx(1.0).margin(1e-8));
    CHECK(mean.vec()(1) == Approx(2.0).margin(1e-8));
    const auto cov = gauss_multivariate(sigma0, model, y, MvTarget::kCov);
    CHECK(cov.mat().lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("multivariate conjugate mean and covariance") {
    MatrixXd T(2, 2), sigma0(2, 2);
    T << 1.0, 0.3, 0.3, 0.8;
    sigma0 << 0.5, 0.1, 0.1, 0.7;
    VectorXd m0 = VectorXd::Zero(2);
    const auto model =
        exact_density_mvn(PriorSpec::gaussian_mixture_vec({{m0, T, 1.0}}), sigma0);
    VectorXd y(2);
    y << 1.0, -0.5;
    const MatrixXd post_cov = (T.inverse() + sigma0.inverse()).inverse();
    const VectorXd post_mean = post_cov * (sigma0.inverse() * y);
    const auto mean = gauss_multivariate(sigma0, model, y, MvTarget::kMean);
    const auto cov = gauss_multivariate(sigma0, model, y, MvTarget::kCov);
    CHECK((mean.vec() - post_mean).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((cov.mat() - post_cov).lpNorm<Eigen::Infinity>() < 1e-10);

    // Covariance symmetry and PSD.
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov.mat());
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    CHECK(cov.mat()(0, 1) == cov.mat()(1, 0));

    VectorXd t0 = VectorXd::Zero(2);
    CHECK(gauss_multivariate(sigma0, model, y, MvTarget::kMgf, t0).scalar() ==
          Approx(1.0).margin(1e-14));
    // MGF at t matches the posterior normal MGF.
    VectorXd t(2);
    t << 0.4, -0.2;
    const double expected =
        std::exp(t.dot(post_mean) + 0.5 * t.dot(post_cov * t));
    CHECK(gauss_multivariate(sigma0, model, y, MvTarget::kMgf, t).scalar() ==
          Approx(expected).epsilon(1e-10));
}
