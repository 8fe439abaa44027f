#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "tweedie/noise_catalog.hpp"
#include "tweedie/validation.hpp"

using namespace tweedie;
using Catch::Approx;

namespace {

struct FamilyCase {
    NoiseSpec noise;
    double tol;
};

std::vector<FamilyCase> table1_families() {
    return {
        {NoiseSpec::gaussian(0.0, 1.0), 1e-6},
        {NoiseSpec::generalized_laplace(0.0, 1.0, 1.5), 1e-4},
        {NoiseSpec::laplace(0.0, 1.0), 1e-6},
        {NoiseSpec::asymmetric_laplace(0.0, 1.0, 2.0), 1e-6},
        {NoiseSpec::logistic(0.0, 0.7), 1e-6},
        {NoiseSpec::gumbel(0.0, 1.0), 1e-6},
        {NoiseSpec::cauchy(0.0, 1.0), 1e-6},
        {NoiseSpec::hyperbolic_secant(0.0, 0.7), 1e-6},
        {NoiseSpec::gamma(2.0, 1.0), 1e-6},
        {NoiseSpec::noncentral_chisq(4.0, 1.5), 1e-4},
        {NoiseSpec::inverse_gaussian(1.0, 2.0), 1e-4},
    };
}

}  // namespace

TEST_CASE("point-mass collapse: posterior mean equals the atom") {
    const double x0 = 0.8;
    const PriorSpec prior = PriorSpec::atomic({{x0, 1.0}});
    for (const auto& fc : table1_families()) {
        INFO(fc.noise.family_name());
        const auto model = exact_density(prior, fc.noise);
        const auto grid = central_grid(prior, fc.noise, 11, 0.98);
        for (double y : grid) {
            if (model(y) <= 1e-12) continue;
            const auto r = posterior_mean(fc.noise, model, y, fc.tol / 10.0);
            CHECK(r.scalar() == Approx(x0).margin(10.0 * fc.tol));
            CHECK(r.density_at_point > 0.0);
        }
    }
}

TEST_CASE("gaussian posterior mean matches the conjugate formula") {
    const double m = 0.4, tau2 = 1.7, sigma = 0.9;
    const PriorSpec prior = PriorSpec::gaussian_mixture({{m, tau2, 1.0}});
    const auto noise = NoiseSpec::gaussian(0.0, sigma);
    const auto model = exact_density(prior, noise);
    for (double y : {-2.0, 0.0, 1.3, 3.0}) {
        const double expected = (sigma * sigma * m + tau2 * y) / (sigma * sigma + tau2);
        CHECK(posterior_mean(noise, model, y).scalar() == Approx(expected).margin(1e-10));
    }
}

TEST_CASE("laplace two-atom prior matches the oracle finite sum") {
    const PriorSpec prior = PriorSpec::atomic({{0.0, 0.5}, {1.0, 0.5}});
    const auto noise = NoiseSpec::laplace(0.0, 1.0);
    const auto model = exact_density(prior, noise);
    const double expected =
        oracle::oracle_posterior(prior, noise, FunctionalSpec::mean(), 0.3);
    CHECK(posterior_mean(noise, model, 0.3, 1e-9).scalar() == Approx(expected).margin(1e-8));
}

TEST_CASE("cauchy point mass exercises the Hilbert closed form") {
    const PriorSpec prior = PriorSpec::atomic({{0.0, 1.0}});
    const auto noise = NoiseSpec::cauchy(0.0, 0.7);
    const auto model = exact_density(prior, noise);
    for (double y : {-3.0, -0.5, 0.0, 1.0, 4.0})
        CHECK(posterior_mean(noise, model, y, 1e-8).scalar() == Approx(0.0).margin(1e-7));
}

TEST_CASE("shift equivariance across families") {
    const double c = 0.75;
    const PriorSpec base = PriorSpec::atomic({{-0.5, 0.4}, {1.0, 0.6}});
    const PriorSpec shifted = PriorSpec::atomic({{-0.5 + c, 0.4}, {1.0 + c, 0.6}});
    for (const auto& fc : table1_families()) {
        INFO(fc.noise.family_name());
        const auto m0 = exact_density(base, fc.noise);
        const auto m1 = exact_density(shifted, fc.noise);
        const double y = dist::mode_hint(fc.noise) + 0.6;
        const double v0 = posterior_mean(fc.noise, m0, y, fc.tol / 10.0).scalar();
        const double v1 = posterior_mean(fc.noise, m1, y + c, fc.tol / 10.0).scalar();
        CHECK(v1 - v0 == Approx(c).margin(10.0 * fc.tol));
    }
}

TEST_CASE("law of total expectation") {
    const PriorSpec prior = PriorSpec::atomic({{-1.0, 0.3}, {0.0, 0.4}, {2.0, 0.3}});
    const double prior_mean = -1.0 * 0.3 + 0.0 * 0.4 + 2.0 * 0.3;
    const std::vector<NoiseSpec> families = {
        NoiseSpec::gaussian(0.0, 1.0),
        NoiseSpec::laplace(0.0, 1.0),
        NoiseSpec::gumbel(0.0, 1.0),
        NoiseSpec::gamma(2.0, 1.0),
    };
    for (const auto& noise : families) {
        INFO(noise.family_name());
        const auto model = exact_density(prior, noise);
        const double qlo = mixture_quantile(prior, noise, 1e-7);
        const double qhi = mixture_quantile(prior, noise, 1.0 - 1e-7);
        const double integral =
            numerics::adaptive_integrate(
                [&](double y) {
                    return posterior_mean(noise, model, y, 1e-7).scalar() * model(y);
                },
                qlo, qhi, 1e-6, 1e-6)
                .value;
        CHECK(integral == Approx(prior_mean).margin(1e-4));
    }
}

TEST_CASE("three-atom oracle equivalence on a 7-point grid") {
    const PriorSpec prior = PriorSpec::atomic({{-1.0, 0.3}, {0.0, 0.4}, {2.0, 0.3}});
    for (const auto& fc : table1_families()) {
        INFO(fc.noise.family_name());
        const auto model = exact_density(prior, fc.noise);
        for (double y : central_grid(prior, fc.noise, 7)) {
            const double formula = posterior_mean(fc.noise, model, y, fc.tol / 10.0).scalar();
            const double truth =
                oracle::oracle_posterior(prior, fc.noise, FunctionalSpec::mean(), y);
            CHECK(formula == Approx(truth).margin(fc.tol));
        }
    }
}

TEST_CASE("posterior_mean error handling") {
    const PriorSpec prior = PriorSpec::atomic({{0.0, 1.0}});
    const auto noise = NoiseSpec::gaussian(0.0, 1.0);
    const auto model = exact_density(prior, noise);
    CHECK_THROWS_AS(posterior_mean(noise, model, 40.0), density_too_small);
    CHECK_THROWS_AS(posterior_mean(NoiseSpec::product_laplace(1.0, 1), model, 0.0), unsupported);
}

TEST_CASE("expectation-form representer: one-atom quadrature values") {
    const PriorSpec prior = PriorSpec::atomic({{0.0, 1.0}});
    const auto noise = NoiseSpec::gaussian(0.0, 1.0);
    const auto model = exact_density(prior, noise);
    const double a = 2.0;
    // T = g(0) f_V(y): the one-atom sum, with g(0) = 1/a.
    for (double y : {0.0, 1.0}) {
        const double expected = (1.0 / a) * numerics::norm_pdf(y);
        CHECK(unbiased_mean_functional(model, y, a, 1e-11).scalar() ==
              Approx(expected).margin(1e-8));
    }
    CHECK_THROWS_AS(unbiased_mean_functional(model, 0.0, 1.0, 1e-10), domain_error);
}

TEST_CASE("expectation-form representer: quadrature vs Monte Carlo within 3 SE") {
    const PriorSpec prior = PriorSpec::gaussian_mixture({{0.3, 0.8, 1.0}});
    const auto noise = NoiseSpec::gaussian(0.0, 1.0);
    const auto model = exact_density(prior, noise);
    const double y = 0.5, a = 2.0;
    const double quad = unbiased_mean_functional(model, y, a, 1e-11).scalar();
    const auto mc = unbiased_mean_functional(model, y, a, MonteCarloMode{1000000, 11});
    CHECK(std::abs(mc.scalar() - quad) <= 3.0 * mc.quadrature_error_estimate);
}
