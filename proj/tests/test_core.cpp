#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "tweedie/core.hpp"
#include "tweedie/distributions.hpp"
#include "tweedie/oracle.hpp"

using namespace tweedie;
using Catch::Approx;

namespace {

std::vector<NoiseSpec> all_valid_families() {
    return {
        NoiseSpec::gaussian(0.0, 1.0),
        NoiseSpec::generalized_laplace(0.0, 1.0, 1.5),
        NoiseSpec::laplace(0.0, 1.0),
        NoiseSpec::asymmetric_laplace(0.0, 1.0, 2.0),
        NoiseSpec::logistic(0.0, 0.7),
        NoiseSpec::gumbel(0.0, 1.0),
        NoiseSpec::cauchy(0.0, 1.0),
        NoiseSpec::hyperbolic_secant(0.0, 0.7),
        NoiseSpec::gamma(2.0, 1.0),
        NoiseSpec::noncentral_chisq(4.0, 1.5),
        NoiseSpec::inverse_gaussian(1.0, 2.0),
        NoiseSpec::product_laplace(1.0, 2),
    };
}

}  // namespace

TEST_CASE("validate_noise accepts in-range parameters") {
    for (const auto& n : all_valid_families()) CHECK_NOTHROW(validate_noise(n));
}

TEST_CASE("validate_noise rejects family restrictions") {
    CHECK_THROWS_AS(validate_noise(NoiseSpec::gamma(0.5, 1.0)), param_out_of_range);
    CHECK_THROWS_AS(validate_noise(NoiseSpec::generalized_laplace(0.0, 1.0, 0.5)),
                    param_out_of_range);
    // Boundary parameters are rejected, not special-cased.
    CHECK_THROWS_AS(validate_noise(NoiseSpec::gamma(1.0, 1.0)), param_out_of_range);
    CHECK_THROWS_AS(validate_noise(NoiseSpec::noncentral_chisq(2.0, 1.0)), param_out_of_range);
    CHECK_THROWS_AS(validate_noise(NoiseSpec::noncentral_chisq(4.0, -0.1)), param_out_of_range);
    // Scale positivity across families.
    CHECK_THROWS_AS(validate_noise(NoiseSpec::gaussian(0.0, 0.0)), param_out_of_range);
    CHECK_THROWS_AS(validate_noise(NoiseSpec::laplace(0.0, -1.0)), param_out_of_range);
    CHECK_THROWS_AS(validate_noise(NoiseSpec::asymmetric_laplace(0.0, 0.0, 1.0)),
                    param_out_of_range);
    CHECK_THROWS_AS(validate_noise(NoiseSpec::logistic(0.0, -0.1)), param_out_of_range);
    CHECK_THROWS_AS(validate_noise(NoiseSpec::gumbel(0.0, 0.0)), param_out_of_range);
    CHECK_THROWS_AS(validate_noise(NoiseSpec::cauchy(0.0, 0.0)), param_out_of_range);
    CHECK_THROWS_AS(validate_noise(NoiseSpec::hyperbolic_secant(0.0, 0.0)), param_out_of_range);
    CHECK_THROWS_AS(validate_noise(NoiseSpec::inverse_gaussian(0.0, 1.0)), param_out_of_range);
    CHECK_THROWS_AS(validate_noise(NoiseSpec::product_laplace(1.0, 0)), param_out_of_range);
}

TEST_CASE("every accepted family has a finite positive density at its mode") {
    for (const auto& n : all_valid_families()) {
        if (n.family == NoiseFamily::kProductLaplace) continue;
        const double v = dist::mode_hint(n);
        const double f = oracle::noise_pdf(validate_noise(n), v);
        INFO(n.family_name());
        CHECK(f > 0.0);
        CHECK(std::isfinite(f));
    }
}

TEST_CASE("validate_functional supported matrix") {
    const auto pl = NoiseSpec::product_laplace(1.0, 1);
    CHECK_NOTHROW(validate_functional(FunctionalSpec::mgf(0.5), pl));
    CHECK_THROWS_AS(validate_functional(FunctionalSpec::mgf(1.0), pl), mgf_domain);
    CHECK_THROWS_AS(validate_functional(FunctionalSpec::cdf(0.0), NoiseSpec::cauchy(0.0, 1.0)),
                    unsupported);
    CHECK_THROWS_AS(validate_functional(FunctionalSpec::pinball(0.0, 1.0), pl), domain_error);
    CHECK_THROWS_AS(validate_functional(FunctionalSpec::pinball(0.0, 0.0), pl), domain_error);
    // Table 1 families expose the mean only.
    CHECK_NOTHROW(validate_functional(FunctionalSpec::mean(), NoiseSpec::gumbel(0.0, 1.0)));
    CHECK_THROWS_AS(validate_functional(FunctionalSpec::variance(), NoiseSpec::gumbel(0.0, 1.0)),
                    unsupported);
    // Gaussian exposes the Table 3 set but not pinball.
    const auto g = NoiseSpec::gaussian(0.0, 1.0);
    CHECK_NOTHROW(validate_functional(FunctionalSpec::raw_moment(4), g));
    CHECK_NOTHROW(validate_functional(FunctionalSpec::hinge(0.3), g));
    CHECK_THROWS_AS(validate_functional(FunctionalSpec::pinball(0.3, 0.4), g), unsupported);
}

TEST_CASE("validate_functional is idempotent") {
    const auto pl = NoiseSpec::product_laplace(1.0, 1);
    const auto f = FunctionalSpec::pinball(0.4, 0.3);
    const auto once = validate_functional(f, pl);
    const auto twice = validate_functional(once, pl);
    CHECK(twice.target == f.target);
    CHECK(twice.a == f.a);
    CHECK(twice.tau == f.tau);
}

TEST_CASE("prior weight handling") {
    // Decimal round-off within 1e-12 is absorbed by renormalization.
    auto p = PriorSpec::atomic({{0.0, 0.5 + 4e-13}, {1.0, 0.5}});
    double total = 0.0;
    for (const auto& a : p.atoms) total += a.weight;
    CHECK(total == Approx(1.0).margin(1e-15));

    CHECK_THROWS_AS(PriorSpec::atomic({{0.0, 0.6}, {1.0, 0.5}}), domain_error);
    CHECK_THROWS_AS(PriorSpec::atomic({{0.0, 1.5}, {1.0, -0.5}}), domain_error);
    CHECK_THROWS_AS(PriorSpec::atomic({{1.0, 0.5}, {1.0, 0.5}}), domain_error);
    CHECK_THROWS_AS(PriorSpec::gaussian_mixture({{0.0, -1.0, 1.0}}), domain_error);
}

TEST_CASE("gaussian mixture covariance must be symmetric positive definite") {
    VectorXd mean = VectorXd::Zero(2);
    MatrixXd bad(2, 2);
    bad << 1.0, 0.5, -0.5, 1.0;  // asymmetric
    CHECK_THROWS_AS(PriorSpec::gaussian_mixture_vec({{mean, bad, 1.0}}), domain_error);
    MatrixXd indef(2, 2);
    indef << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(PriorSpec::gaussian_mixture_vec({{mean, indef, 1.0}}), domain_error);
    MatrixXd good(2, 2);
    good << 1.0, 0.2, 0.2, 0.5;
    CHECK_NOTHROW(PriorSpec::gaussian_mixture_vec({{mean, good, 1.0}}));
}
