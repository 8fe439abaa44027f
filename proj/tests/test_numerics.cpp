#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "tweedie/distributions.hpp"
#include "tweedie/numerics.hpp"

using namespace tweedie;
using namespace tweedie::numerics;
using Catch::Approx;

TEST_CASE("adaptive_integrate basic values") {
    CHECK(adaptive_integrate([](double) { return 1.0; }, 0.0, 1.0).value == Approx(1.0));
    CHECK(adaptive_integrate([](double x) { return norm_pdf(x); }, -kInf, kInf).value ==
          Approx(1.0).epsilon(1e-10));
    CHECK(adaptive_integrate([](double x) { return std::exp(-x); }, 0.0, kInf).value ==
          Approx(1.0).epsilon(1e-10));
    // Oriented interval and a left-infinite endpoint.
    CHECK(adaptive_integrate([](double x) { return std::exp(x); }, -kInf, 0.0).value ==
          Approx(1.0).epsilon(1e-10));
}

TEST_CASE("adaptive_integrate matches polynomial antiderivatives") {
    Rng rng(2024);
    for (int rep = 0; rep < 40; ++rep) {
        const int deg = static_cast<int>(rng.uniform() * 12.0);
        std::vector<double> coef(deg + 1);
        for (auto& c : coef) c = 4.0 * rng.uniform() - 2.0;
        const double a = 6.0 * rng.uniform() - 3.0;
        const double b = a + 5.0 * rng.uniform() + 0.1;
        auto poly = [&](double x) {
            double p = 0.0;
            for (int i = deg; i >= 0; --i) p = p * x + coef[i];
            return p;
        };
        auto anti = [&](double x) {
            double p = 0.0;
            for (int i = deg; i >= 0; --i) p = p * x + coef[i] / (i + 1);
            return p * x;
        };
        const double expected = anti(b) - anti(a);
        const QuadResult r = adaptive_integrate(poly, a, b, 1e-10, 1e-10);
        CHECK(r.value == Approx(expected).margin(1e-8 + 1e-9 * std::abs(expected)));
        CHECK(r.evaluations >= 1);
        CHECK(r.error_estimate >= 0.0);
    }
}

TEST_CASE("adaptive_integrate exhausts budget on hostile integrand") {
    auto nasty = [](double x) { return std::sin(1.0 / (x + 1e-14)) / std::sqrt(x + 1e-14); };
    CHECK_THROWS_AS(adaptive_integrate(nasty, 0.0, 1.0, 1e-14, 1e-14), non_convergence);
}

namespace {

// Independent principal-value quadrature at tight tolerance: dense symmetric
// Simpson panels in log-t plus explicit small-t limit.
double pv_hilbert_reference(const std::function<double(double)>& f, double y, double fp) {
    const double eps = 1e-9, T = 1e9;
    const int n = 400001;
    const double lo = std::log(eps), hi = std::log(T);
    const double h = (hi - lo) / (n - 1);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = std::exp(lo + i * h);
        const double g = (f(y - t) - f(y + t)) / M_PI;
        const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        sum += w * g;
    }
    return sum * h / 3.0 - 2.0 * fp / M_PI * eps;
}

}  // namespace

TEST_CASE("hilbert transform of the Cauchy density matches the closed form") {
    const double gamma = 0.8;
    auto f = [&](double x) { return gamma / (M_PI * (x * x + gamma * gamma)); };
    auto fprime = [&](double x) {
        return -2.0 * x * gamma / (M_PI * (x * x + gamma * gamma) * (x * x + gamma * gamma));
    };
    for (double y : {-1.7, 0.0, 0.4, 2.2}) {
        const double closed = y / (M_PI * (y * y + gamma * gamma));
        // Independent oracle confirms the closed form first.
        CHECK(pv_hilbert_reference(f, y, fprime(y)) == Approx(closed).margin(2e-6));
        const QuadResult r = hilbert_transform(f, y, 1e-9, 1.0, fprime(y));
        CHECK(r.value == Approx(closed).margin(1e-8));
    }
}

TEST_CASE("hilbert transform odd symmetry and translation") {
    auto f = [](double x) { return norm_pdf(x); };
    CHECK(hilbert_transform(f, 0.0, 1e-10).value == Approx(0.0).margin(1e-9));

    const double c = 1.3;
    auto shifted = [&](double x) { return norm_pdf(x - c); };
    for (double y : {-0.4, 0.9, 2.0}) {
        const double direct = hilbert_transform(shifted, y, 1e-10).value;
        const double base = hilbert_transform(f, y - c, 1e-10).value;
        CHECK(direct == Approx(base).margin(1e-9));
    }
}

TEST_CASE("hilbert transform is linear") {
    auto f = [](double x) { return norm_pdf(x - 0.5); };
    auto g = [](double x) { return norm_pdf((x + 1.0) / 1.5) / 1.5; };
    const double al = 0.7, be = -0.4;
    for (double y : {-1.0, 0.3, 1.8}) {
        auto combo = [&](double x) { return al * f(x) + be * g(x); };
        const double lhs = hilbert_transform(combo, y, 1e-10, std::abs(al) + std::abs(be)).value;
        const double rhs = al * hilbert_transform(f, y, 1e-10).value +
                           be * hilbert_transform(g, y, 1e-10).value;
        CHECK(lhs == Approx(rhs).margin(4e-10));
    }
}

TEST_CASE("hermite_he small orders") {
    CHECK(hermite_he(0, 3.7) == 1.0);
    CHECK(hermite_he(1, 2.0) == 2.0);
    CHECK(hermite_he(2, 2.0) == 3.0);
    CHECK_THROWS_AS(hermite_he(81, 0.0), domain_error);
}

TEST_CASE("hermite_he matches k-fold finite differences of the Gaussian weight") {
    // Rodrigues: He_k(x) = (-1)^k e^{x^2/2} d^k/dx^k e^{-x^2/2}.
    auto w = [](long double x) { return std::exp(-0.5L * x * x); };
    const long double h = 4e-3L;
    for (int k = 0; k <= 5; ++k) {
        for (double x : {-1.2, 0.0, 0.7, 1.9}) {
            long double dk = 0.0L;
            for (int j = 0; j <= k; ++j) {
                long double binom = 1.0L;
                for (int i = 1; i <= j; ++i) binom = binom * (k - j + i) / i;
                const long double sign = (j % 2 == 0) ? 1.0L : -1.0L;
                dk += sign * binom * w(x + (k / 2.0L - j) * h);
            }
            dk /= std::pow(h, static_cast<long double>(k));
            const long double sign = (k % 2 == 0) ? 1.0L : -1.0L;
            const double expected = static_cast<double>(sign * std::exp(0.5L * x * x) * dk);
            CHECK(hermite_he(k, x) == Approx(expected).margin(1e-4 * (1.0 + std::abs(expected))));
        }
    }
}

TEST_CASE("phi_deriv base values") {
    CHECK(phi_deriv(0, 0.0) == Approx(0.5));
    CHECK(phi_deriv(1, 0.0) == Approx(0.3989422804014327));
    CHECK(phi_deriv(2, 0.0) == Approx(0.0).margin(1e-16));
}

TEST_CASE("phi_deriv finite-difference consistency") {
    const double h = 1e-4;
    for (int k = 0; k <= 6; ++k) {
        for (double x = -3.0; x <= 3.0; x += 0.5) {
            const double fd = (phi_deriv(k, x + h) - phi_deriv(k, x - h)) / (2.0 * h);
            CHECK(phi_deriv(k + 1, x) == Approx(fd).margin(1e-5));
        }
    }
}
