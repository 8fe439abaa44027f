#pragma once

#include <cmath>
#include <cstdint>

#include "tweedie/core.hpp"
#include "tweedie/densities.hpp"
#include "tweedie/numerics.hpp"
#include "tweedie/oracle.hpp"

namespace tweedie {

// Posterior-mean representation read off the observed marginal density; one
// exact kernel per noise family. The correction integrals see only f_Y, never
// the prior.
inline EvalResult posterior_mean(const NoiseSpec& noise, const DensityModel& model, double y,
                                 double tol = 1e-8) {
    validate_noise(noise);
    if (model.dim() != 1) throw dimension_mismatch("posterior_mean is univariate");
    const double fy = require_density(model(y));
    const double abs_tol = std::max(tol * fy / 4.0, 1e-305);
    const double rel_tol = tol / 4.0;
    numerics::Tally tally;
    const std::vector<double> landmarks = model.mass_landmarks();
    // Split points in u-space for integrands f(y + sgn*u), u > 0.
    auto cuts = [&](int sgn) {
        std::vector<double> out;
        for (double L : landmarks) {
            const double u = sgn > 0 ? L - y : y - L;
            if (u > 0.0) out.push_back(u);
        }
        return out;
    };
    auto cuts_both = [&] {
        std::vector<double> out;
        for (double L : landmarks)
            if (std::abs(L - y) > 0.0) out.push_back(std::abs(L - y));
        return out;
    };
    auto integrate = [&](auto&& g, double lo, double hi, const std::vector<double>& cut_list) {
        return tally.add(
            numerics::adaptive_integrate_split(g, lo, hi, cut_list, abs_tol, rel_tol));
    };
    const double l1 = model.l1_bound();
    double value = 0.0;

    switch (noise.family) {
        case NoiseFamily::kGaussian: {
            const double s2 = noise.sigma() * noise.sigma();
            value = y - noise.mu() + s2 * model.deriv(y, 1) / fy;
            break;
        }
        case NoiseFamily::kGeneralizedLaplace:
        case NoiseFamily::kLaplace: {
            const double b = noise.b();
            const double lam =
                noise.family == NoiseFamily::kLaplace ? 1.0 : noise.gl_lambda();
            const double corr = integrate(
                [&](double u) { return std::exp(-u / b) * (model(y + u) - model(y - u)); }, 0.0,
                numerics::kInf, cuts_both());
            value = y - noise.mu() + lam * corr / fy;
            break;
        }
        case NoiseFamily::kAsymmetricLaplace: {
            const double up = integrate(
                [&](double u) { return std::exp(-u / noise.b_minus()) * model(y + u); }, 0.0,
                numerics::kInf, cuts(+1));
            const double dn = integrate(
                [&](double u) { return std::exp(-u / noise.b_plus()) * model(y - u); }, 0.0,
                numerics::kInf, cuts(-1));
            value = y - noise.mu() + (up - dn) / fy;
            break;
        }
        case NoiseFamily::kLogistic:
        case NoiseFamily::kHyperbolicSecant: {
            const bool logi = noise.family == NoiseFamily::kLogistic;
            const double s = noise.s();
            auto kernel = [&](double t) {
                return logi ? 1.0 / std::expm1(t / s) : 0.5 / std::sinh(M_PI * t / (2.0 * s));
            };
            // Analytic limit of the integrand on [0, eps], exponential-kernel
            // cutoff T with kernel(T) * l1 < tol/10 beyond.
            const double eps = 1e-6;
            const double fprime = model.deriv(y, 1);
            const double small = (logi ? 2.0 * s : 2.0 * s / M_PI) * fprime * eps;
            const double T =
                logi ? s * std::log1p(20.0 * l1 / tol)
                     : 2.0 * s / M_PI * std::log(20.0 * l1 / tol + 2.0);
            const double mid = integrate(
                [&](double t) { return (model(y + t) - model(y - t)) * kernel(t); }, eps, T,
                cuts_both());
            tally.err += tol / 10.0;  // truncated tail bound, kernel(T)*2*l1
            value = y - noise.mu() + (small + mid) / fy;
            break;
        }
        case NoiseFamily::kGumbel: {
            const double be = noise.beta();
            auto kernel = [&](double u) { return 1.0 / std::expm1(u / be); };
            const double eps = 1e-6;
            const double small = be * model.deriv(y, 1) * eps;
            const double T = be * std::log1p(10.0 * l1 / tol);
            const double mid = integrate(
                [&](double u) { return (fy - model(y - u)) * kernel(u); }, eps, T, cuts(-1));
            // Left-tail mass beyond T: the f_Y(y) part in closed form, the
            // remaining f_Y(y-u) part bounded by kernel(T) * l1.
            const double tail = -fy * be * std::log1p(-std::exp(-T / be));
            tally.err += tol / 10.0;
            value = y - noise.mu() - be * numerics::kEulerGamma + (small + mid + tail) / fy;
            break;
        }
        case NoiseFamily::kCauchy: {
            const double fprime = model.deriv(y, 1);
            numerics::QuadResult h = numerics::hilbert_transform(
                [&](double z) { return model(z); }, y, std::max(abs_tol, 1e-14), l1, fprime,
                cuts_both());
            value = y - noise.mu() - noise.gamma_scale() * tally.add(h) / fy;
            break;
        }
        case NoiseFamily::kGamma: {
            const double corr = integrate(
                [&](double u) { return std::exp(-u / noise.theta()) * model(y - u); }, 0.0,
                numerics::kInf, cuts(-1));
            value = y - noise.alpha() * corr / fy;
            break;
        }
        case NoiseFamily::kNoncentralChiSq: {
            const double corr = integrate(
                [&](double u) {
                    return (0.5 * noise.nu() + 0.25 * noise.delta() * u) * std::exp(-0.5 * u) *
                           model(y - u);
                },
                0.0, numerics::kInf, cuts(-1));
            value = y - corr / fy;
            break;
        }
        case NoiseFamily::kInverseGaussian: {
            // Substitution u = sqrt(y - z) removes the (y-z)^{-1/2} kernel
            // singularity.
            const double mu = noise.ig_mu(), lam = noise.ig_lambda();
            const double c = lam / (2.0 * mu * mu);
            std::vector<double> wcuts;
            for (double u : cuts(-1)) wcuts.push_back(std::sqrt(u));
            const double corr = integrate(
                [&](double w) { return 2.0 * std::exp(-c * w * w) * model(y - w * w); }, 0.0,
                numerics::kInf, wcuts);
            value = y - std::sqrt(lam / (2.0 * M_PI)) * corr / fy;
            break;
        }
        case NoiseFamily::kProductLaplace:
            throw unsupported("use lm_functional_1d / lm_mean_vec for the Laplace mechanism");
    }

    EvalResult r;
    r.value = value;
    r.density_at_point = fy;
    r.quadrature_error_estimate = tally.err / fy;
    r.converged = true;
    return r;
}

struct MonteCarloMode {
    long n = 1000000;
    std::uint64_t seed = 0;
};

namespace detail {

// Q#(z) for g(x) = exp(((a^2-1)/(2a^2)) x^2) / a under standard Gaussian
// noise: the inverse-Fourier image of the representer is itself a Gaussian
// bump, so the numerator functional is a plain expectation over Y.
inline double unbiased_q_sharp(double a, double y, double z) {
    const double v = a * a - 1.0;
    const double dev = z - a * a * y;
    return std::exp(0.5 * v * y * y - dev * dev / (2.0 * v)) / std::sqrt(2.0 * M_PI * v);
}

}  // namespace detail

// Quadrature route: T[f_Y] = int Q#(z) f_Y(z) dz.
inline EvalResult unbiased_mean_functional(const DensityModel& model, double y, double a,
                                           double tol = 1e-10) {
    if (!(a > 1.0)) throw domain_error("expectation-form representer needs a > 1");
    if (model.dim() != 1) throw dimension_mismatch("univariate only");
    if (model.backend() == DensityModel::Backend::kExact &&
        !(model.noise().family == NoiseFamily::kGaussian && model.noise().mu() == 0.0 &&
          model.noise().sigma() == 1.0))
        throw unsupported("expectation-form representer is derived for Gaussian(0,1) noise");
    std::vector<double> cuts = model.mass_landmarks();
    cuts.push_back(a * a * y);  // center of the Q# bump
    numerics::QuadResult r = numerics::adaptive_integrate_split(
        [&](double z) { return detail::unbiased_q_sharp(a, y, z) * model(z); },
        -numerics::kInf, numerics::kInf, cuts, tol, tol);
    EvalResult out;
    out.value = r.value;
    out.density_at_point = model(y);
    out.quadrature_error_estimate = r.error_estimate;
    return out;
}

// Monte Carlo route: average Q#(Y_i) over draws from the model's joint law.
inline EvalResult unbiased_mean_functional(const DensityModel& model, double y, double a,
                                           const MonteCarloMode& mode) {
    if (!(a > 1.0)) throw domain_error("expectation-form representer needs a > 1");
    if (model.backend() != DensityModel::Backend::kExact)
        throw unsupported("Monte Carlo mode samples from an exact prior+noise model");
    auto draws = oracle::sample_joint(model.prior(), model.noise(), mode.n, mode.seed);
    double sum = 0.0, sumsq = 0.0;
    for (const auto& [x, yy] : draws) {
        const double q = detail::unbiased_q_sharp(a, y, yy);
        sum += q;
        sumsq += q * q;
    }
    const double n = static_cast<double>(mode.n);
    const double mean = sum / n;
    const double var = std::max(0.0, sumsq / n - mean * mean);
    EvalResult out;
    out.value = mean;
    out.density_at_point = model(y);
    out.quadrature_error_estimate = std::sqrt(var / n);  // Monte Carlo standard error
    return out;
}

}  // namespace tweedie
