#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "tweedie/core.hpp"
#include "tweedie/distributions.hpp"
#include "tweedie/numerics.hpp"

namespace tweedie::oracle {

inline double noise_pdf(const NoiseSpec& noise, double v) { return dist::pdf(noise, v); }
inline double noise_pdf(const NoiseSpec& noise, const VectorXd& v) {
    return dist::pdf_vec(noise, v);
}
inline double noise_cdf(const NoiseSpec& noise, double v) { return dist::cdf(noise, v); }

// The estimand g(x) for targets that are plain posterior expectations.
inline std::function<double(double)> functional_g(const FunctionalSpec& f) {
    switch (f.target) {
        case Target::kMean:
            return [](double x) { return x; };
        case Target::kSecondMoment:
            return [](double x) { return x * x; };
        case Target::kRawMoment:
            return [k = f.k](double x) { return std::pow(x, k); };
        case Target::kMgf:
            return [t = f.t_scalar()](double x) { return std::exp(t * x); };
        case Target::kCdf:
            return [a = f.a](double x) { return x <= a ? 1.0 : 0.0; };
        case Target::kSquaredRisk:
            return [a = f.a](double x) { return (x - a) * (x - a); };
        case Target::kEvenRisk:
            return [a = f.a, m = f.m](double x) { return std::pow((x - a) * (x - a), m); };
        case Target::kHingeLoss:
            return [a = f.a](double x) { return std::max(x - a, 0.0); };
        case Target::kPinballLoss:
            return [a = f.a, tau = f.tau](double x) {
                const double z = x - a;
                return tau * std::max(z, 0.0) + (1.0 - tau) * std::max(-z, 0.0);
            };
        case Target::kAbsoluteRisk:
            return [a = f.a](double x) { return std::abs(x - a); };
        default:
            throw unsupported("functional is a transform, not a plain expectation");
    }
}

// Direct Bayes: E[g(X)|Y=y] = [int g(x) f_V(y-x) dP_X] / [int f_V(y-x) dP_X].
// Finite sums for atomic priors (exact up to noise_pdf accuracy); adaptive
// quadrature for Gaussian-mixture priors, 10x tighter than the comparison
// tolerance so the oracle dominates the error budget. `split` lists kink
// locations of g for the quadrature path.
inline double oracle_posterior(const PriorSpec& prior, const NoiseSpec& noise,
                               const std::function<double(double)>& g, double y,
                               double tol = 1e-10, std::vector<double> split = {}) {
    if (prior.kind == PriorSpec::Kind::kAtomic) {
        double num = 0.0, den = 0.0;
        for (const auto& a : prior.atoms) {
            const double fv = dist::pdf(noise, y - a.location[0]);
            num += a.weight * g(a.location[0]) * fv;
            den += a.weight * fv;
        }
        require_density(den);
        return num / den;
    }
    if (prior.kind != PriorSpec::Kind::kGaussianMixture)
        throw unsupported("oracle_posterior needs an atomic or Gaussian-mixture prior");
    const double itol = tol / 10.0;
    double num = 0.0, den = 0.0;
    for (const auto& c : prior.components) {
        const double m = c.mean[0];
        const double tau = std::sqrt(c.cov(0, 0));
        std::vector<double> cuts{m - 14.0 * tau, m + 14.0 * tau};
        std::vector<double> interior = split;
        interior.push_back(y - dist::mode_hint(noise));  // noise bump location
        for (double s : interior)
            if (s > cuts.front() && s < cuts.back()) cuts.insert(cuts.end() - 1, s);
        std::sort(cuts.begin(), cuts.end());
        for (size_t i = 0; i + 1 < cuts.size(); ++i) {
            auto seg_num = [&](double x) {
                return g(x) * dist::pdf(noise, y - x) * numerics::norm_pdf((x - m) / tau) / tau;
            };
            auto seg_den = [&](double x) {
                return dist::pdf(noise, y - x) * numerics::norm_pdf((x - m) / tau) / tau;
            };
            num += c.weight *
                   numerics::adaptive_integrate(seg_num, cuts[i], cuts[i + 1], itol, itol).value;
            den += c.weight *
                   numerics::adaptive_integrate(seg_den, cuts[i], cuts[i + 1], itol, itol).value;
        }
    }
    require_density(den);
    return num / den;
}

inline double oracle_posterior(const PriorSpec& prior, const NoiseSpec& noise,
                               const FunctionalSpec& f, double y, double tol = 1e-10) {
    std::vector<double> split;
    switch (f.target) {
        case Target::kCdf:
        case Target::kHingeLoss:
        case Target::kPinballLoss:
        case Target::kAbsoluteRisk:
            split.push_back(f.a);
            break;
        default:
            break;
    }
    return oracle_posterior(prior, noise, functional_g(f), y, tol, split);
}

// Handles the Panel-B transforms on top of plain expectations.
inline double oracle_functional(const PriorSpec& prior, const NoiseSpec& noise,
                                const FunctionalSpec& f, double y, double tol = 1e-10) {
    switch (f.target) {
        case Target::kVariance: {
            const double m1 = oracle_posterior(prior, noise, FunctionalSpec::mean(), y, tol);
            const double m2 =
                oracle_posterior(prior, noise, FunctionalSpec::second_moment(), y, tol);
            return m2 - m1 * m1;
        }
        case Target::kCenteredMoment: {
            const double m1 = oracle_posterior(prior, noise, FunctionalSpec::mean(), y, tol);
            return oracle_posterior(
                prior, noise, [&](double x) { return std::pow(x - m1, f.k); }, y, tol);
        }
        default:
            return oracle_posterior(prior, noise, f, y, tol);
    }
}

// Multivariate version, atomic priors only.
inline double oracle_posterior_vec(const PriorSpec& prior, const NoiseSpec& noise,
                                   const std::function<double(const VectorXd&)>& g,
                                   const VectorXd& y) {
    if (prior.kind != PriorSpec::Kind::kAtomic)
        throw unsupported("multivariate oracle needs an atomic prior");
    double num = 0.0, den = 0.0;
    for (const auto& a : prior.atoms) {
        const double fv = dist::pdf_vec(noise, y - a.location);
        num += a.weight * g(a.location) * fv;
        den += a.weight * fv;
    }
    require_density(den);
    return num / den;
}

// --------------------------------------------------------------------------
// Seeded joint sampling: x ~ P_X, v ~ P_V, y = x + v.
// --------------------------------------------------------------------------

inline VectorXd sample_prior_vec(const PriorSpec& prior, Rng& rng) {
    if (prior.kind == PriorSpec::Kind::kAtomic) {
        const double u = rng.uniform();
        double cum = 0.0;
        for (const auto& a : prior.atoms) {
            cum += a.weight;
            if (u <= cum) return a.location;
        }
        return prior.atoms.back().location;
    }
    if (prior.kind == PriorSpec::Kind::kGaussianMixture) {
        const double u = rng.uniform();
        double cum = 0.0;
        for (const auto& c : prior.components) {
            cum += c.weight;
            if (u <= cum) {
                Eigen::LLT<MatrixXd> llt(c.cov);
                VectorXd z(prior.dim);
                for (int j = 0; j < prior.dim; ++j) z[j] = rng.normal();
                return c.mean + MatrixXd(llt.matrixL()) * z;
            }
        }
        throw domain_error("mixture weights do not accumulate to 1");
    }
    throw unsupported("sampling needs an atomic or Gaussian-mixture prior");
}

inline std::vector<std::pair<double, double>> sample_joint(const PriorSpec& prior,
                                                           const NoiseSpec& noise, long n,
                                                           std::uint64_t seed) {
    if (n < 1) throw domain_error("sample_joint needs n >= 1");
    if (prior.dim != 1) throw dimension_mismatch("sample_joint is univariate; use sample_joint_vec");
    Rng rng(seed);
    std::vector<std::pair<double, double>> out;
    out.reserve(n);
    for (long i = 0; i < n; ++i) {
        const double x = sample_prior_vec(prior, rng)[0];
        const double v = dist::sample(noise, rng);
        out.emplace_back(x, x + v);
    }
    return out;
}

struct JointDrawVec {
    VectorXd x, y;
};

inline std::vector<JointDrawVec> sample_joint_vec(const PriorSpec& prior, const NoiseSpec& noise,
                                                  long n, std::uint64_t seed) {
    if (n < 1) throw domain_error("sample_joint needs n >= 1");
    Rng rng(seed);
    std::vector<JointDrawVec> out;
    out.reserve(n);
    for (long i = 0; i < n; ++i) {
        VectorXd x = sample_prior_vec(prior, rng);
        VectorXd v = dist::sample_vec(noise, rng);
        out.push_back({x, x + v});
    }
    return out;
}

}  // namespace tweedie::oracle
