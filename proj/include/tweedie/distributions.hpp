#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "tweedie/core.hpp"
#include "tweedie/numerics.hpp"

namespace tweedie {

// Counter-based generator: the splitmix64 output function applied to
// seed + k*golden_gamma. Draw k is addressable, so streams are
// bit-reproducible given the 64-bit seed.
class Rng {
   public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on the open interval (0,1).
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double exponential() { return -std::log(uniform()); }

   private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

namespace dist {

// Regularized lower incomplete gamma P(a, x); series for x < a+1,
// Lentz continued fraction otherwise.
inline double igamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    constexpr double kTiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

inline double gamma_pdf(double alpha, double theta, double v) {
    if (v <= 0.0) return 0.0;
    return std::exp((alpha - 1.0) * std::log(v) - v / theta - std::lgamma(alpha) -
                    alpha * std::log(theta));
}

// Poisson(delta/2) weights truncated when the remaining tail mass < 1e-12.
inline std::vector<double> ncx2_poisson_weights(double delta) {
    const double m = 0.5 * delta;
    std::vector<double> w;
    double p = std::exp(-m), cum = p;
    w.push_back(p);
    while (cum < 1.0 - 1e-12) {
        p *= m / static_cast<double>(w.size());
        cum += p;
        w.push_back(p);
        if (w.size() > 4000) break;
    }
    return w;
}

// Density of b*(G1 - G2) with G1,G2 iid Gamma(lambda,1), by one-dimensional
// convolution quadrature of t^(l-1)(t+u)^(l-1)e^(-2t); the characteristic
// function (1+b^2 w^2)^(-lambda) factors as this Gamma difference.
inline double gen_laplace_pdf(double b, double lambda, double centered) {
    const double u = std::abs(centered) / b;
    if (u < 1e-13)  // f_D(0) = Gamma(2l-1) / (2^{2l-1} Gamma(l)^2), finite for l > 1/2
        return std::exp(std::lgamma(2.0 * lambda - 1.0) - (2.0 * lambda - 1.0) * M_LN2 -
                        2.0 * std::lgamma(lambda)) /
               b;
    const double c = -u - 2.0 * std::lgamma(lambda);
    auto g = [&](double t) {
        return std::exp((lambda - 1.0) * (std::log(t) + std::log(t + u)) - 2.0 * t + c);
    };
    numerics::QuadResult r = numerics::adaptive_integrate(g, 0.0, numerics::kInf, 1e-14, 1e-11);
    return r.value / b;
}

inline double gen_laplace_cdf(double b, double lambda, double centered) {
    const double u = centered / b;
    // P(G1 - G2 <= u) = E_G2[ P(G1 <= G2 + u) ].
    auto g = [&](double t) {
        const double arg = t + u;
        if (arg <= 0.0) return 0.0;
        return igamma_p(lambda, arg) * gamma_pdf(lambda, 1.0, t);
    };
    numerics::QuadResult r = numerics::adaptive_integrate(g, std::max(0.0, -u), numerics::kInf,
                                                          1e-12, 1e-10);
    return r.value;
}

inline double pdf(const NoiseSpec& n, double v) {
    switch (n.family) {
        case NoiseFamily::kGaussian: {
            const double z = (v - n.mu()) / n.sigma();
            return numerics::norm_pdf(z) / n.sigma();
        }
        case NoiseFamily::kGeneralizedLaplace:
            return gen_laplace_pdf(n.b(), n.gl_lambda(), v - n.mu());
        case NoiseFamily::kLaplace:
            return 0.5 / n.b() * std::exp(-std::abs(v - n.mu()) / n.b());
        case NoiseFamily::kAsymmetricLaplace: {
            const double u = v - n.mu();
            const double c = 1.0 / (n.b_minus() + n.b_plus());
            return u < 0.0 ? c * std::exp(u / n.b_minus()) : c * std::exp(-u / n.b_plus());
        }
        case NoiseFamily::kLogistic: {
            const double z = (v - n.mu()) / n.s();
            const double e = std::exp(-std::abs(z));
            const double den = 1.0 + e;
            return e / (n.s() * den * den);
        }
        case NoiseFamily::kGumbel: {
            const double z = (v - n.mu()) / n.beta();
            return std::exp(-z - std::exp(-z)) / n.beta();
        }
        case NoiseFamily::kCauchy: {
            const double u = v - n.mu();
            const double g = n.gamma_scale();
            return g / (M_PI * (u * u + g * g));
        }
        case NoiseFamily::kHyperbolicSecant: {
            const double z = M_PI * (v - n.mu()) / (2.0 * n.s());
            const double e = std::exp(-std::abs(z));
            return (1.0 / n.s()) * e / (1.0 + e * e);  // sech(z)/(2s)
        }
        case NoiseFamily::kGamma:
            return gamma_pdf(n.alpha(), n.theta(), v);
        case NoiseFamily::kNoncentralChiSq: {
            if (v <= 0.0) return 0.0;
            const auto w = ncx2_poisson_weights(n.delta());
            double tot = 0.0;
            for (size_t j = 0; j < w.size(); ++j)
                tot += w[j] * gamma_pdf(0.5 * n.nu() + j, 2.0, v);
            return tot;
        }
        case NoiseFamily::kInverseGaussian: {
            if (v <= 0.0) return 0.0;
            const double mu = n.ig_mu(), lam = n.ig_lambda();
            const double d = v - mu;
            return std::sqrt(lam / (2.0 * M_PI * v * v * v)) *
                   std::exp(-lam * d * d / (2.0 * mu * mu * v));
        }
        case NoiseFamily::kProductLaplace:
            if (n.dim != 1) throw dimension_mismatch("scalar pdf of multivariate noise");
            return 0.5 / n.b() * std::exp(-std::abs(v) / n.b());
    }
    throw domain_error("unknown noise family");
}

inline double pdf_vec(const NoiseSpec& n, const VectorXd& v) {
    if (n.family != NoiseFamily::kProductLaplace) {
        if (n.dim == 1 && v.size() == 1) return pdf(n, v[0]);
        throw unsupported("vector pdf only for product-Laplace noise");
    }
    if (v.size() != n.dim) throw dimension_mismatch("noise dimension mismatch");
    return std::pow(0.5 / n.b(), n.dim) * std::exp(-v.lpNorm<1>() / n.b());
}

inline std::pair<double, double> support(const NoiseSpec& n) {
    switch (n.family) {
        case NoiseFamily::kGamma:
        case NoiseFamily::kNoncentralChiSq:
        case NoiseFamily::kInverseGaussian:
            return {0.0, numerics::kInf};
        default:
            return {-numerics::kInf, numerics::kInf};
    }
}

// An interior point at (or near) the density mode.
inline double mode_hint(const NoiseSpec& n) {
    switch (n.family) {
        case NoiseFamily::kGamma:
            return (n.alpha() - 1.0) * n.theta();
        case NoiseFamily::kNoncentralChiSq:
            return std::max(n.nu() - 2.0, 0.5) + 0.5 * n.delta();
        case NoiseFamily::kInverseGaussian: {
            const double mu = n.ig_mu(), lam = n.ig_lambda();
            const double r = 1.5 * mu / lam;
            return mu * (std::sqrt(1.0 + r * r) - r);
        }
        default:
            return n.mu();
    }
}

inline double cdf(const NoiseSpec& n, double v) {
    switch (n.family) {
        case NoiseFamily::kGaussian:
            return numerics::norm_cdf((v - n.mu()) / n.sigma());
        case NoiseFamily::kGeneralizedLaplace:
            return gen_laplace_cdf(n.b(), n.gl_lambda(), v - n.mu());
        case NoiseFamily::kProductLaplace:
        case NoiseFamily::kLaplace: {
            const double u = v - n.mu();
            return u < 0.0 ? 0.5 * std::exp(u / n.b()) : 1.0 - 0.5 * std::exp(-u / n.b());
        }
        case NoiseFamily::kAsymmetricLaplace: {
            const double u = v - n.mu();
            const double bm = n.b_minus(), bp = n.b_plus();
            if (u < 0.0) return bm / (bm + bp) * std::exp(u / bm);
            return 1.0 - bp / (bm + bp) * std::exp(-u / bp);
        }
        case NoiseFamily::kLogistic: {
            const double z = (v - n.mu()) / n.s();
            return 1.0 / (1.0 + std::exp(-z));
        }
        case NoiseFamily::kGumbel:
            return std::exp(-std::exp(-(v - n.mu()) / n.beta()));
        case NoiseFamily::kCauchy:
            return 0.5 + std::atan((v - n.mu()) / n.gamma_scale()) / M_PI;
        case NoiseFamily::kHyperbolicSecant:
            return 2.0 / M_PI * std::atan(std::exp(M_PI * (v - n.mu()) / (2.0 * n.s())));
        case NoiseFamily::kGamma:
            return v <= 0.0 ? 0.0 : igamma_p(n.alpha(), v / n.theta());
        case NoiseFamily::kNoncentralChiSq: {
            if (v <= 0.0) return 0.0;
            const auto w = ncx2_poisson_weights(n.delta());
            double tot = 0.0;
            for (size_t j = 0; j < w.size(); ++j)
                tot += w[j] * igamma_p(0.5 * n.nu() + j, 0.5 * v);
            return tot;
        }
        case NoiseFamily::kInverseGaussian: {
            if (v <= 0.0) return 0.0;
            const double mu = n.ig_mu(), lam = n.ig_lambda();
            const double s = std::sqrt(lam / v);
            return numerics::norm_cdf(s * (v / mu - 1.0)) +
                   std::exp(2.0 * lam / mu) * numerics::norm_cdf(-s * (v / mu + 1.0));
        }
    }
    throw domain_error("unknown noise family");
}

// --------------------------------------------------------------------------
// Exact k-th derivatives of the smooth noise densities. Each family keeps a
// small closed algebra under differentiation; the coefficient recurrences
// below stay exact in double precision for the supported orders.
// --------------------------------------------------------------------------

inline int max_deriv_order(const NoiseSpec& n) {
    switch (n.family) {
        case NoiseFamily::kGaussian:
            return numerics::kMaxHermiteOrder;
        case NoiseFamily::kLogistic:
        case NoiseFamily::kGumbel:
        case NoiseFamily::kCauchy:
        case NoiseFamily::kHyperbolicSecant:
        case NoiseFamily::kGamma:
        case NoiseFamily::kNoncentralChiSq:
        case NoiseFamily::kInverseGaussian:
            return 20;
        default:
            return 0;  // kinked Laplace variants: use the right-derivative path
    }
}

namespace detail {

// Polynomial-in-sigmoid coefficients after k z-derivatives of s(1-s).
inline std::vector<double> logistic_coeffs(int k) {
    std::vector<double> c{0.0, 1.0, -1.0};
    for (int d = 0; d < k; ++d) {
        std::vector<double> nc(c.size() + 1, 0.0);
        for (size_t m = 1; m < c.size(); ++m) {
            nc[m] += static_cast<double>(m) * c[m];
            nc[m + 1] -= static_cast<double>(m) * c[m];
        }
        c = std::move(nc);
    }
    return c;
}

inline std::vector<double> gumbel_coeffs(int k) {
    std::vector<double> c{0.0, 1.0};  // t * e^{-t}
    for (int d = 0; d < k; ++d) {
        std::vector<double> nc(c.size() + 1, 0.0);
        for (size_t m = 0; m < c.size(); ++m) {
            nc[m] -= static_cast<double>(m) * c[m];
            nc[m + 1] += c[m];
        }
        c = std::move(nc);
    }
    return c;
}

// Coefficients over sech^a tanh^b monomials after k z-derivatives of sech.
inline std::map<std::pair<int, int>, double> sech_coeffs(int k) {
    std::map<std::pair<int, int>, double> c{{{1, 0}, 1.0}};
    for (int d = 0; d < k; ++d) {
        std::map<std::pair<int, int>, double> nc;
        for (const auto& [ab, coef] : c) {
            const auto [a, b] = ab;
            nc[{a, b + 1}] -= a * coef;
            if (b > 0) nc[{a + 2, b - 1}] += b * coef;
        }
        c = std::move(nc);
    }
    return c;
}

inline double gamma_pdf_deriv(double alpha, double theta, double v, int k) {
    if (v <= 0.0) return 0.0;
    // e^{-v/theta} * sum_j c_j v^{alpha-1-j}
    std::vector<double> c{1.0};
    for (int d = 0; d < k; ++d) {
        std::vector<double> nc(c.size() + 1, 0.0);
        for (size_t j = 0; j < c.size(); ++j) {
            nc[j] -= c[j] / theta;
            nc[j + 1] += (alpha - 1.0 - static_cast<double>(j)) * c[j];
        }
        c = std::move(nc);
    }
    const double base = std::exp((alpha - 1.0) * std::log(v) - v / theta - std::lgamma(alpha) -
                                 alpha * std::log(theta));
    double poly = 0.0, vpow = 1.0;
    for (size_t j = 0; j < c.size(); ++j) {
        poly += c[j] * vpow;
        vpow /= v;
    }
    return base * poly;
}

}  // namespace detail

inline double pdf_deriv(const NoiseSpec& n, double v, int k) {
    if (k == 0) return pdf(n, v);
    if (k < 0 || k > max_deriv_order(n))
        throw unsupported(std::string(n.family_name()) +
                          ": density derivative order unsupported (kinked noise needs the "
                          "right-derivative path)");
    switch (n.family) {
        case NoiseFamily::kGaussian: {
            const double s = n.sigma();
            const double z = (v - n.mu()) / s;
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            return sign * std::pow(s, -k) * numerics::hermite_he(k, z) * pdf(n, v);
        }
        case NoiseFamily::kLogistic: {
            const double s = n.s();
            const double z = (v - n.mu()) / s;
            const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                                        : std::exp(z) / (1.0 + std::exp(z));
            const auto c = detail::logistic_coeffs(k);
            double poly = 0.0, p = 1.0;
            for (size_t m = 0; m < c.size(); ++m) {
                poly += c[m] * p;
                p *= sig;
            }
            return poly / std::pow(s, k + 1);
        }
        case NoiseFamily::kGumbel: {
            const double be = n.beta();
            const double z = (v - n.mu()) / be;
            const double t = std::exp(-z);
            const auto c = detail::gumbel_coeffs(k);
            double tot = 0.0;
            const double lt = -z;  // log t
            for (size_t m = 0; m < c.size(); ++m) {
                if (c[m] == 0.0) continue;
                tot += c[m] * std::exp(static_cast<double>(m) * lt - t);
            }
            return tot / std::pow(be, k + 1);
        }
        case NoiseFamily::kCauchy: {
            const double g = n.gamma_scale();
            const double u = v - n.mu();
            std::complex<double> w(u, -g);
            std::complex<double> p = std::pow(w, -(k + 1));
            double fact = 1.0;
            for (int j = 2; j <= k; ++j) fact *= j;
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            return sign * fact * p.imag() / M_PI;
        }
        case NoiseFamily::kHyperbolicSecant: {
            const double s = n.s();
            const double z = M_PI * (v - n.mu()) / (2.0 * s);
            const double e = std::exp(-std::abs(z));
            const double sech = 2.0 * e / (1.0 + e * e);
            const double tanh = std::tanh(z);
            const auto c = detail::sech_coeffs(k);
            double tot = 0.0;
            for (const auto& [ab, coef] : c)
                tot += coef * std::pow(sech, ab.first) * std::pow(tanh, ab.second);
            return tot / (2.0 * s) * std::pow(M_PI / (2.0 * s), k);
        }
        case NoiseFamily::kGamma:
            return detail::gamma_pdf_deriv(n.alpha(), n.theta(), v, k);
        case NoiseFamily::kNoncentralChiSq: {
            if (v <= 0.0) return 0.0;
            const auto w = ncx2_poisson_weights(n.delta());
            double tot = 0.0;
            for (size_t j = 0; j < w.size(); ++j)
                tot += w[j] * detail::gamma_pdf_deriv(0.5 * n.nu() + j, 2.0, v, k);
            return tot;
        }
        case NoiseFamily::kInverseGaussian: {
            if (v <= 0.0) return 0.0;
            const double mu = n.ig_mu(), lam = n.ig_lambda();
            // f^{(k)} = f * R_k(1/v) with R_{k+1} = R_k' + R_k h',
            // h'(v) = -3/(2v) - lam/(2 mu^2) + (lam/2) v^{-2}.
            const std::vector<double> hp{-lam / (2.0 * mu * mu), -1.5, lam / 2.0};
            std::vector<double> r = hp;
            for (int d = 1; d < k; ++d) {
                std::vector<double> nr(r.size() + 2, 0.0);
                for (size_t j = 0; j < r.size(); ++j) {
                    if (j > 0) nr[j + 1] -= static_cast<double>(j) * r[j];
                    for (size_t i = 0; i < hp.size(); ++i) nr[j + i] += r[j] * hp[i];
                }
                r = std::move(nr);
            }
            double poly = 0.0, p = 1.0;
            for (size_t j = 0; j < r.size(); ++j) {
                poly += r[j] * p;
                p /= v;
            }
            return pdf(n, v) * poly;
        }
        default:
            throw unsupported("density derivative unsupported for this family");
    }
}

// --------------------------------------------------------------------------
// Seeded samplers.
// --------------------------------------------------------------------------

namespace detail {

inline double gamma_sample(Rng& rng, double alpha, double theta) {
    if (alpha < 1.0) {
        const double u = rng.uniform();
        return gamma_sample(rng, alpha + 1.0, theta) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, vcb;
        do {
            x = rng.normal();
            vcb = 1.0 + c * x;
        } while (vcb <= 0.0);
        vcb = vcb * vcb * vcb;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * vcb * theta;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - vcb + std::log(vcb))) return d * vcb * theta;
    }
}

inline long poisson_sample(Rng& rng, double mean) {
    const double u = rng.uniform();
    double p = std::exp(-mean), cum = p;
    long k = 0;
    while (u > cum && k < 100000) {
        ++k;
        p *= mean / static_cast<double>(k);
        cum += p;
    }
    return k;
}

}  // namespace detail

inline double sample(const NoiseSpec& n, Rng& rng) {
    switch (n.family) {
        case NoiseFamily::kGaussian:
            return n.mu() + n.sigma() * rng.normal();
        case NoiseFamily::kGeneralizedLaplace: {
            const double g1 = detail::gamma_sample(rng, n.gl_lambda(), 1.0);
            const double g2 = detail::gamma_sample(rng, n.gl_lambda(), 1.0);
            return n.mu() + n.b() * (g1 - g2);
        }
        case NoiseFamily::kProductLaplace:
        case NoiseFamily::kLaplace:
            return n.mu() + n.b() * (rng.exponential() - rng.exponential());
        case NoiseFamily::kAsymmetricLaplace: {
            const double bm = n.b_minus(), bp = n.b_plus();
            const double u = rng.uniform();
            if (u < bm / (bm + bp)) return n.mu() - bm * rng.exponential();
            return n.mu() + bp * rng.exponential();
        }
        case NoiseFamily::kLogistic: {
            const double u = rng.uniform();
            return n.mu() + n.s() * std::log(u / (1.0 - u));
        }
        case NoiseFamily::kGumbel:
            return n.mu() - n.beta() * std::log(-std::log(rng.uniform()));
        case NoiseFamily::kCauchy:
            return n.mu() + n.gamma_scale() * std::tan(M_PI * (rng.uniform() - 0.5));
        case NoiseFamily::kHyperbolicSecant:
            return n.mu() + 2.0 * n.s() / M_PI * std::log(std::tan(M_PI * rng.uniform() / 2.0));
        case NoiseFamily::kGamma:
            return detail::gamma_sample(rng, n.alpha(), n.theta());
        case NoiseFamily::kNoncentralChiSq: {
            const long kk = detail::poisson_sample(rng, 0.5 * n.delta());
            return detail::gamma_sample(rng, 0.5 * n.nu() + static_cast<double>(kk), 2.0);
        }
        case NoiseFamily::kInverseGaussian: {
            // Michael-Schucany-Haas transformation.
            const double mu = n.ig_mu(), lam = n.ig_lambda();
            const double z = rng.normal();
            const double nu = z * z;
            const double x = mu + mu * mu * nu / (2.0 * lam) -
                             mu / (2.0 * lam) * std::sqrt(4.0 * mu * lam * nu + mu * mu * nu * nu);
            return rng.uniform() <= mu / (mu + x) ? x : mu * mu / x;
        }
    }
    throw domain_error("unknown noise family");
}

inline VectorXd sample_vec(const NoiseSpec& n, Rng& rng) {
    if (n.family != NoiseFamily::kProductLaplace) {
        VectorXd v(1);
        v << sample(n, rng);
        return v;
    }
    VectorXd v(n.dim);
    for (int j = 0; j < n.dim; ++j) v[j] = n.b() * (rng.exponential() - rng.exponential());
    return v;
}

}  // namespace dist
}  // namespace tweedie
