#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <utility>
#include <vector>

#include "tweedie/core.hpp"
#include "tweedie/densities.hpp"
#include "tweedie/numerics.hpp"

namespace tweedie {

// ---------------------------------------------------------------------------
// Heteroskedastic sequence model: atomic joint law for (X, Sigma).
// ---------------------------------------------------------------------------

struct HeteroAtom {
    VectorXd x;
    MatrixXd sigma;  // noise covariance attached to this atom (1x1 when d=1)
    double weight;
};

struct HeteroJointSpec {
    int dim = 1;
    std::vector<HeteroAtom> atoms;

    static HeteroJointSpec scalar(const std::vector<std::tuple<double, double, double>>& rows) {
        // rows of (x, sigma^2, weight)
        HeteroJointSpec j;
        j.dim = 1;
        for (const auto& [x, s2, w] : rows) {
            VectorXd loc(1);
            loc << x;
            MatrixXd cov(1, 1);
            cov << s2;
            j.atoms.push_back({loc, cov, w});
        }
        j.validate();
        return j;
    }

    static HeteroJointSpec vector(std::vector<HeteroAtom> atoms) {
        HeteroJointSpec j;
        if (atoms.empty()) throw domain_error("hetero joint needs at least one atom");
        j.dim = static_cast<int>(atoms.front().x.size());
        j.atoms = std::move(atoms);
        j.validate();
        return j;
    }

    void validate() {
        if (atoms.empty()) throw domain_error("hetero joint needs at least one atom");
        double total = 0.0;
        for (const auto& a : atoms) {
            if (!(a.weight > 0.0)) throw domain_error("hetero joint weights must be positive");
            if (a.x.size() != dim || a.sigma.rows() != dim || a.sigma.cols() != dim)
                throw dimension_mismatch("hetero joint dimension mismatch");
            Eigen::LLT<MatrixXd> llt(a.sigma);
            if (llt.info() != Eigen::Success)
                throw domain_error("hetero joint covariance must be positive definite");
            total += a.weight;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw domain_error("hetero joint weights must sum to 1 within 1e-12");
        for (auto& a : atoms) a.weight /= total;
    }
};

// Condition the joint on Sigma = Sigma0 (atomic conditioning): returns the
// exact conditional marginal f_{Y|Sigma}( . |Sigma0) and the conditional
// prior P_{X|Sigma=Sigma0}.
inline std::pair<DensityModel, PriorSpec> hetero_condition(const HeteroJointSpec& joint,
                                                           const MatrixXd& sigma0) {
    if (sigma0.rows() != joint.dim || sigma0.cols() != joint.dim)
        throw dimension_mismatch("conditioning covariance dimension mismatch");
    std::vector<Atom> atoms;
    double mass = 0.0;
    for (const auto& a : joint.atoms) {
        if ((a.sigma - sigma0).lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + sigma0.norm())) {
            atoms.push_back({a.x, a.weight});
            mass += a.weight;
        }
    }
    if (mass <= 0.0) throw no_mass("conditioning value has zero probability in the joint");
    for (auto& a : atoms) a.weight /= mass;
    PriorSpec prior = PriorSpec::atomic_vec(std::move(atoms));
    if (joint.dim == 1)
        return {exact_density(prior, NoiseSpec::gaussian(0.0, std::sqrt(sigma0(0, 0)))), prior};
    return {exact_density_mvn(prior, sigma0), prior};
}

inline std::pair<DensityModel, PriorSpec> hetero_condition(const HeteroJointSpec& joint,
                                                           double sigma0_sq) {
    MatrixXd s(1, 1);
    s << sigma0_sq;
    return hetero_condition(joint, s);
}

// ---------------------------------------------------------------------------
// Table 3 functionals under (conditional) Gaussian noise, d = 1.
// ---------------------------------------------------------------------------

namespace detail {

// H_n(a, s2) = E[(a + s Z)^n], the Gaussian moment polynomial.
inline double gauss_moment_poly(int n, double a, double s2) {
    double tot = 0.0;
    double coef = 1.0;  // n! / (2^j j! (n-2j)!) accumulated below
    // iterate j with running coefficient: start j=0 term coefficient 1 * a^n
    for (int j = 0; 2 * j <= n; ++j) {
        if (j > 0) coef *= static_cast<double>((n - 2 * j + 2) * (n - 2 * j + 1)) / (2.0 * j);
        tot += coef * std::pow(s2, j) * std::pow(a, n - 2 * j);
    }
    return tot;
}

inline double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Sum over r of C(k,r) s^{2r} H_{k-r}(center, s^2) f^{(r)}(y) / f(y).
inline double moment_formula(int k, double center, double s2, const std::vector<double>& derivs) {
    const double f = derivs[0];
    double tot = 0.0;
    double s2r = 1.0;
    for (int r = 0; r <= k; ++r) {
        tot += binom(k, r) * s2r * gauss_moment_poly(k - r, center, s2) * derivs[r] / f;
        s2r *= s2;
    }
    return tot;
}

}  // namespace detail

inline constexpr int kMaxMomentOrder = 10;
inline constexpr int kMaxEvenRiskOrder = 5;

inline EvalResult gauss_functional(double sigma_sq, const DensityModel& model, double y,
                                   const FunctionalSpec& fspec) {
    if (model.dim() != 1) throw dimension_mismatch("gauss_functional is univariate");
    if (!(sigma_sq > 0.0)) throw domain_error("sigma^2 must be positive");
    EvalResult out;
    const double s2 = sigma_sq;
    auto needs = [&](int order) {
        std::vector<double> d = model.derivs(y, order);
        require_density(d[0]);
        return d;
    };
    switch (fspec.target) {
        case Target::kMean: {
            const auto d = needs(1);
            out.value = y + s2 * d[1] / d[0];
            out.density_at_point = d[0];
            return out;
        }
        case Target::kSecondMoment: {
            const auto d = needs(2);
            out.value = y * y + s2 + 2.0 * y * s2 * d[1] / d[0] + s2 * s2 * d[2] / d[0];
            out.density_at_point = d[0];
            return out;
        }
        case Target::kVariance: {
            const auto d = needs(2);
            const double score = d[1] / d[0];
            out.value = s2 + s2 * s2 * (d[2] / d[0] - score * score);
            out.density_at_point = d[0];
            return out;
        }
        case Target::kMgf: {
            const double t = fspec.t_scalar();
            const double fy = require_density(model(y));
            out.value = std::exp(t * y + 0.5 * s2 * t * t) * model(y + s2 * t) / fy;
            out.density_at_point = fy;
            return out;
        }
        case Target::kRawMoment: {
            if (fspec.k < 0 || fspec.k > kMaxMomentOrder)
                throw unsupported("raw moment order beyond ceiling");
            const auto d = needs(fspec.k);
            out.value = detail::moment_formula(fspec.k, y, s2, d);
            out.density_at_point = d[0];
            return out;
        }
        case Target::kCenteredMoment: {
            if (fspec.k < 0 || fspec.k > kMaxMomentOrder)
                throw unsupported("centered moment order beyond ceiling");
            const auto d = needs(std::max(fspec.k, 1));
            const double center = -s2 * d[1] / d[0];  // y minus the posterior mean
            out.value = detail::moment_formula(fspec.k, center, s2, d);
            out.density_at_point = d[0];
            return out;
        }
        case Target::kSquaredRisk: {
            const auto d = needs(2);
            out.value = detail::moment_formula(2, y - fspec.a, s2, d);
            out.density_at_point = d[0];
            return out;
        }
        case Target::kEvenRisk: {
            if (fspec.m < 1 || fspec.m > kMaxEvenRiskOrder)
                throw unsupported("even-risk order beyond ceiling");
            const auto d = needs(2 * fspec.m);
            out.value = detail::moment_formula(2 * fspec.m, y - fspec.a, s2, d);
            out.density_at_point = d[0];
            return out;
        }
        default:
            throw unsupported("gauss_functional: use gauss_cdf / gauss_hinge_abs for " +
                              fspec.name());
    }
}

// ---------------------------------------------------------------------------
// Posterior CDF / hinge / absolute risk via the Hermite approximation series.
// ---------------------------------------------------------------------------

namespace detail {

// Late increments exceeding mid-series ones mean the partial sums stopped
// settling: the truncated series is non-Cauchy, not merely slow.
inline void check_series_cauchy(const std::vector<double>& inc, double sum) {
    if (inc.size() < 10) return;
    double tail = 0.0, mid = 0.0;
    for (size_t i = inc.size() - 5; i < inc.size(); ++i) tail = std::max(tail, inc[i]);
    for (size_t i = inc.size() / 2 - 2; i < inc.size() / 2 + 3; ++i) mid = std::max(mid, inc[i]);
    if (tail > 10.0 * mid && tail > 1e-9 * (1.0 + std::abs(sum)))
        throw series_divergence("partial sums non-Cauchy at the largest truncation order");
}

// Polynomial extrapolation (Neville) to h = 0.
inline double extrapolate_to_zero(std::vector<double> h, std::vector<double> v) {
    const size_t m = h.size();
    for (size_t level = 1; level < m; ++level)
        for (size_t i = 0; i + level < m; ++i)
            v[i] = (0.0 - h[i + level]) * (v[i] - v[i + 1]) / (h[i] - h[i + level]) + v[i + 1];
    return v[0];
}

}  // namespace detail

inline const std::vector<double>& default_n_schedule() {
    static const std::vector<double> s{1e2, 1e3, 1e4};
    return s;
}

// Posterior CDF P[X <= a | Y = y] via the smoothed-indicator series evaluated
// along the n-schedule; extrapolates n -> infinity in powers of n^{-1/2} and
// reports converged=false when successive estimates disagree beyond 10*tol.
inline EvalResult gauss_cdf(double sigma_sq, const DensityModel& model, double y, double a,
                            int K = 60, const std::vector<double>& n_schedule = default_n_schedule(),
                            double tol = 1e-6) {
    if (K < 2 || K > model.max_derivative_order())
        throw unsupported("truncation order outside model support");
    if (n_schedule.empty()) throw domain_error("empty n schedule");
    const std::vector<double> derivs = model.derivs(y, K);
    const double fy = require_density(derivs[0]);
    std::vector<double> hs, vals;
    long terms = 0;
    for (double n : n_schedule) {
        const double s_n = std::sqrt(sigma_sq + 1.0 / (n * n));
        const double rho_n = sigma_sq / s_n;
        const double q_n = (a + 1.0 / std::sqrt(n) - y) / s_n;
        double inv_fact = 1.0;
        double rho_pow = 1.0;
        double sum = 0.0;
        std::vector<double> inc;
        for (int k = 0; k <= K; ++k) {
            if (k > 0) {
                inv_fact /= k;
                rho_pow *= rho_n;
            }
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            const double term =
                sign * inv_fact * rho_pow * numerics::phi_deriv(k, q_n) * derivs[k];
            sum += term;
            inc.push_back(std::abs(term));
        }
        if (!std::isfinite(sum)) throw series_divergence("series produced non-finite value");
        detail::check_series_cauchy(inc, sum);
        terms = K + 1;
        hs.push_back(1.0 / std::sqrt(n));
        vals.push_back(sum / fy);
    }
    EvalResult out;
    out.density_at_point = fy;
    out.series_terms_used = terms;
    if (vals.size() == 1) {
        out.value = vals[0];
        return out;
    }
    std::vector<double> h2(hs.begin(), hs.end() - 1), v2(vals.begin(), vals.end() - 1);
    const double prev = detail::extrapolate_to_zero(h2, v2);
    const double last = detail::extrapolate_to_zero(hs, vals);
    out.value = last;
    out.quadrature_error_estimate = std::abs(last - prev);
    out.converged = std::abs(last - prev) < 10.0 * tol;
    return out;
}

enum class LossKind { kHinge, kAbsolute };

// Posterior hinge loss E[(X-a)+ | Y=y] or absolute risk E[|X-a| | Y=y]:
// closed leading terms plus the order >= 2 correction series.
inline EvalResult gauss_hinge_abs(double sigma_sq, const DensityModel& model, double y, double a,
                                  LossKind kind, int K = 60,
                                  const std::vector<double>& n_schedule = default_n_schedule(),
                                  double tol = 1e-6) {
    if (K < 2 || K > model.max_derivative_order())
        throw unsupported("truncation order outside model support");
    if (n_schedule.empty()) throw domain_error("empty n schedule");
    const double sigma = std::sqrt(sigma_sq);
    const std::vector<double> derivs = model.derivs(y, K);
    const double fy = require_density(derivs[0]);
    const double q = (a - y) / sigma;
    const double phi_q = numerics::norm_pdf(q);
    const double Phi_q = numerics::norm_cdf(q);
    const double score = derivs[1] / fy;
    double lead;
    if (kind == LossKind::kHinge)
        lead = sigma * phi_q + (y - a) * (1.0 - Phi_q) + sigma_sq * (1.0 - Phi_q) * score;
    else
        lead = 2.0 * sigma * phi_q + (a - y) * (2.0 * Phi_q - 1.0) +
               sigma_sq * (1.0 - 2.0 * Phi_q) * score;
    const double corr_scale = kind == LossKind::kHinge ? 1.0 : 2.0;
    std::vector<double> hs, vals;
    long terms = 0;
    for (double n : n_schedule) {
        const double s_n = std::sqrt(sigma_sq + 1.0 / (n * n));
        const double rho_n = sigma_sq / s_n;
        const double q_n = (a + 1.0 / std::sqrt(n) - y) / s_n;
        double inv_fact = 1.0;
        double rho_pow = rho_n;  // enters at k=2 below
        double corr = 0.0;
        std::vector<double> inc;
        for (int k = 2; k <= K; ++k) {
            inv_fact /= k;
            rho_pow *= rho_n;
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            const double term = sign * inv_fact * rho_pow * s_n *
                                numerics::phi_deriv(k - 1, q_n) * derivs[k];
            corr += term;
            inc.push_back(std::abs(term));
        }
        if (!std::isfinite(corr)) throw series_divergence("series produced non-finite value");
        detail::check_series_cauchy(inc, corr);
        terms = K + 1;
        hs.push_back(1.0 / std::sqrt(n));
        vals.push_back(lead + corr_scale * corr / fy);
    }
    EvalResult out;
    out.density_at_point = fy;
    out.series_terms_used = terms;
    if (vals.size() == 1) {
        out.value = vals[0];
        return out;
    }
    std::vector<double> h2(hs.begin(), hs.end() - 1), v2(vals.begin(), vals.end() - 1);
    const double prev = detail::extrapolate_to_zero(h2, v2);
    const double last = detail::extrapolate_to_zero(hs, vals);
    out.value = last;
    out.quadrature_error_estimate = std::abs(last - prev);
    out.converged = std::abs(last - prev) < 10.0 * tol;
    return out;
}

// ---------------------------------------------------------------------------
// Multivariate Gaussian-noise functionals.
// ---------------------------------------------------------------------------

enum class MvTarget { kMean, kCov, kMgf };

inline EvalResult gauss_multivariate(const MatrixXd& sigma0, const DensityModel& model,
                                     const VectorXd& y, MvTarget which,
                                     const VectorXd& t = VectorXd()) {
    const int d = model.dim();
    if (d > 5) throw unsupported("multivariate Gaussian functionals support d <= 5");
    if (sigma0.rows() != d || sigma0.cols() != d || y.size() != d)
        throw dimension_mismatch("gauss_multivariate dimension mismatch");
    if (!model.has_gauss_cov() || (model.gauss_cov() - sigma0).lpNorm<Eigen::Infinity>() > 1e-12)
        throw unsupported("model must carry the Gaussian(0, Sigma0) exact backend");
    const double fy = require_density(model.at(y));
    EvalResult out;
    out.density_at_point = fy;
    switch (which) {
        case MvTarget::kMean: {
            out.value = VectorXd(y + sigma0 * (model.grad(y) / fy));
            return out;
        }
        case MvTarget::kCov: {
            const VectorXd score = model.grad(y) / fy;
            const MatrixXd hess_log = model.hess(y) / fy - score * score.transpose();
            MatrixXd cov = sigma0 + sigma0 * hess_log * sigma0;
            cov = 0.5 * (cov + cov.transpose()).eval();  // symmetrize roundoff
            out.value = cov;
            return out;
        }
        case MvTarget::kMgf: {
            if (t.size() != d) throw dimension_mismatch("MGF argument dimension mismatch");
            const double expo = t.dot(y) + 0.5 * t.dot(sigma0 * t);
            out.value = std::exp(expo) * model.at(y + sigma0 * t) / fy;
            return out;
        }
    }
    throw domain_error("unknown multivariate target");
}

}  // namespace tweedie
