#pragma once

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "tweedie/core.hpp"
#include "tweedie/distributions.hpp"
#include "tweedie/numerics.hpp"

namespace tweedie {

// Evaluable observed marginal f_Y with derivatives, one-sided derivative and
// weighted integrals. Backends: exact prior*noise convolution, or a
// Gaussian-kernel KDE fit to raw samples (univariate).
class DensityModel {
   public:
    enum class Backend { kExact, kKde };

    Backend backend() const { return backend_; }
    int dim() const { return dim_; }
    double l1_bound() const { return 1.0; }
    int max_derivative_order() const { return max_order_; }
    const PriorSpec& prior() const { return prior_; }
    const NoiseSpec& noise() const { return noise_; }
    bool has_gauss_cov() const { return gauss_cov_.has_value(); }
    const MatrixXd& gauss_cov() const { return *gauss_cov_; }
    double bandwidth() const { return bandwidth_; }
    const std::vector<double>& samples() const { return samples_; }

    // f_Y(y), univariate.
    double operator()(double y) const { return deriv(y, 0); }

    // f_Y^{(k)}(y), univariate.
    double deriv(double y, int k) const {
        if (dim_ != 1) throw dimension_mismatch("scalar evaluation of multivariate model");
        if (k > max_order_)
            throw unsupported("derivative order beyond backend ceiling");
        if (backend_ == Backend::kKde) {
            double tot = 0.0;
            const double h = bandwidth_;
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            for (double x : samples_) {
                const double z = (y - x) / h;
                tot += numerics::hermite_he(k, z) * numerics::norm_pdf(z);
            }
            return sign * tot / (samples_.size() * std::pow(h, k + 1));
        }
        if (prior_.kind == PriorSpec::Kind::kAtomic) {
            double tot = 0.0;
            for (const auto& a : prior_.atoms)
                tot += a.weight * dist::pdf_deriv(noise_, y - a.location[0], k);
            return tot;
        }
        // Gaussian mixture prior.
        double tot = 0.0;
        for (const auto& c : prior_.components) {
            const double tau2 = c.cov(0, 0);
            if (noise_.family == NoiseFamily::kGaussian) {
                const double s2 = noise_.sigma() * noise_.sigma() + tau2;
                const double s = std::sqrt(s2);
                const double z = (y - c.mean[0] - noise_.mu()) / s;
                const double sign = (k % 2 == 0) ? 1.0 : -1.0;
                tot += c.weight * sign * std::pow(s, -k) * numerics::hermite_he(k, z) *
                       numerics::norm_pdf(z) / s;
            } else {
                const double tau = std::sqrt(tau2);
                const double m = c.mean[0];
                auto g = [&](double x) {
                    return dist::pdf_deriv(noise_, y - x, k) *
                           numerics::norm_pdf((x - m) / tau) / tau;
                };
                // The noise bump sits at x = y - mode; split there in case it
                // is much narrower than the component.
                numerics::QuadResult r = numerics::adaptive_integrate_split(
                    g, m - 14.0 * tau, m + 14.0 * tau,
                    {y - dist::mode_hint(noise_), y}, 1e-12, 1e-10);
                tot += c.weight * r.value;
            }
        }
        return tot;
    }

    // f_Y^{(k)}(y) for all k = 0..kmax in one pass (one Hermite recurrence
    // per mixture element).
    std::vector<double> derivs(double y, int kmax) const {
        if (dim_ != 1) throw dimension_mismatch("scalar evaluation of multivariate model");
        if (kmax > max_order_) throw unsupported("derivative order beyond backend ceiling");
        std::vector<double> out(kmax + 1, 0.0);
        auto accumulate_gaussian = [&](double center, double s, double weight) {
            const double z = (y - center) / s;
            const double base = weight * numerics::norm_pdf(z) / s;
            double h0 = 1.0, h1 = z;
            double spow = 1.0;
            for (int k = 0; k <= kmax; ++k) {
                const double he = (k == 0) ? 1.0 : h1;
                const double sign = (k % 2 == 0) ? 1.0 : -1.0;
                out[k] += sign * he * base / spow;
                spow *= s;
                if (k >= 1) {
                    const double h2 = z * h1 - k * h0;
                    h0 = h1;
                    h1 = h2;
                }
            }
        };
        if (backend_ == Backend::kKde) {
            for (double x : samples_) accumulate_gaussian(x, bandwidth_, 1.0 / samples_.size());
            return out;
        }
        if (prior_.kind == PriorSpec::Kind::kAtomic && noise_.family == NoiseFamily::kGaussian) {
            for (const auto& a : prior_.atoms)
                accumulate_gaussian(a.location[0] + noise_.mu(), noise_.sigma(), a.weight);
            return out;
        }
        if (prior_.kind == PriorSpec::Kind::kGaussianMixture &&
            noise_.family == NoiseFamily::kGaussian) {
            for (const auto& c : prior_.components)
                accumulate_gaussian(c.mean[0] + noise_.mu(),
                                    std::sqrt(noise_.sigma() * noise_.sigma() + c.cov(0, 0)),
                                    c.weight);
            return out;
        }
        for (int k = 0; k <= kmax; ++k) out[k] = deriv(y, k);
        return out;
    }

    // One-sided derivative D+ f_Y(a); closed form for Laplace-kinked exact
    // backends, the ordinary derivative for smooth ones.
    double right_deriv_at(double a) const {
        if (dim_ != 1) throw dimension_mismatch("right derivative is univariate");
        const bool kinked = backend_ == Backend::kExact &&
                            (noise_.family == NoiseFamily::kLaplace ||
                             noise_.family == NoiseFamily::kProductLaplace ||
                             noise_.family == NoiseFamily::kAsymmetricLaplace ||
                             noise_.family == NoiseFamily::kGeneralizedLaplace);
        if (!kinked) return deriv(a, 1);
        if (noise_.family == NoiseFamily::kGeneralizedLaplace)
            throw unsupported("right derivative not available for generalized Laplace noise");
        auto dplus = [&](double u) {
            if (noise_.family == NoiseFamily::kAsymmetricLaplace) {
                const double c = 1.0 / (noise_.b_minus() + noise_.b_plus());
                return u < 0.0 ? c * std::exp(u / noise_.b_minus()) / noise_.b_minus()
                               : -c * std::exp(-u / noise_.b_plus()) / noise_.b_plus();
            }
            const double b = noise_.b();
            const double f = 0.5 / b * std::exp(-std::abs(u) / b);
            return u < 0.0 ? f / b : -f / b;
        };
        if (prior_.kind == PriorSpec::Kind::kAtomic) {
            double tot = 0.0;
            for (const auto& at : prior_.atoms)
                tot += at.weight * dplus(a - at.location[0] - noise_.mu());
            return tot;
        }
        double tot = 0.0;  // continuous prior smooths the kink
        for (const auto& c : prior_.components) {
            const double tau = std::sqrt(c.cov(0, 0));
            const double m = c.mean[0];
            auto g = [&](double x) {
                return dplus(a - x) * numerics::norm_pdf((x - m) / tau) / tau;
            };
            numerics::QuadResult r = numerics::adaptive_integrate_split(
                g, m - 14.0 * tau, m + 14.0 * tau, {a}, 1e-12, 1e-10);
            tot += c.weight * r.value;
        }
        return tot;
    }

    // Points where the density carries localized mass; kernel integrals split
    // here so adaptive panels cannot overlook a narrow bump.
    std::vector<double> mass_landmarks() const {
        std::vector<double> out;
        if (backend_ == Backend::kKde) {
            std::vector<double> sorted = samples_;
            std::sort(sorted.begin(), sorted.end());
            for (double p : {0.0, 0.25, 0.5, 0.75, 1.0})
                out.push_back(sorted[static_cast<size_t>(p * (sorted.size() - 1))]);
            return out;
        }
        const double mode = gauss_cov_ ? 0.0 : dist::mode_hint(noise_);
        if (prior_.kind == PriorSpec::Kind::kAtomic) {
            for (const auto& a : prior_.atoms) {
                out.push_back(a.location[0] + mode);
                out.push_back(a.location[0]);  // support edge for one-sided noise
            }
        } else {
            for (const auto& c : prior_.components) {
                const double tau = std::sqrt(c.cov(0, 0));
                out.push_back(c.mean[0] + mode);
                out.push_back(c.mean[0] + mode - 4.0 * tau);
                out.push_back(c.mean[0] + mode + 4.0 * tau);
            }
        }
        return out;
    }

    // Landmark coordinates along one axis (multivariate atomic backends).
    std::vector<double> mass_landmarks_axis(int axis) const {
        std::vector<double> out;
        for (const auto& a : prior_.atoms) out.push_back(a.location[axis]);
        return out;
    }

    // Multivariate density value.
    double at(const VectorXd& y) const {
        if (y.size() != dim_) throw dimension_mismatch("evaluation point dimension mismatch");
        if (dim_ == 1 && !gauss_cov_) return deriv(y[0], 0);
        double tot = 0.0;
        if (gauss_cov_) {
            if (prior_.kind == PriorSpec::Kind::kAtomic) {
                for (const auto& a : prior_.atoms) tot += a.weight * mvn_pdf(y - a.location, *gauss_cov_);
            } else {
                for (const auto& c : prior_.components)
                    tot += c.weight * mvn_pdf(y - c.mean, *gauss_cov_ + c.cov);
            }
            return tot;
        }
        for (const auto& a : prior_.atoms)
            tot += a.weight * dist::pdf_vec(noise_, y - a.location);
        return tot;
    }

    // Gradient and Hessian, exact for Gaussian-covariance backends.
    VectorXd grad(const VectorXd& y) const {
        require_mvn_backend();
        VectorXd g = VectorXd::Zero(dim_);
        visit_mvn(y, [&](double w, const VectorXd& prec_dev, const MatrixXd&, double val) {
            g -= w * val * prec_dev;
        });
        return g;
    }

    MatrixXd hess(const VectorXd& y) const {
        require_mvn_backend();
        MatrixXd h = MatrixXd::Zero(dim_, dim_);
        visit_mvn(y, [&](double w, const VectorXd& prec_dev, const MatrixXd& prec, double val) {
            h += w * val * (prec_dev * prec_dev.transpose() - prec);
        });
        return h;
    }

    friend DensityModel exact_density(const PriorSpec& prior, const NoiseSpec& noise);
    friend DensityModel exact_density_mvn(const PriorSpec& prior, const MatrixXd& sigma);
    friend DensityModel kde_fit_fixed(std::vector<double> samples, double h);

   private:
    DensityModel() = default;

    static double mvn_pdf(const VectorXd& dev, const MatrixXd& cov) {
        Eigen::LLT<MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) throw domain_error("covariance not positive definite");
        const VectorXd half = llt.matrixL().solve(dev);
        double logdet = 0.0;
        for (int i = 0; i < cov.rows(); ++i) logdet += std::log(llt.matrixL()(i, i));
        const double d = static_cast<double>(cov.rows());
        return std::exp(-0.5 * half.squaredNorm() - logdet - 0.5 * d * std::log(2.0 * M_PI));
    }

    void require_mvn_backend() const {
        if (!gauss_cov_)
            throw unsupported("gradient/Hessian need the Gaussian-covariance exact backend");
    }

    template <class Visitor>
    void visit_mvn(const VectorXd& y, Visitor&& visit) const {
        if (y.size() != dim_) throw dimension_mismatch("evaluation point dimension mismatch");
        auto term = [&](const VectorXd& mean, const MatrixXd& cov, double w) {
            Eigen::LLT<MatrixXd> llt(cov);
            const MatrixXd prec = llt.solve(MatrixXd::Identity(dim_, dim_));
            const VectorXd dev = y - mean;
            visit(w, prec * dev, prec, mvn_pdf(dev, cov));
        };
        if (prior_.kind == PriorSpec::Kind::kAtomic) {
            for (const auto& a : prior_.atoms) term(a.location, *gauss_cov_, a.weight);
        } else {
            for (const auto& c : prior_.components) term(c.mean, *gauss_cov_ + c.cov, c.weight);
        }
    }

    Backend backend_ = Backend::kExact;
    int dim_ = 1;
    int max_order_ = 0;
    PriorSpec prior_;
    NoiseSpec noise_;
    std::optional<MatrixXd> gauss_cov_;
    std::vector<double> samples_;
    double bandwidth_ = 0.0;
};

inline DensityModel exact_density(const PriorSpec& prior, const NoiseSpec& noise) {
    if (prior.kind == PriorSpec::Kind::kSamplesOnly)
        throw unsupported("exact_density needs an atomic or Gaussian-mixture prior; use kde_fit");
    const int noise_dim = noise.family == NoiseFamily::kProductLaplace ? noise.dim : 1;
    if (prior.dim != noise_dim) throw dimension_mismatch("prior/noise dimension mismatch");
    if (noise_dim > 1 && prior.kind != PriorSpec::Kind::kAtomic)
        throw unsupported("multivariate exact densities need atomic priors");
    DensityModel m;
    m.backend_ = DensityModel::Backend::kExact;
    m.dim_ = noise_dim;
    m.prior_ = prior;
    m.noise_ = validate_noise(noise);
    m.max_order_ = dist::max_deriv_order(noise);
    return m;
}

// Exact backend with multivariate Gaussian(0, Sigma) noise.
inline DensityModel exact_density_mvn(const PriorSpec& prior, const MatrixXd& sigma) {
    if (prior.kind == PriorSpec::Kind::kSamplesOnly)
        throw unsupported("exact_density_mvn needs an atomic or Gaussian-mixture prior");
    if (sigma.rows() != prior.dim || sigma.cols() != prior.dim)
        throw dimension_mismatch("noise covariance dimension mismatch");
    Eigen::LLT<MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw domain_error("noise covariance must be positive definite");
    DensityModel m;
    m.backend_ = DensityModel::Backend::kExact;
    m.dim_ = prior.dim;
    m.prior_ = prior;
    m.gauss_cov_ = sigma;
    if (prior.dim == 1) m.noise_ = NoiseSpec::gaussian(0.0, std::sqrt(sigma(0, 0)));
    m.max_order_ = prior.dim == 1 ? numerics::kMaxHermiteOrder : 0;
    return m;
}

struct BandwidthRule {
    enum class Kind { kSilverman, kFixed } kind = Kind::kSilverman;
    double h = 0.0;
    static BandwidthRule silverman() { return {}; }
    static BandwidthRule fixed(double h) { return {Kind::kFixed, h}; }
};

inline DensityModel kde_fit_fixed(std::vector<double> samples, double h) {
    if (samples.size() < 10) throw too_few_samples("kde_fit needs at least 10 samples");
    if (!(h > 0.0)) throw domain_error("kde bandwidth must be positive");
    DensityModel m;
    m.backend_ = DensityModel::Backend::kKde;
    m.dim_ = 1;
    m.samples_ = std::move(samples);
    m.bandwidth_ = h;
    m.max_order_ = numerics::kMaxHermiteOrder;
    return m;
}

// Gaussian-kernel KDE; Silverman bandwidth 0.9 min(sd, iqr/1.34) n^{-1/5}.
inline DensityModel kde_fit(const std::vector<double>& samples,
                            BandwidthRule rule = BandwidthRule::silverman()) {
    if (samples.size() < 10) throw too_few_samples("kde_fit needs at least 10 samples");
    if (rule.kind == BandwidthRule::Kind::kFixed) return kde_fit_fixed(samples, rule.h);
    const size_t n = samples.size();
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1));
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double p) {
        const double pos = p * (n - 1);
        const size_t i = static_cast<size_t>(pos);
        const double frac = pos - i;
        return i + 1 < n ? sorted[i] * (1.0 - frac) + sorted[i + 1] * frac : sorted[i];
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    const double spread = std::min(sd, iqr / 1.34);
    const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
    if (!(h > 0.0)) throw domain_error("degenerate sample spread; use a fixed bandwidth");
    return kde_fit_fixed(samples, h);
}

inline double density_deriv(const DensityModel& m, double y, int k) { return m.deriv(y, k); }

inline double right_deriv(const DensityModel& m, double a) { return m.right_deriv_at(a); }

template <class Kernel>
inline numerics::QuadResult integrate_kernel(const DensityModel& m, Kernel&& kernel, double lo,
                                             double hi, double tol) {
    auto g = [&](double z) { return kernel(z) * m(z); };
    return numerics::adaptive_integrate_split(g, lo, hi, m.mass_landmarks(), tol, tol);
}

}  // namespace tweedie
