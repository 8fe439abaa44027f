#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tweedie/core.hpp"
#include "tweedie/densities.hpp"
#include "tweedie/numerics.hpp"

namespace tweedie {

// ---------------------------------------------------------------------------
// Posterior functionals after a conventional product-Laplace release,
// d = 1. All correction terms are exponential-kernel integrals of f_Y split
// at the sign kink.
// ---------------------------------------------------------------------------

inline EvalResult lm_functional_1d(double b, const DensityModel& model, double y,
                                   const FunctionalSpec& fspec, double tol = 1e-8) {
    if (!(b > 0.0)) throw domain_error("Laplace scale must be positive");
    if (model.dim() != 1) throw dimension_mismatch("lm_functional_1d is univariate");
    const double fy = require_density(model(y));
    const double abs_tol = std::max(tol * fy / 4.0, 1e-305);
    const double rel_tol = tol / 4.0;
    numerics::Tally tally;
    const std::vector<double> landmarks = model.mass_landmarks();
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
    auto I = [&](auto&& g, double lo, double hi, const std::vector<double>& cut_list) {
        return tally.add(
            numerics::adaptive_integrate_split(g, lo, hi, cut_list, abs_tol, rel_tol));
    };
    auto i_plus = [&] {
        return I([&](double u) { return std::exp(-u / b) * model(y + u); }, 0.0, numerics::kInf,
                 cuts(+1));
    };
    auto i_minus = [&] {
        return I([&](double u) { return std::exp(-u / b) * model(y - u); }, 0.0, numerics::kInf,
                 cuts(-1));
    };
    auto i_second = [&] {
        return I([&](double u) {
            return (2.0 * u - b) * std::exp(-u / b) * (model(y + u) + model(y - u));
        }, 0.0, numerics::kInf, cuts_both());
    };
    // int_{min(0,a-y)}^{max(0,a-y)} e^{-|u|/b} f(y+u) du; the interval never
    // crosses the kink at 0.
    auto i_mid = [&](double a) {
        const double lo = std::min(0.0, a - y), hi = std::max(0.0, a - y);
        std::vector<double> mid_cuts;
        for (double L : landmarks) mid_cuts.push_back(L - y);
        return I([&](double u) { return std::exp(-std::abs(u) / b) * model(y + u); }, lo, hi,
                 mid_cuts);
    };

    EvalResult out;
    out.density_at_point = fy;
    double value = 0.0;
    switch (fspec.target) {
        case Target::kMean:
            value = y + (i_plus() - i_minus()) / fy;
            break;
        case Target::kSecondMoment: {
            const double i1 = i_plus() - i_minus();
            value = y * y + 2.0 * y * i1 / fy + i_second() / fy;
            break;
        }
        case Target::kVariance: {
            const double i1 = i_plus() - i_minus();
            value = i_second() / fy - (i1 / fy) * (i1 / fy);
            break;
        }
        case Target::kSquaredRisk: {
            const double i1 = i_plus() - i_minus();
            value = (y - fspec.a) * (y - fspec.a) + 2.0 * (y - fspec.a) * i1 / fy +
                    i_second() / fy;
            break;
        }
        case Target::kMgf: {
            const double t = fspec.t_scalar();
            if (std::abs(t) >= 1.0 / b)
                throw mgf_domain("product-Laplace MGF requires |t| < 1/b");
            const double jp = I(
                [&](double u) {
                    return (t - 0.5 * b * t * t) * std::exp((t - 1.0 / b) * u) * model(y + u);
                },
                0.0, numerics::kInf, cuts(+1));
            const double jm = I(
                [&](double u) {
                    return (-t - 0.5 * b * t * t) * std::exp(-(t + 1.0 / b) * u) * model(y - u);
                },
                0.0, numerics::kInf, cuts(-1));
            value = std::exp(t * y) * (1.0 + (jp + jm) / fy);
            break;
        }
        case Target::kCdf: {
            const double a = fspec.a;
            const double fa = model(a);
            const double dplus = model.right_deriv_at(a);
            if (a <= y)
                value = std::exp(-(y - a) / b) * (fa - b * dplus) / (2.0 * fy);
            else
                value = 1.0 - std::exp(-(a - y) / b) * (fa + b * dplus) / (2.0 * fy);
            break;
        }
        case Target::kHingeLoss: {
            const double a = fspec.a;
            value = std::max(y - a, 0.0) +
                    (i_plus() - i_mid(a) - 0.5 * b * std::exp(-std::abs(y - a) / b) * model(a)) /
                        fy;
            break;
        }
        case Target::kPinballLoss: {
            const double a = fspec.a, tau = fspec.tau;
            value = tau * std::max(y - a, 0.0) + (1.0 - tau) * std::max(a - y, 0.0) +
                    (tau * i_plus() + (1.0 - tau) * i_minus() - i_mid(a) -
                     0.5 * b * std::exp(-std::abs(y - a) / b) * model(a)) /
                        fy;
            break;
        }
        case Target::kAbsoluteRisk: {
            const double a = fspec.a;
            value = std::abs(y - a) +
                    (i_plus() + i_minus() - 2.0 * i_mid(a) -
                     b * std::exp(-std::abs(y - a) / b) * model(a)) /
                        fy;
            break;
        }
        default:
            throw unsupported("Laplace mechanism does not support " + fspec.name());
    }
    out.value = value;
    out.quadrature_error_estimate = tally.err / fy;
    return out;
}

// ---------------------------------------------------------------------------
// Multivariate extensions: mean vector, covariance matrix, subset-MGF.
// ---------------------------------------------------------------------------

namespace detail {

// One-dimensional line integral of kernel(u) f(y + u e_j) over u in R,
// split at the kink and at the prior's coordinates along the axis.
template <class Kernel>
inline double line_integral(const DensityModel& model, const VectorXd& y, int axis,
                            Kernel&& kernel, double abs_tol, double rel_tol,
                            numerics::Tally& tally) {
    VectorXd z = y;
    auto g = [&](double u) {
        z[axis] = y[axis] + u;
        return kernel(u) * model.at(z);
    };
    std::vector<double> cuts;
    for (double L : model.mass_landmarks_axis(axis)) cuts.push_back(L - y[axis]);
    const double up = tally.add(
        numerics::adaptive_integrate_split(g, 0.0, numerics::kInf, cuts, abs_tol, rel_tol));
    const double dn = tally.add(
        numerics::adaptive_integrate_split(g, -numerics::kInf, 0.0, cuts, abs_tol, rel_tol));
    return up + dn;
}

}  // namespace detail

inline void require_product_laplace(const DensityModel& model, double b) {
    if (model.backend() != DensityModel::Backend::kExact ||
        model.noise().family != NoiseFamily::kProductLaplace ||
        model.prior().kind != PriorSpec::Kind::kAtomic)
        throw unsupported("multivariate Laplace-mechanism formulas need an exact atomic "
                          "product-Laplace model");
    if (std::abs(model.noise().b() - b) > 1e-12) throw domain_error("scale mismatch with model");
}

inline EvalResult lm_mean_vec(double b, const DensityModel& model, const VectorXd& y,
                              double tol = 1e-8) {
    require_product_laplace(model, b);
    const int d = model.dim();
    if (d > 5) throw unsupported("lm_mean_vec supports d <= 5");
    if (y.size() != d) throw dimension_mismatch("evaluation point dimension mismatch");
    const double fy = require_density(model.at(y));
    const double abs_tol = std::max(tol * fy / 4.0, 1e-305);
    numerics::Tally tally;
    VectorXd mean(d);
    for (int j = 0; j < d; ++j) {
        const double corr = detail::line_integral(
            model, y, j,
            [&](double u) { return (u > 0.0 ? 1.0 : -1.0) * std::exp(-std::abs(u) / b); },
            abs_tol, tol / 4.0, tally);
        mean[j] = y[j] + corr / fy;
    }
    EvalResult out;
    out.value = mean;
    out.density_at_point = fy;
    out.quadrature_error_estimate = tally.err / fy;
    return out;
}

inline EvalResult lm_cov(double b, const DensityModel& model, const VectorXd& y,
                         double tol = 1e-8) {
    require_product_laplace(model, b);
    const int d = model.dim();
    if (d > 3) throw unsupported("lm_cov supports d <= 3");
    if (y.size() != d) throw dimension_mismatch("evaluation point dimension mismatch");
    const double fy = require_density(model.at(y));
    const double axis_tol = tol / std::sqrt(2.0);
    const double abs_tol = std::max(axis_tol * fy / 4.0, 1e-305);
    numerics::Tally tally;

    VectorXd corr(d);  // E[X_j | y] - y_j
    for (int j = 0; j < d; ++j)
        corr[j] = detail::line_integral(
                      model, y, j,
                      [&](double u) { return (u > 0.0 ? 1.0 : -1.0) * std::exp(-std::abs(u) / b); },
                      abs_tol, axis_tol / 4.0, tally) /
                  fy;

    MatrixXd cov(d, d);
    for (int j = 0; j < d; ++j) {
        const double diag = detail::line_integral(
            model, y, j,
            [&](double u) { return (2.0 * std::abs(u) - b) * std::exp(-std::abs(u) / b); },
            abs_tol, axis_tol / 4.0, tally);
        cov(j, j) = diag / fy - corr[j] * corr[j];
    }
    for (int j = 0; j < d; ++j) {
        for (int k = j + 1; k < d; ++k) {
            // Tensorized adaptive quadrature over the four sign quadrants.
            double eta = 0.0;
            VectorXd z = y;
            for (int su : {-1, 1}) {
                for (int sv : {-1, 1}) {
                    std::vector<double> ucuts, vcuts;
                    for (double L : model.mass_landmarks_axis(j))
                        if (su * (L - y[j]) > 0.0) ucuts.push_back(su * (L - y[j]));
                    for (double L : model.mass_landmarks_axis(k))
                        if (sv * (L - y[k]) > 0.0) vcuts.push_back(sv * (L - y[k]));
                    auto outer = [&](double u) {
                        auto inner = [&](double v) {
                            z[j] = y[j] + su * u;
                            z[k] = y[k] + sv * v;
                            return std::exp(-(u + v) / b) * model.at(z);
                        };
                        return numerics::adaptive_integrate_split(inner, 0.0, numerics::kInf,
                                                                  vcuts, abs_tol,
                                                                  axis_tol / 4.0)
                            .value;
                    };
                    eta += su * sv *
                           tally.add(numerics::adaptive_integrate_split(
                               outer, 0.0, numerics::kInf, ucuts, abs_tol, axis_tol / 4.0));
                }
            }
            const double value = eta / fy - corr[j] * corr[k];
            cov(j, k) = value;
            cov(k, j) = value;  // shared integral, symmetric by construction
        }
    }
    EvalResult out;
    out.value = cov;
    out.density_at_point = fy;
    out.quadrature_error_estimate = tally.err / fy + axis_tol;
    return out;
}

inline EvalResult lm_mgf(double b, const DensityModel& model, const VectorXd& y, const VectorXd& t,
                         double tol = 1e-8) {
    require_product_laplace(model, b);
    const int d = model.dim();
    if (d > 3) throw unsupported("lm_mgf supports d <= 3 (2^d subset integrals)");
    if (y.size() != d || t.size() != d)
        throw dimension_mismatch("evaluation point dimension mismatch");
    if (t.lpNorm<Eigen::Infinity>() >= 1.0 / b)
        throw mgf_domain("product-Laplace MGF requires ||t||_inf < 1/b");
    const double fy = require_density(model.at(y));
    numerics::Tally tally;
    // Coordinate factor: (t_j sgn(u) - b t_j^2/2) e^{t_j u - |u|/b}.
    auto factor = [&](int j, double u) {
        const double tj = t[j];
        return (tj * (u > 0.0 ? 1.0 : -1.0) - 0.5 * b * tj * tj) *
               std::exp(tj * u - std::abs(u) / b);
    };
    double total = fy;  // empty-subset term
    for (int mask = 1; mask < (1 << d); ++mask) {
        std::vector<int> dims;
        for (int j = 0; j < d; ++j)
            if (mask & (1 << j)) dims.push_back(j);
        const double axis_tol = tol / std::sqrt(static_cast<double>(dims.size()));
        const double abs_tol = std::max(axis_tol * fy / 4.0, 1e-305);
        VectorXd z = y;
        // Recursive orthant-split integration over the subset coordinates.
        std::function<double(size_t)> recurse = [&](size_t idx) -> double {
            if (idx == dims.size()) return model.at(z);
            const int j = dims[idx];
            double tot = 0.0;
            for (int sgn : {-1, 1}) {
                std::vector<double> cuts;
                for (double L : model.mass_landmarks_axis(j))
                    if (sgn * (L - y[j]) > 0.0) cuts.push_back(sgn * (L - y[j]));
                auto g = [&](double u) {
                    z[j] = y[j] + sgn * u;
                    const double inner = recurse(idx + 1);
                    z[j] = y[j];
                    return factor(j, sgn * u) * inner;
                };
                numerics::QuadResult r = numerics::adaptive_integrate_split(
                    g, 0.0, numerics::kInf, cuts, abs_tol, axis_tol / 4.0);
                if (idx == 0) tally.add(r);
                tot += r.value;
            }
            return tot;
        };
        total += recurse(0);
    }
    EvalResult out;
    out.value = std::exp(t.dot(y)) * total / fy;
    out.density_at_point = fy;
    out.quadrature_error_estimate = tally.err / fy;
    return out;
}

}  // namespace tweedie
