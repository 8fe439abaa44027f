#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tweedie/core.hpp"
#include "tweedie/densities.hpp"
#include "tweedie/gaussian.hpp"
#include "tweedie/laplace_mech.hpp"
#include "tweedie/noise_catalog.hpp"
#include "tweedie/oracle.hpp"

namespace tweedie {

struct ValidationCase {
    std::string label;
    PriorSpec prior;
    NoiseSpec noise;
    FunctionalSpec fspec;
    std::vector<double> y_grid;
    double tol = 1e-6;
    std::optional<HeteroJointSpec> joint;  // heteroskedastic cases
    double hetero_sigma_sq = 0.0;
    std::vector<double> oracle_values;  // optional explicit (analytic) oracle per y
};

struct CaseRecord {
    std::string family;
    std::string functional;
    double y = 0.0;
    double formula = 0.0;
    double oracle = 0.0;
    double abs_error = 0.0;
    double tol = 0.0;
    bool pass = false;
    std::string message;  // set when evaluation threw
};

struct OracleReport {
    std::string suite;
    std::uint64_t seed = 0;
    std::vector<CaseRecord> records;
    std::map<std::string, double> max_abs_error_by_family;
    std::optional<double> max_abs_error;

    bool all_pass() const {
        for (const auto& r : records)
            if (!r.pass) return false;
        return true;
    }
};

namespace detail {

inline EvalResult dispatch_formula(const ValidationCase& c, const DensityModel& model, double y) {
    const double inner_tol = std::max(c.tol / 10.0, 1e-9);
    if (c.joint) {
        const double s2 = c.hetero_sigma_sq;
        switch (c.fspec.target) {
            case Target::kCdf:
                return gauss_cdf(s2, model, y, c.fspec.a, 60, default_n_schedule(), c.tol);
            case Target::kHingeLoss:
                return gauss_hinge_abs(s2, model, y, c.fspec.a, LossKind::kHinge, 60,
                                       default_n_schedule(), c.tol);
            case Target::kAbsoluteRisk:
                return gauss_hinge_abs(s2, model, y, c.fspec.a, LossKind::kAbsolute, 60,
                                       default_n_schedule(), c.tol);
            default:
                return gauss_functional(s2, model, y, c.fspec);
        }
    }
    switch (c.noise.family) {
        case NoiseFamily::kProductLaplace:
            return lm_functional_1d(c.noise.b(), model, y, c.fspec, inner_tol);
        case NoiseFamily::kGaussian: {
            const double s2 = c.noise.sigma() * c.noise.sigma();
            switch (c.fspec.target) {
                case Target::kMean:
                    return posterior_mean(c.noise, model, y, inner_tol);
                case Target::kCdf:
                    return gauss_cdf(s2, model, y, c.fspec.a, 60, default_n_schedule(), c.tol);
                case Target::kHingeLoss:
                    return gauss_hinge_abs(s2, model, y, c.fspec.a, LossKind::kHinge, 60,
                                           default_n_schedule(), c.tol);
                case Target::kAbsoluteRisk:
                    return gauss_hinge_abs(s2, model, y, c.fspec.a, LossKind::kAbsolute, 60,
                                           default_n_schedule(), c.tol);
                default:
                    return gauss_functional(s2, model, y, c.fspec);
            }
        }
        default:
            if (c.fspec.target != Target::kMean)
                throw unsupported(std::string(c.noise.family_name()) +
                                  " supports the posterior mean only");
            return posterior_mean(c.noise, model, y, inner_tol);
    }
}

inline double dispatch_oracle(const ValidationCase& c, double y) {
    const double inner_tol = std::max(c.tol / 10.0, 1e-10);
    if (c.joint) {
        auto [model, cond_prior] = hetero_condition(*c.joint, c.hetero_sigma_sq);
        const NoiseSpec noise = NoiseSpec::gaussian(0.0, std::sqrt(c.hetero_sigma_sq));
        return oracle::oracle_functional(cond_prior, noise, c.fspec, y, inner_tol);
    }
    NoiseSpec noise = c.noise;
    if (noise.family == NoiseFamily::kProductLaplace) noise = NoiseSpec::laplace(0.0, noise.b());
    return oracle::oracle_functional(c.prior, noise, c.fspec, y, inner_tol);
}

}  // namespace detail

// Evaluates formula modules and the Bayes oracle on every case; individual
// case failures are captured per-record and never abort the suite.
inline OracleReport run_validation(const std::vector<ValidationCase>& suite,
                                   const std::string& name = "custom") {
    OracleReport report;
    report.suite = name;
    for (const auto& c : suite) {
        std::optional<DensityModel> model;
        try {
            if (c.joint)
                model = hetero_condition(*c.joint, c.hetero_sigma_sq).first;
            else
                model = exact_density(c.prior, c.noise);
        } catch (const std::exception& e) {
            CaseRecord rec;
            rec.family = c.label;
            rec.functional = c.fspec.name();
            rec.tol = c.tol;
            rec.message = e.what();
            report.records.push_back(rec);
            continue;
        }
        for (size_t i = 0; i < c.y_grid.size(); ++i) {
            const double y = c.y_grid[i];
            CaseRecord rec;
            rec.family = c.label;
            rec.functional = c.fspec.name();
            rec.y = y;
            rec.tol = c.tol;
            try {
                rec.formula = detail::dispatch_formula(c, *model, y).scalar();
                rec.oracle = i < c.oracle_values.size() ? c.oracle_values[i]
                                                        : detail::dispatch_oracle(c, y);
                rec.abs_error = std::abs(rec.formula - rec.oracle);
                rec.pass = rec.abs_error <= rec.tol;
            } catch (const std::exception& e) {
                rec.message = e.what();
                rec.pass = false;
            }
            report.records.push_back(rec);
        }
    }
    for (const auto& r : report.records) {
        auto [it, fresh] = report.max_abs_error_by_family.try_emplace(r.family, r.abs_error);
        if (!fresh) it->second = std::max(it->second, r.abs_error);
        if (!report.max_abs_error || r.abs_error > *report.max_abs_error)
            report.max_abs_error = r.abs_error;
    }
    if (report.records.empty()) report.max_abs_error.reset();
    return report;
}

// --------------------------------------------------------------------------
// Built-in suites.
// --------------------------------------------------------------------------

// Quantile of the observed marginal f_Y = f_V * P_X for atomic priors, by
// bisection on the mixture CDF.
inline double mixture_quantile(const PriorSpec& prior, const NoiseSpec& noise, double p) {
    if (prior.kind != PriorSpec::Kind::kAtomic)
        throw unsupported("mixture_quantile needs an atomic prior");
    auto cdf = [&](double q) {
        double tot = 0.0;
        for (const auto& a : prior.atoms) tot += a.weight * dist::cdf(noise, q - a.location[0]);
        return tot;
    };
    double lo = prior.atoms.front().location[0], hi = lo;
    for (const auto& a : prior.atoms) {
        lo = std::min(lo, a.location[0]);
        hi = std::max(hi, a.location[0]);
    }
    double step = 1.0;
    lo -= 1.0;
    while (cdf(lo) > p && step < 1e8) {
        lo -= step;
        step *= 2.0;
    }
    step = 1.0;
    hi += 1.0;
    while (cdf(hi) < p && step < 1e8) {
        hi += step;
        step *= 2.0;
    }
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline std::vector<double> central_grid(const PriorSpec& prior, const NoiseSpec& noise, int points,
                                        double coverage = 0.99) {
    const double p0 = 0.5 * (1.0 - coverage);
    const double qlo = mixture_quantile(prior, noise, p0);
    const double qhi = mixture_quantile(prior, noise, 1.0 - p0);
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i)
        grid[i] = qlo + (qhi - qlo) * i / std::max(points - 1, 1);
    return grid;
}

inline std::vector<ValidationCase> builtin_suite(const std::string& name) {
    std::vector<ValidationCase> suite;
    if (name == "table1") {
        const PriorSpec prior =
            PriorSpec::atomic({{-1.0, 0.3}, {0.0, 0.4}, {2.0, 0.3}});
        struct Row {
            NoiseSpec noise;
            double tol;
        };
        const std::vector<Row> rows = {
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
        for (const auto& row : rows) {
            ValidationCase c{row.noise.family_name(), prior,         row.noise,
                             FunctionalSpec::mean(),  central_grid(prior, row.noise, 21),
                             row.tol};
            suite.push_back(std::move(c));
        }
        return suite;
    }
    if (name == "table2") {
        const PriorSpec prior = PriorSpec::atomic({{0.0, 0.5}, {1.0, 0.5}});
        const NoiseSpec noise = NoiseSpec::product_laplace(1.0, 1);
        const std::vector<double> ys{-0.5, 0.3, 1.4};
        const double a = 0.5, t = 0.4, tau = 0.3;
        auto add = [&](const FunctionalSpec& f, double tol) {
            suite.push_back({std::string("product_laplace"), prior, noise, f, ys, tol});
        };
        add(FunctionalSpec::mean(), 1e-6);
        add(FunctionalSpec::second_moment(), 1e-6);
        add(FunctionalSpec::mgf(t), 1e-6);
        add(FunctionalSpec::cdf(a), 1e-6);
        add(FunctionalSpec::squared_risk(a), 1e-6);
        add(FunctionalSpec::variance(), 1e-6);
        add(FunctionalSpec::hinge(a), 1e-5);
        add(FunctionalSpec::pinball(a, tau), 1e-5);
        add(FunctionalSpec::absolute_risk(a), 1e-5);
        return suite;
    }
    if (name == "table3") {
        const HeteroJointSpec joint = HeteroJointSpec::scalar(
            {{0.0, 0.25, 0.25}, {1.0, 1.0, 0.5}, {3.0, 4.0, 0.25}});
        const std::vector<double> sigma2s{0.25, 1.0, 4.0};
        for (double s2 : sigma2s) {
            auto [model, cond_prior] = hetero_condition(joint, s2);
            const NoiseSpec cond_noise = NoiseSpec::gaussian(0.0, std::sqrt(s2));
            const std::vector<double> grid = central_grid(cond_prior, cond_noise, 11);
            auto add = [&](const FunctionalSpec& f) {
                ValidationCase c{"hetero_sigma2=" + std::to_string(s2),
                                 cond_prior,
                                 cond_noise,
                                 f,
                                 grid,
                                 1e-6};
                c.joint = joint;
                c.hetero_sigma_sq = s2;
                suite.push_back(std::move(c));
            };
            add(FunctionalSpec::mean());
            add(FunctionalSpec::variance());
            add(FunctionalSpec::mgf(0.4));
            add(FunctionalSpec::raw_moment(3));
            add(FunctionalSpec::even_risk(0.5, 1));
        }
        return suite;
    }
    if (name == "conjugate") {
        const PriorSpec prior = PriorSpec::gaussian_mixture({{0.0, 1.0, 1.0}});
        const NoiseSpec noise = NoiseSpec::gaussian(0.0, 1.0);
        const std::vector<double> ys{-2.0, 0.0, 2.0};
        // X | Y=y ~ N(y/2, 1/2).
        auto post_mean = [](double y) { return 0.5 * y; };
        const double post_var = 0.5;
        auto add = [&](const FunctionalSpec& f, double tol, auto&& analytic) {
            ValidationCase c{"conjugate", prior, noise, f, ys, tol};
            for (double y : ys) c.oracle_values.push_back(analytic(y));
            suite.push_back(std::move(c));
        };
        add(FunctionalSpec::mean(), 1e-8, post_mean);
        add(FunctionalSpec::variance(), 1e-8, [&](double) { return post_var; });
        add(FunctionalSpec::mgf(0.5), 1e-8, [&](double y) {
            return std::exp(0.5 * post_mean(y) + 0.5 * post_var * 0.25);
        });
        for (double a : {-1.0, 0.0, 1.0}) {
            add(FunctionalSpec::cdf(a), 1e-4, [&](double y) {
                return numerics::norm_cdf((a - post_mean(y)) / std::sqrt(post_var));
            });
        }
        return suite;
    }
    throw domain_error("unknown built-in suite '" + name + "'");
}

}  // namespace tweedie
