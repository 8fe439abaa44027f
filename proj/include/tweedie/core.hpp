#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tweedie/errors.hpp"

namespace tweedie {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// NoiseSpec: a tagged additive-noise law V with its family parameters.
// ---------------------------------------------------------------------------

enum class NoiseFamily {
    kGaussian,
    kGeneralizedLaplace,
    kLaplace,
    kAsymmetricLaplace,
    kLogistic,
    kGumbel,
    kCauchy,
    kHyperbolicSecant,
    kGamma,
    kNoncentralChiSq,
    kInverseGaussian,
    kProductLaplace,
};

struct NoiseSpec {
    NoiseFamily family = NoiseFamily::kGaussian;
    double p0 = 0.0;  // location mu (two-sided laws); IG mean mu
    double p1 = 1.0;  // scale: sigma | b | s | beta | gamma | theta; IG lambda
    double p2 = 0.0;  // GL lambda | ALaplace b_plus | Gamma alpha | NCX2 nu
    double p3 = 0.0;  // NCX2 delta
    int dim = 1;      // ProductLaplace coordinate count

    static NoiseSpec gaussian(double mu, double sigma) {
        return {NoiseFamily::kGaussian, mu, sigma};
    }
    static NoiseSpec generalized_laplace(double mu, double b, double lambda) {
        return {NoiseFamily::kGeneralizedLaplace, mu, b, lambda};
    }
    static NoiseSpec laplace(double mu, double b) { return {NoiseFamily::kLaplace, mu, b}; }
    static NoiseSpec asymmetric_laplace(double mu, double b_minus, double b_plus) {
        return {NoiseFamily::kAsymmetricLaplace, mu, b_minus, b_plus};
    }
    static NoiseSpec logistic(double mu, double s) { return {NoiseFamily::kLogistic, mu, s}; }
    static NoiseSpec gumbel(double mu, double beta) { return {NoiseFamily::kGumbel, mu, beta}; }
    static NoiseSpec cauchy(double mu, double gamma) { return {NoiseFamily::kCauchy, mu, gamma}; }
    static NoiseSpec hyperbolic_secant(double mu, double s) {
        return {NoiseFamily::kHyperbolicSecant, mu, s};
    }
    static NoiseSpec gamma(double alpha, double theta) {
        return {NoiseFamily::kGamma, 0.0, theta, alpha};
    }
    static NoiseSpec noncentral_chisq(double nu, double delta) {
        return {NoiseFamily::kNoncentralChiSq, 0.0, 1.0, nu, delta};
    }
    static NoiseSpec inverse_gaussian(double mu, double lambda) {
        return {NoiseFamily::kInverseGaussian, mu, lambda};
    }
    static NoiseSpec product_laplace(double b, int d) {
        NoiseSpec n{NoiseFamily::kProductLaplace, 0.0, b};
        n.dim = d;
        return n;
    }

    // Named accessors; callers use the one matching the family.
    double mu() const { return p0; }
    double sigma() const { return p1; }
    double b() const { return p1; }
    double s() const { return p1; }
    double beta() const { return p1; }
    double gamma_scale() const { return p1; }
    double theta() const { return p1; }
    double b_minus() const { return p1; }
    double b_plus() const { return p2; }
    double gl_lambda() const { return p2; }
    double alpha() const { return p2; }
    double nu() const { return p2; }
    double delta() const { return p3; }
    double ig_mu() const { return p0; }
    double ig_lambda() const { return p1; }

    const char* family_name() const {
        switch (family) {
            case NoiseFamily::kGaussian: return "gaussian";
            case NoiseFamily::kGeneralizedLaplace: return "generalized_laplace";
            case NoiseFamily::kLaplace: return "laplace";
            case NoiseFamily::kAsymmetricLaplace: return "asymmetric_laplace";
            case NoiseFamily::kLogistic: return "logistic";
            case NoiseFamily::kGumbel: return "gumbel";
            case NoiseFamily::kCauchy: return "cauchy";
            case NoiseFamily::kHyperbolicSecant: return "hyperbolic_secant";
            case NoiseFamily::kGamma: return "gamma";
            case NoiseFamily::kNoncentralChiSq: return "noncentral_chisq";
            case NoiseFamily::kInverseGaussian: return "inverse_gaussian";
            case NoiseFamily::kProductLaplace: return "product_laplace";
        }
        return "?";
    }
};

// Returns the spec unchanged when every family restriction holds.
inline NoiseSpec validate_noise(const NoiseSpec& n) {
    auto require = [&](bool ok, const char* param, const char* bound) {
        if (!ok) throw param_out_of_range(n.family_name(), param, bound);
    };
    switch (n.family) {
        case NoiseFamily::kGaussian:
            require(n.sigma() > 0.0, "sigma", "> 0");
            break;
        case NoiseFamily::kGeneralizedLaplace:
            require(n.b() > 0.0, "b", "> 0");
            require(n.gl_lambda() > 0.5, "lambda", "> 1/2");
            break;
        case NoiseFamily::kLaplace:
            require(n.b() > 0.0, "b", "> 0");
            break;
        case NoiseFamily::kAsymmetricLaplace:
            require(n.b_minus() > 0.0, "b_minus", "> 0");
            require(n.b_plus() > 0.0, "b_plus", "> 0");
            break;
        case NoiseFamily::kLogistic:
            require(n.s() > 0.0, "s", "> 0");
            break;
        case NoiseFamily::kGumbel:
            require(n.beta() > 0.0, "beta", "> 0");
            break;
        case NoiseFamily::kCauchy:
            require(n.gamma_scale() > 0.0, "gamma", "> 0");
            break;
        case NoiseFamily::kHyperbolicSecant:
            require(n.s() > 0.0, "s", "> 0");
            break;
        case NoiseFamily::kGamma:
            require(n.alpha() > 1.0, "alpha", "> 1");
            require(n.theta() > 0.0, "theta", "> 0");
            break;
        case NoiseFamily::kNoncentralChiSq:
            require(n.nu() > 2.0, "nu", "> 2");
            require(n.delta() >= 0.0, "delta", ">= 0");
            break;
        case NoiseFamily::kInverseGaussian:
            require(n.ig_mu() > 0.0, "mu", "> 0");
            require(n.ig_lambda() > 0.0, "lambda", "> 0");
            break;
        case NoiseFamily::kProductLaplace:
            require(n.b() > 0.0, "b", "> 0");
            require(n.dim >= 1, "d", ">= 1");
            break;
    }
    return n;
}

// ---------------------------------------------------------------------------
// PriorSpec: the latent law P_X.
// ---------------------------------------------------------------------------

struct Atom {
    VectorXd location;
    double weight;
};

struct GaussComponent {
    VectorXd mean;
    MatrixXd cov;
    double weight;
};

struct PriorSpec {
    enum class Kind { kAtomic, kGaussianMixture, kSamplesOnly };

    Kind kind = Kind::kAtomic;
    int dim = 1;
    std::vector<Atom> atoms;
    std::vector<GaussComponent> components;
    std::vector<double> samples;

    static PriorSpec atomic(const std::vector<std::pair<double, double>>& locs_weights) {
        PriorSpec p;
        p.kind = Kind::kAtomic;
        p.dim = 1;
        for (const auto& [x, w] : locs_weights) {
            VectorXd v(1);
            v << x;
            p.atoms.push_back({v, w});
        }
        p.validate();
        return p;
    }

    static PriorSpec atomic_vec(std::vector<Atom> atoms) {
        PriorSpec p;
        p.kind = Kind::kAtomic;
        if (atoms.empty()) throw domain_error("atomic prior needs at least one atom");
        p.dim = static_cast<int>(atoms.front().location.size());
        p.atoms = std::move(atoms);
        p.validate();
        return p;
    }

    // Univariate mixture from (mean, variance, weight) triples.
    static PriorSpec gaussian_mixture(
        const std::vector<std::tuple<double, double, double>>& comps) {
        PriorSpec p;
        p.kind = Kind::kGaussianMixture;
        p.dim = 1;
        for (const auto& [m, var, w] : comps) {
            VectorXd mu(1);
            mu << m;
            MatrixXd cov(1, 1);
            cov << var;
            p.components.push_back({mu, cov, w});
        }
        p.validate();
        return p;
    }

    static PriorSpec gaussian_mixture_vec(std::vector<GaussComponent> comps) {
        PriorSpec p;
        p.kind = Kind::kGaussianMixture;
        if (comps.empty()) throw domain_error("gaussian mixture needs at least one component");
        p.dim = static_cast<int>(comps.front().mean.size());
        p.components = std::move(comps);
        p.validate();
        return p;
    }

    static PriorSpec samples_only(std::vector<double> xs) {
        PriorSpec p;
        p.kind = Kind::kSamplesOnly;
        p.dim = 1;
        p.samples = std::move(xs);
        return p;
    }

    void validate() {
        constexpr double kWeightTol = 1e-12;
        auto check_weights = [&](auto& items) {
            double total = 0.0;
            for (const auto& it : items) {
                if (!(it.weight > 0.0)) throw domain_error("prior weights must be strictly positive");
                total += it.weight;
            }
            if (std::abs(total - 1.0) > kWeightTol)
                throw domain_error("prior weights must sum to 1 within 1e-12");
            for (auto& it : items) it.weight /= total;  // absorb decimal round-off
        };
        if (kind == Kind::kAtomic) {
            if (atoms.empty()) throw domain_error("atomic prior needs at least one atom");
            check_weights(atoms);
            for (size_t i = 0; i < atoms.size(); ++i) {
                if (atoms[i].location.size() != dim)
                    throw dimension_mismatch("atom dimension mismatch");
                for (size_t j = i + 1; j < atoms.size(); ++j)
                    if ((atoms[i].location - atoms[j].location).lpNorm<Eigen::Infinity>() == 0.0)
                        throw domain_error("atomic prior locations must be distinct");
            }
        } else if (kind == Kind::kGaussianMixture) {
            if (components.empty())
                throw domain_error("gaussian mixture needs at least one component");
            check_weights(components);
            for (const auto& c : components) {
                if (c.mean.size() != dim || c.cov.rows() != dim || c.cov.cols() != dim)
                    throw dimension_mismatch("mixture component dimension mismatch");
                if (!c.cov.isApprox(c.cov.transpose(), 1e-12))
                    throw domain_error("mixture covariance must be symmetric");
                Eigen::LLT<MatrixXd> llt(c.cov);
                if (llt.info() != Eigen::Success)
                    throw domain_error("mixture covariance must be positive definite");
            }
        }
    }
};

// ---------------------------------------------------------------------------
// FunctionalSpec: which posterior target to evaluate.
// ---------------------------------------------------------------------------

enum class Target {
    kMean,
    kSecondMoment,
    kRawMoment,
    kCenteredMoment,
    kVariance,
    kMgf,
    kCdf,
    kSquaredRisk,
    kEvenRisk,
    kHingeLoss,
    kPinballLoss,
    kAbsoluteRisk,
};

struct FunctionalSpec {
    Target target = Target::kMean;
    int k = 0;         // moment order
    int m = 0;         // even-risk half order (|x-a|^{2m})
    VectorXd t;        // MGF argument
    double a = 0.0;    // threshold / risk center
    double tau = 0.5;  // pinball level

    static FunctionalSpec mean() { return {Target::kMean}; }
    static FunctionalSpec second_moment() { return {Target::kSecondMoment}; }
    static FunctionalSpec raw_moment(int k) {
        FunctionalSpec f{Target::kRawMoment};
        f.k = k;
        return f;
    }
    static FunctionalSpec centered_moment(int k) {
        FunctionalSpec f{Target::kCenteredMoment};
        f.k = k;
        return f;
    }
    static FunctionalSpec variance() { return {Target::kVariance}; }
    static FunctionalSpec mgf(double t) {
        FunctionalSpec f{Target::kMgf};
        f.t = VectorXd::Constant(1, t);
        return f;
    }
    static FunctionalSpec mgf_vec(VectorXd t) {
        FunctionalSpec f{Target::kMgf};
        f.t = std::move(t);
        return f;
    }
    static FunctionalSpec cdf(double a) {
        FunctionalSpec f{Target::kCdf};
        f.a = a;
        return f;
    }
    static FunctionalSpec squared_risk(double a) {
        FunctionalSpec f{Target::kSquaredRisk};
        f.a = a;
        return f;
    }
    static FunctionalSpec even_risk(double a, int m) {
        FunctionalSpec f{Target::kEvenRisk};
        f.a = a;
        f.m = m;
        return f;
    }
    static FunctionalSpec hinge(double a) {
        FunctionalSpec f{Target::kHingeLoss};
        f.a = a;
        return f;
    }
    static FunctionalSpec pinball(double a, double tau) {
        FunctionalSpec f{Target::kPinballLoss};
        f.a = a;
        f.tau = tau;
        return f;
    }
    static FunctionalSpec absolute_risk(double a) {
        FunctionalSpec f{Target::kAbsoluteRisk};
        f.a = a;
        return f;
    }

    double t_scalar() const {
        if (t.size() != 1) throw dimension_mismatch("scalar MGF argument expected");
        return t[0];
    }

    std::string name() const {
        switch (target) {
            case Target::kMean: return "mean";
            case Target::kSecondMoment: return "second_moment";
            case Target::kRawMoment: return "raw_moment(" + std::to_string(k) + ")";
            case Target::kCenteredMoment: return "centered_moment(" + std::to_string(k) + ")";
            case Target::kVariance: return "variance";
            case Target::kMgf: {
                std::string s = "mgf(";
                for (int i = 0; i < t.size(); ++i)
                    s += (i ? "," : "") + std::to_string(t[i]);
                return s + ")";
            }
            case Target::kCdf: return "cdf(" + std::to_string(a) + ")";
            case Target::kSquaredRisk: return "squared_risk(" + std::to_string(a) + ")";
            case Target::kEvenRisk:
                return "even_risk(" + std::to_string(a) + "," + std::to_string(m) + ")";
            case Target::kHingeLoss: return "hinge(" + std::to_string(a) + ")";
            case Target::kPinballLoss:
                return "pinball(" + std::to_string(a) + "," + std::to_string(tau) + ")";
            case Target::kAbsoluteRisk: return "absolute_risk(" + std::to_string(a) + ")";
        }
        return "?";
    }
};

// Supported (family x functional) catalog: Table 1 families expose the
// posterior mean only; the product-Laplace mechanism exposes the full
// Table 2 set; Gaussian noise exposes the full Table 3 set.
inline FunctionalSpec validate_functional(const FunctionalSpec& f, const NoiseSpec& noise) {
    if (f.target == Target::kPinballLoss && !(f.tau > 0.0 && f.tau < 1.0))
        throw domain_error("pinball loss requires tau in (0,1)");
    auto reject = [&] {
        throw unsupported(std::string(noise.family_name()) + " does not support " + f.name());
    };
    switch (noise.family) {
        case NoiseFamily::kProductLaplace: {
            switch (f.target) {
                case Target::kMean:
                case Target::kSecondMoment:
                case Target::kVariance:
                case Target::kCdf:
                case Target::kSquaredRisk:
                case Target::kHingeLoss:
                case Target::kPinballLoss:
                case Target::kAbsoluteRisk:
                    break;
                case Target::kMgf:
                    if (f.t.lpNorm<Eigen::Infinity>() >= 1.0 / noise.b())
                        throw mgf_domain("product-Laplace MGF requires ||t||_inf < 1/b");
                    break;
                default:
                    reject();
            }
            break;
        }
        case NoiseFamily::kGaussian: {
            switch (f.target) {
                case Target::kMean:
                case Target::kSecondMoment:
                case Target::kVariance:
                case Target::kMgf:
                case Target::kRawMoment:
                case Target::kCenteredMoment:
                case Target::kEvenRisk:
                case Target::kSquaredRisk:
                case Target::kCdf:
                case Target::kHingeLoss:
                case Target::kAbsoluteRisk:
                    break;
                default:
                    reject();
            }
            break;
        }
        default:
            if (f.target != Target::kMean) reject();
    }
    return f;
}

// ---------------------------------------------------------------------------
// EvalResult: computed value plus evaluation diagnostics.
// ---------------------------------------------------------------------------

struct EvalResult {
    std::variant<double, VectorXd, MatrixXd> value = 0.0;
    double density_at_point = 0.0;
    double quadrature_error_estimate = 0.0;
    long series_terms_used = 0;
    bool converged = true;

    double scalar() const { return std::get<double>(value); }
    const VectorXd& vec() const { return std::get<VectorXd>(value); }
    const MatrixXd& mat() const { return std::get<MatrixXd>(value); }
};

inline constexpr double kDensityFloor = 1e-300;

inline double require_density(double fy) {
    if (!(fy >= kDensityFloor))
        throw density_too_small("f_Y(y) below evaluation floor; posterior ratio undefined");
    return fy;
}

}  // namespace tweedie
