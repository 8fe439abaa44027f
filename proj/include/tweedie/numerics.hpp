#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "tweedie/errors.hpp"

namespace tweedie::numerics {

inline constexpr double kEulerGamma = 0.57721566490153286061;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Series/derivative truncation ceiling; beyond this cancellation dominates
// in double precision.
inline constexpr int kMaxHermiteOrder = 80;

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    long evaluations = 0;
};

// Accumulates quadrature diagnostics across the integrals of one evaluation.
struct Tally {
    double err = 0.0;
    long evals = 0;
    double add(const QuadResult& r) {
        err += r.error_estimate;
        evals += r.evaluations;
        return r.value;
    }
};

namespace detail {

// Gauss-Kronrod 7-15 nodes and weights on [-1,1] (positive half).
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
inline QuadResult gk15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double f1[7], f2[7];
    double kron = kKronrodWeights[7] * fc;
    double gauss = kGaussWeights[3] * fc;
    double resabs = kKronrodWeights[7] * std::abs(fc);
    for (int i = 0; i < 7; ++i) {
        const double x = h * kKronrodNodes[i];
        f1[i] = f(c - x);
        f2[i] = f(c + x);
        kron += kKronrodWeights[i] * (f1[i] + f2[i]);
        resabs += kKronrodWeights[i] * (std::abs(f1[i]) + std::abs(f2[i]));
        if (i % 2 == 1) gauss += kGaussWeights[i / 2] * (f1[i] + f2[i]);
    }
    // QUADPACK qk15 error estimate: scale |K - G| by the panel variation so
    // coincidental rule agreement on rough integrands is not trusted.
    const double reskh = kron * 0.5;
    double resasc = kKronrodWeights[7] * std::abs(fc - reskh);
    for (int i = 0; i < 7; ++i)
        resasc += kKronrodWeights[i] * (std::abs(f1[i] - reskh) + std::abs(f2[i] - reskh));
    const double ah = std::abs(h);
    resasc *= ah;
    resabs *= ah;
    double err = std::abs((kron - gauss) * h);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * resabs);
    return {kron * h, err, 15};
}

struct Panel {
    double a, b, value, err;
    bool operator<(const Panel& o) const { return err < o.err; }
};

// Globally adaptive bisection on a finite interval.
template <class F>
inline QuadResult adaptive_finite(F&& f, double lo, double hi, double abs_tol,
                                  double rel_tol, long budget) {
    long evals = 0;
    auto rule = [&](double a, double b) {
        QuadResult r = gk15(f, a, b);
        evals += r.evaluations;
        return Panel{a, b, r.value, r.error_estimate};
    };
    std::priority_queue<Panel> q;
    // Seed with a few panels so localized mass is not missed by one pass.
    const int seed_panels = 8;
    double total = 0.0, toterr = 0.0;
    for (int i = 0; i < seed_panels; ++i) {
        const double a = lo + (hi - lo) * i / seed_panels;
        const double b = lo + (hi - lo) * (i + 1) / seed_panels;
        Panel p = rule(a, b);
        total += p.value;
        toterr += p.err;
        q.push(p);
    }
    auto tol = [&] { return std::max(abs_tol, rel_tol * std::abs(total)); };
    while (toterr > tol() && !q.empty()) {
        Panel worst = q.top();
        if (evals >= budget) throw non_convergence("quadrature refinement budget exhausted");
        q.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // Panel is at floating-point resolution; accept its estimate.
            continue;
        }
        Panel l = rule(worst.a, mid);
        Panel r = rule(mid, worst.b);
        total += l.value + r.value - worst.value;
        toterr += l.err + r.err - worst.err;
        q.push(l);
        q.push(r);
    }
    if (!(toterr <= tol()) && q.empty())
        throw non_convergence("quadrature failed to converge");
    return {total, toterr, evals};
}

}  // namespace detail

// Adaptive quadrature of f over [lo, hi]; either endpoint may be infinite.
// Semi-infinite and doubly infinite intervals are mapped to finite ones by
// the monotone substitutions u = lo + t/(1-t) and u = t/(1-t^2).
template <class F>
inline QuadResult adaptive_integrate(F&& f, double lo, double hi,
                                     double abs_tol = 1e-10, double rel_tol = 1e-10,
                                     long budget = 20000) {
    if (!(abs_tol > 0.0) && !(rel_tol > 0.0))
        throw domain_error("adaptive_integrate: tolerances must be positive");
    auto guarded = [&f](double u, double jac) {
        const double v = f(u);
        const double w = v * jac;
        return std::isfinite(w) ? w : 0.0;
    };
    const bool lo_inf = std::isinf(lo), hi_inf = std::isinf(hi);
    if (!lo_inf && !hi_inf) {
        if (lo == hi) return {0.0, 0.0, 0};
        return detail::adaptive_finite(f, lo, hi, abs_tol, rel_tol, budget);
    }
    if (!lo_inf && hi_inf) {
        auto g = [&](double t) {
            const double om = 1.0 - t;
            return guarded(lo + t / om, 1.0 / (om * om));
        };
        return detail::adaptive_finite(g, 0.0, 1.0, abs_tol, rel_tol, budget);
    }
    if (lo_inf && !hi_inf) {
        auto g = [&](double t) {
            const double om = 1.0 - t;
            return guarded(hi - t / om, 1.0 / (om * om));
        };
        return detail::adaptive_finite(g, 0.0, 1.0, abs_tol, rel_tol, budget);
    }
    auto g = [&](double t) {
        const double om = 1.0 - t * t;
        return guarded(t / om, (1.0 + t * t) / (om * om));
    };
    return detail::adaptive_finite(g, -1.0, 1.0, abs_tol, rel_tol, budget);
}

// Adaptive integration with interior split points; panels then start on the
// splits, so localized mass away from the interval seeds is never missed.
template <class F>
inline QuadResult adaptive_integrate_split(F&& f, double lo, double hi,
                                           std::vector<double> cuts, double abs_tol,
                                           double rel_tol, long budget = 20000) {
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> edges{lo};
    for (double c : cuts)
        if (c > edges.back() && c < hi && std::isfinite(c)) edges.push_back(c);
    edges.push_back(hi);
    const double piece_abs = abs_tol / static_cast<double>(edges.size() - 1);
    QuadResult total;
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
        QuadResult r = adaptive_integrate(f, edges[i], edges[i + 1], piece_abs, rel_tol, budget);
        total.value += r.value;
        total.error_estimate += r.error_estimate;
        total.evaluations += r.evaluations;
    }
    return total;
}

// Probabilists' Hermite polynomial He_k via the three-term recurrence.
inline double hermite_he(int k, double x) {
    if (k < 0 || k > kMaxHermiteOrder)
        throw domain_error("hermite_he: order outside [0, 80]");
    double h0 = 1.0, h1 = x;
    if (k == 0) return h0;
    for (int j = 1; j < k; ++j) {
        const double h2 = x * h1 - j * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

inline double norm_pdf(double x) {
    return 0.3989422804014326779 * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// k-th derivative of the standard normal CDF: Phi^{(0)} = Phi and
// Phi^{(k)}(x) = (-1)^{k-1} He_{k-1}(x) phi(x) for k >= 1.
inline double phi_deriv(int k, double x) {
    if (k < 0 || k > kMaxHermiteOrder + 1)
        throw domain_error("phi_deriv: order outside [0, 81]");
    if (k == 0) return norm_cdf(x);
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    return sign * hermite_he(k - 1, x) * norm_pdf(x);
}

// Principal-value Hilbert transform H[f](y) = (1/pi) int_0^inf
// (f(y-t) - f(y+t))/t dt for an integrable f that is C^1 near y.
// The removable singularity on [0, eps] is evaluated by its analytic limit
// -2 f'(y)/pi; the tail beyond T is bounded by ||f||_1/(pi T).
template <class F>
inline QuadResult hilbert_transform(F&& f, double y, double abs_tol,
                                    double l1_bound = 1.0,
                                    double deriv_at_y = std::numeric_limits<double>::quiet_NaN(),
                                    const std::vector<double>& t_cuts = {}) {
    if (!(abs_tol > 0.0)) throw domain_error("hilbert_transform: abs_tol must be positive");
    constexpr double kInner = 1e-6;
    double fp = deriv_at_y;
    long evals = 0;
    if (!std::isfinite(fp)) {
        const double h = 1e-6 * std::max(1.0, std::abs(y));
        fp = (f(y + h) - f(y - h)) / (2.0 * h);
        evals += 2;
    }
    const double tail_cap = l1_bound / (M_PI * (abs_tol / 4.0));
    const double T = std::max(tail_cap, kInner * 4.0);
    const double inner = -2.0 * fp / M_PI * kInner;
    // Integrate in log space so huge outer cutoffs stay resolvable.
    auto g = [&](double s) {
        const double t = std::exp(s);
        return (f(y - t) - f(y + t)) / M_PI;  // kernel 1/t times jacobian t
    };
    std::vector<double> s_cuts;
    for (double t : t_cuts)
        if (t > kInner && t < T) s_cuts.push_back(std::log(t));
    QuadResult mid = adaptive_integrate_split(g, std::log(kInner), std::log(T), s_cuts,
                                              abs_tol / 2.0, 0.0);
    const double tail_bound = l1_bound / (M_PI * T);
    return {inner + mid.value, mid.error_estimate + tail_bound + 1e-300,
            mid.evaluations + evals};
}

}  // namespace tweedie::numerics
