#pragma once

#include <stdexcept>
#include <string>

namespace tweedie {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A distribution parameter violates its family restriction.
struct param_out_of_range : error {
    param_out_of_range(const std::string& family, const std::string& parameter,
                       const std::string& bound)
        : error(family + ": parameter '" + parameter + "' must satisfy " + bound) {}
};

// Functional/family pair (or argument) outside the supported catalog.
struct unsupported : error {
    using error::error;
};

struct mgf_domain : error {
    using error::error;
};

struct dimension_mismatch : error {
    using error::error;
};

// f_Y(y) below the evaluation floor; the posterior ratio is undefined.
struct density_too_small : error {
    using error::error;
};

struct non_convergence : error {
    using error::error;
};

struct too_few_samples : error {
    using error::error;
};

// Conditioning value carries zero probability in the joint law.
struct no_mass : error {
    using error::error;
};

struct series_divergence : error {
    using error::error;
};

struct domain_error : error {
    using error::error;
};

}  // namespace tweedie
