#pragma once

#include "tweedie/core.hpp"
#include "tweedie/densities.hpp"
#include "tweedie/distributions.hpp"
#include "tweedie/errors.hpp"
#include "tweedie/gaussian.hpp"
#include "tweedie/laplace_mech.hpp"
#include "tweedie/noise_catalog.hpp"
#include "tweedie/numerics.hpp"
#include "tweedie/oracle.hpp"
#include "tweedie/validation.hpp"
