#pragma once

// Defective Gompertz and inverse-Gaussian regression for interval-censored
// competing-risks data with a cured fraction.

#include "defsurv/csv.hpp"
#include "defsurv/data.hpp"
#include "defsurv/distributions.hpp"
#include "defsurv/errors.hpp"
#include "defsurv/estimation.hpp"
#include "defsurv/json_writer.hpp"
#include "defsurv/likelihood.hpp"
#include "defsurv/normal.hpp"
#include "defsurv/optimize.hpp"
#include "defsurv/rng.hpp"
#include "defsurv/simulation.hpp"
#include "defsurv/turnbull.hpp"

namespace defsurv {
inline constexpr const char* kVersion = "0.1.0";
}
