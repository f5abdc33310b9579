#pragma once

// Umbrella header.

#include "dsym/quadrature.hpp"
#include "dsym/core.hpp"
#include "dsym/psi.hpp"
#include "dsym/densities.hpp"
#include "dsym/theta.hpp"
#include "dsym/moments.hpp"
#include "dsym/sampling.hpp"
