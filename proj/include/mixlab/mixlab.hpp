#pragma once

#include <mixlab/analytic.hpp>
#include <mixlab/configurations.hpp>
#include <mixlab/correlation.hpp>
#include <mixlab/coupling.hpp>
#include <mixlab/error.hpp>
#include <mixlab/homspace.hpp>
#include <mixlab/hyperbolic.hpp>
#include <mixlab/lie.hpp>
#include <mixlab/parallel.hpp>
#include <mixlab/random.hpp>
#include <mixlab/testfn.hpp>

namespace mixlab {
inline constexpr const char* kVersion = "0.1.0";
}
