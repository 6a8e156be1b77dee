#pragma once

#include "specbound/core.hpp"
#include "specbound/quadrature.hpp"
#include "specbound/space.hpp"
#include "specbound/kernel.hpp"
#include "specbound/gauge.hpp"
#include "specbound/bounds.hpp"
#include "specbound/discrete.hpp"
#include "specbound/scenario.hpp"
