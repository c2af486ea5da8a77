#pragma once

#include "sdflow/assembly.hpp"
#include "sdflow/baseline.hpp"
#include "sdflow/convergence.hpp"
#include "sdflow/errors.hpp"
#include "sdflow/evolve.hpp"
#include "sdflow/geometry.hpp"
#include "sdflow/newton.hpp"
#include "sdflow/quadrature.hpp"
#include "sdflow/svg.hpp"
#include "sdflow/timequad.hpp"
#include "sdflow/vec2.hpp"
