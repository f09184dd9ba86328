// umbrella header

#pragma once

#include "flowlab/core.hpp"
#include "flowlab/algebra.hpp"
#include "flowlab/expm.hpp"
#include "flowlab/quadrature.hpp"
#include "flowlab/flow.hpp"
#include "flowlab/dyson.hpp"
#include "flowlab/inner_solver.hpp"
#include "flowlab/smoothing.hpp"
#include "flowlab/cocycle_tools.hpp"
#include "flowlab/random.hpp"
#include "flowlab/matrix_io.hpp"
#include "flowlab/report.hpp"
#include "flowlab/scenario.hpp"
#include "flowlab/verify.hpp"
