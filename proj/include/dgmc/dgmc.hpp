#pragma once

// Everything: fields, Allen-Cahn stepping, varifold extraction, diagnostics,
// calibration, relative entropy and the experiment harness.

#include "dgmc/grid.hpp"
#include "dgmc/double_well.hpp"
#include "dgmc/sphere.hpp"
#include "dgmc/energy.hpp"
#include "dgmc/allen_cahn.hpp"
#include "dgmc/varifold.hpp"
#include "dgmc/diagnostics.hpp"
#include "dgmc/calibration.hpp"
#include "dgmc/entropy.hpp"
#include "dgmc/harness/config.hpp"
#include "dgmc/harness/scenario.hpp"
#include "dgmc/harness/io.hpp"
#include "dgmc/harness/test_fields.hpp"
#include "dgmc/harness/run.hpp"
#include "dgmc/harness/verify.hpp"
#include "dgmc/harness/ladder.hpp"
