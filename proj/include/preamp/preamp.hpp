#pragma once
// Umbrella header for the preamp library.

#include "preamp/chain_params.hpp"
#include "preamp/errors.hpp"
#include "preamp/kernels.hpp"
#include "preamp/mc.hpp"
#include "preamp/priors.hpp"
#include "preamp/retrodict.hpp"
#include "preamp/scenario.hpp"
#include "preamp/sweep.hpp"
#include "preamp/transition_kernel.hpp"
#include "preamp/version.hpp"
