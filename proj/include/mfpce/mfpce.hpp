#pragma once

// Umbrella header.

#include "mfpce/errors.hpp"
#include "mfpce/orthopoly.hpp"
#include "mfpce/random.hpp"
#include "mfpce/sparse_grid.hpp"
#include "mfpce/pce.hpp"
#include "mfpce/models.hpp"
#include "mfpce/external_model.hpp"
#include "mfpce/mf_pce.hpp"
#include "mfpce/sobol.hpp"
#include "mfpce/study.hpp"
#include "mfpce/config.hpp"
