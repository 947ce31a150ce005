#pragma once

#include "pmfair/errors.hpp"
#include "pmfair/core.hpp"
#include "pmfair/welfare.hpp"
#include "pmfair/lp.hpp"
#include "pmfair/fairness.hpp"
#include "pmfair/market.hpp"
#include "pmfair/solver.hpp"
#include "pmfair/rounding.hpp"
#include "pmfair/exact.hpp"
#include "pmfair/paperlab.hpp"
#include "pmfair/io.hpp"
