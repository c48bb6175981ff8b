#pragma once

#include "lassomarket/data_io.hpp"
#include "lassomarket/errors.hpp"
#include "lassomarket/experiments.hpp"
#include "lassomarket/market.hpp"
#include "lassomarket/regression.hpp"
#include "lassomarket/scenario.hpp"
#include "lassomarket/timeseries.hpp"
