#pragma once

#include "qap/errors.hpp"
#include "qap/tolerances.hpp"
#include "qap/hermitian.hpp"
#include "qap/market.hpp"
#include "qap/measure_change.hpp"
#include "qap/cone_solver.hpp"
#include "qap/arbitrage.hpp"
#include "qap/pricing.hpp"
