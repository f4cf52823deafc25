#pragma once

// Arbitrage-free option price envelopes and the model-free variance index.

#include "mfiv/arbitrage.hpp"
#include "mfiv/benchmark.hpp"
#include "mfiv/call_curve.hpp"
#include "mfiv/decimal.hpp"
#include "mfiv/put_curve.hpp"
#include "mfiv/pwl.hpp"
#include "mfiv/quotes.hpp"
#include "mfiv/var_index.hpp"
