#pragma once

// Umbrella header.

#include "calsurp/cache.hpp"
#include "calsurp/chain.hpp"
#include "calsurp/config.hpp"
#include "calsurp/corpus.hpp"
#include "calsurp/error.hpp"
#include "calsurp/estimator.hpp"
#include "calsurp/ngram.hpp"
#include "calsurp/nullsim.hpp"
#include "calsurp/provider.hpp"
#include "calsurp/remote.hpp"
#include "calsurp/replay.hpp"
#include "calsurp/report.hpp"
#include "calsurp/scored_text.hpp"
