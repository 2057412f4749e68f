#pragma once

// Umbrella header for the whole library.

#include "agnostic/errors.hpp"
#include "agnostic/rational.hpp"
#include "agnostic/random.hpp"
#include "agnostic/data.hpp"
#include "agnostic/split_scheme.hpp"
#include "agnostic/erm.hpp"
#include "agnostic/distributions.hpp"
#include "agnostic/ensemble.hpp"
#include "agnostic/tie_learner.hpp"
#include "agnostic/selector.hpp"
#include "agnostic/eval.hpp"
#include "agnostic/svg_plot.hpp"
#include "agnostic/config.hpp"
