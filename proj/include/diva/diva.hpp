#pragma once

// Umbrella header for the DIVA poisoning-detection toolkit.

#include "diva/attacks.hpp"
#include "diva/classifiers.hpp"
#include "diva/cmeasures.hpp"
#include "diva/dataset.hpp"
#include "diva/detector.hpp"
#include "diva/errors.hpp"
#include "diva/evaluation.hpp"
#include "diva/log.hpp"
#include "diva/matrix.hpp"
#include "diva/metadb.hpp"
#include "diva/metalearner.hpp"
#include "diva/rng.hpp"
#include "diva/synthetic.hpp"
#include "diva/util.hpp"
