#pragma once

// Umbrella header: pulls in the whole library.

#include "fairbreak/classifier.hpp"
#include "fairbreak/datagen.hpp"
#include "fairbreak/dataset.hpp"
#include "fairbreak/distribution.hpp"
#include "fairbreak/empirical_attack.hpp"
#include "fairbreak/errors.hpp"
#include "fairbreak/fair_boundary.hpp"
#include "fairbreak/io.hpp"
#include "fairbreak/learners.hpp"
#include "fairbreak/metrics.hpp"
#include "fairbreak/optimal_attack.hpp"
#include "fairbreak/oracle.hpp"
#include "fairbreak/repro.hpp"
#include "fairbreak/rng.hpp"
#include "fairbreak/verify.hpp"
