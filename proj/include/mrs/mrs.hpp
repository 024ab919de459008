#pragma once

// Umbrella header.
#include "mrs/types.hpp"
#include "mrs/random.hpp"
#include "mrs/chain.hpp"
#include "mrs/posterior.hpp"
#include "mrs/sensitivity.hpp"
#include "mrs/policies.hpp"
#include "mrs/experiment.hpp"
#include "mrs/io.hpp"
