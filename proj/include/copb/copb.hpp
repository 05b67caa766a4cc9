#pragma once

// Umbrella header for the mobility behaviour generation toolkit.

#include "copb/backend.hpp"
#include "copb/baseline.hpp"
#include "copb/commands.hpp"
#include "copb/config.hpp"
#include "copb/core.hpp"
#include "copb/dataset.hpp"
#include "copb/gravity.hpp"
#include "copb/io.hpp"
#include "copb/metrics.hpp"
#include "copb/workflow.hpp"
