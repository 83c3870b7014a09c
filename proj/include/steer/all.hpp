// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "steer/alignment.hpp"
#include "steer/array.hpp"
#include "steer/channels.hpp"
#include "steer/linkmetrics.hpp"
#include "steer/run_config.hpp"
#include "steer/si_oracle.hpp"
#include "steer/simharness.hpp"
#include "steer/steer.hpp"
