// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "bgg/config.hpp"
#include "bgg/economics.hpp"
#include "bgg/estimators.hpp"
#include "bgg/game.hpp"
#include "bgg/netsim.hpp"
#include "bgg/oracle.hpp"
#include "bgg/process.hpp"
#include "bgg/rng.hpp"
#include "bgg/stats.hpp"
