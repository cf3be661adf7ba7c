// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Umbrella header for the stefan-kan library.

#include "stefan_kan/analytic.hpp"
#include "stefan_kan/cli.hpp"
#include "stefan_kan/config.hpp"
#include "stefan_kan/csv.hpp"
#include "stefan_kan/error.hpp"
#include "stefan_kan/jet.hpp"
#include "stefan_kan/kan.hpp"
#include "stefan_kan/kan_io.hpp"
#include "stefan_kan/metrics.hpp"
#include "stefan_kan/model.hpp"
#include "stefan_kan/physics.hpp"
#include "stefan_kan/random.hpp"
#include "stefan_kan/sampler.hpp"
#include "stefan_kan/specfun.hpp"
#include "stefan_kan/splines.hpp"
#include "stefan_kan/tape.hpp"
#include "stefan_kan/trainer.hpp"
