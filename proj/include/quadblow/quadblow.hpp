// Copyright (c) 2026 the quadblow developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "quadblow/core.hpp"
#include "quadblow/dynamics.hpp"
#include "quadblow/ensemble.hpp"
#include "quadblow/exact.hpp"
#include "quadblow/io.hpp"
#include "quadblow/spherical.hpp"
#include "quadblow/version.hpp"
