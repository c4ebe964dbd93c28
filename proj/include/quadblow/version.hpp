// Copyright (c) 2026 the quadblow developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace quadblow {

inline constexpr const char* kToolName = "quadblow";
inline constexpr const char* kToolVersion = "quadblow 0.1.0";

}  // namespace quadblow
