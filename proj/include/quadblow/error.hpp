// Copyright (c) 2026 the quadblow developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include "json.hpp"

namespace quadblow {

/// Domain-level failure (degenerate direction, pole crossed, failed
/// certificate search, ...). `code` is the stable machine-readable
/// identifier used by the CLI error channel; `detail` carries structured
/// context such as the pole time or a degeneracy report.
class DomainError : public std::runtime_error {
 public:
  DomainError(std::string code, const std::string& message,
              nlohmann::json detail = nlohmann::json::object())
      : std::runtime_error(message),
        code_(std::move(code)),
        detail_(std::move(detail)) {}

  const std::string& code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

 private:
  std::string code_;
  nlohmann::json detail_;
};

}  // namespace quadblow
