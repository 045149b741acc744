#pragma once

#include <stdexcept>
#include <string>

namespace mtbo {

struct DegenerateRange : std::runtime_error {
  explicit DegenerateRange(const std::string& what) : std::runtime_error(what) {}
};

struct UndefinedFeature : std::runtime_error {
  explicit UndefinedFeature(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyMatrix : std::runtime_error {
  explicit EmptyMatrix(const std::string& what) : std::runtime_error(what) {}
};

struct NonConvergence : std::runtime_error {
  explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

struct FactorizationFailure : std::runtime_error {
  explicit FactorizationFailure(const std::string& what) : std::runtime_error(what) {}
};

struct FitFailure : std::runtime_error {
  explicit FitFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mtbo
