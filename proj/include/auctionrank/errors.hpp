#pragma once

#include <stdexcept>
#include <string>

namespace auctionrank {

// Malformed or out-of-domain input data (dimension mismatch, CTR outside its
// range, missing fields).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Inconsistent configuration (non-differentiable loss requested for training,
// missing teacher, invalid hyperparameters).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace auctionrank
