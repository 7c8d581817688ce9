#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace seprank {

// Default hard cap on the number of entries of any materialized tensor.
inline constexpr std::size_t kDefaultTensorCap = std::size_t{1} << 24;

// Thrown when a requested tensor would exceed the configured entry cap.
struct CapExceeded : std::runtime_error {
    explicit CapExceeded(const std::string& what) : std::runtime_error(what) {}
};

// Thrown on singular solves, non-finite inputs and the like.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// All randomized code takes an explicit engine; never a hidden global.
using Rng = std::mt19937_64;

}  // namespace seprank
