#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace usara {

// Thrown when a solver produces non-finite values or an internal numerical
// invariant is violated beyond slack.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// File-format errors carry the byte offset at which parsing failed.
class IoError : public std::runtime_error {
public:
  IoError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
        byte_offset(offset) {}
  std::uint64_t byte_offset;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// All randomized components (phantoms, noise, power-iteration seeds) draw
// from this engine so a fixed seed reproduces runs bit-for-bit.
using Rng = std::mt19937_64;

}  // namespace usara
