#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpdht {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A group element failed decoding or subgroup membership.
class MalformedElement : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

// AEAD tag mismatch: wrong key or tampered ciphertext.
class AuthenticationFailure : public Error {
 public:
  using Error::Error;
};

class InsufficientShares : public Error {
 public:
  using Error::Error;
};

class FilteringFailed : public Error {
 public:
  using Error::Error;
};

// Ranges with a gap or overlap, broken quorum invariants.
class TopologyError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DkgAborted : public Error {
 public:
  DkgAborted(std::string what, std::vector<std::uint32_t> culprits)
      : Error(std::move(what)), culprits_(std::move(culprits)) {}
  const std::vector<std::uint32_t>& culprits() const noexcept { return culprits_; }

 private:
  std::vector<std::uint32_t> culprits_;
};

}  // namespace qpdht
