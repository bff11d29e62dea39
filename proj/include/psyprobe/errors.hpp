#pragma once

#include <stdexcept>

namespace psyprobe {

/// A backend call failed. Callers may retry.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The backend cannot be reached at all; runs abort instead of retrying.
class BackendUnreachable : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Scoring of one premise failed; carries the premise context.
class ScoringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace psyprobe
