#pragma once

#include <stdexcept>
#include <string>

namespace posefuse {

// Base class for everything this library throws on its own.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A stated precondition was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class ImageTooSmall : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class IdMismatch : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class ZeroDescriptor : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// align_pose_pair received non-unit direction vectors.
class DegenerateAlignment : public Error {
 public:
  using Error::Error;
};

// Source camera centers coincide; pair carries no scale information.
class DegeneratePair : public Error {
 public:
  using Error::Error;
};

class InsufficientCorrespondence : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class AllCandidatesDegenerate : public Error {
 public:
  using Error::Error;
};

class NoVerifiedPairs : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

// Wraps an error from one stage of a multi-stage operation.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : Error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace posefuse
