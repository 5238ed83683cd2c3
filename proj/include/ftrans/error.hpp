#pragma once

#include <stdexcept>
#include <string>

namespace ftrans {

// Root of every error raised by the library. Subclasses map one-to-one onto
// the failure modes callers are expected to distinguish.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// --- source scanning --------------------------------------------------------

class UnbalancedBlock : public Error {
public:
  UnbalancedBlock(std::string file, int line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": unbalanced block: " + what),
        file_(std::move(file)), line_(line) {}
  const std::string& file() const { return file_; }
  int line() const { return line_; }

private:
  std::string file_;
  int line_;
};

class NonUtf8Source : public Error {
public:
  NonUtf8Source(const std::string& file, std::size_t offset)
      : Error(file + ": invalid UTF-8 at byte " + std::to_string(offset)) {}
};

class FixedFormSource : public Error {
public:
  FixedFormSource(const std::string& file, int line)
      : Error(file + ":" + std::to_string(line) +
              ": fixed-form Fortran is not supported (free-form F90+ only)") {}
};

class EmptyCodebase : public Error {
public:
  explicit EmptyCodebase(const std::string& root)
      : Error("no Fortran units found under " + root) {}
};

// --- dependency graph -------------------------------------------------------

class DuplicateUnitName : public Error {
public:
  DuplicateUnitName(const std::string& name, const std::string& first,
                    const std::string& second)
      : Error("duplicate unit name '" + name + "' defined at " + first + " and " + second) {}
};

// --- prompts ----------------------------------------------------------------

class MissingSlot : public Error {
public:
  explicit MissingSlot(std::string slot)
      : Error("missing prompt slot: " + slot), slot_(std::move(slot)) {}
  const std::string& slot() const { return slot_; }

private:
  std::string slot_;
};

class NoCodeBlockFound : public Error {
public:
  NoCodeBlockFound() : Error("no fenced code block found in response") {}
  explicit NoCodeBlockFound(const std::string& section)
      : Error("no fenced code block found after '" + section + "'") {}
};

class MissingSection : public Error {
public:
  explicit MissingSection(std::string section)
      : Error("response is missing section '" + section + "'"), section_(std::move(section)) {}
  const std::string& section() const { return section_; }

private:
  std::string section_;
};

// --- chat providers ---------------------------------------------------------

class AuthMissing : public Error {
public:
  explicit AuthMissing(const std::string& env)
      : Error("API key environment variable " + env + " is not set") {}
};

class ProviderError : public Error {
public:
  ProviderError(int status, const std::string& body)
      : Error("provider returned status " + std::to_string(status) + ": " + body), status_(status) {}
  int status() const { return status_; }

private:
  int status_;
};

class TimeoutExceeded : public Error {
public:
  using Error::Error;
};

class ReplayMiss : public Error {
public:
  explicit ReplayMiss(const std::string& digest)
      : Error("no transcript recorded for request digest " + digest) {}
};

// --- test harness -----------------------------------------------------------

class RunnerNotFound : public Error {
public:
  explicit RunnerNotFound(const std::string& cmd)
      : Error("test runner not found: " + cmd) {}
};

class WorkdirSetupFailed : public Error {
public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractViolation : public Error {
public:
  using Error::Error;
};

// --- sessions ---------------------------------------------------------------

class SchemaMismatch : public Error {
public:
  SchemaMismatch(int found, int expected)
      : Error("session schema version " + std::to_string(found) + " (expected " +
              std::to_string(expected) + ")") {}
};

class CorruptSession : public Error {
public:
  using Error::Error;
};

class SessionLocked : public Error {
public:
  using Error::Error;
};

class UnknownUnit : public Error {
public:
  explicit UnknownUnit(const std::string& name) : Error("unknown unit: " + name) {}
};

// --- numerics ---------------------------------------------------------------

class NonPositiveCi : public Error {
public:
  explicit NonPositiveCi(double ci)
      : Error("internal CO2 partial pressure must be positive, got " + std::to_string(ci)) {}
};

class NoConvergence : public Error {
public:
  NoConvergence(int iterations, double residual)
      : Error("ci solve did not converge after " + std::to_string(iterations) +
              " iterations (residual " + std::to_string(residual) + ")"),
        iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

private:
  int iterations_;
  double residual_;
};

class EmptyObservations : public Error {
public:
  EmptyObservations() : Error("at least one observation is required") {}
};

// --- resources --------------------------------------------------------------

class ChecksumMismatch : public Error {
public:
  explicit ChecksumMismatch(const std::string& path)
      : Error("checksum mismatch for " + path) {}
};

class IoError : public Error {
public:
  using Error::Error;
};

// Malformed or inconsistent configuration (file, flags or environment).
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace ftrans
