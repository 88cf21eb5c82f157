#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace brachy {

// Base of every domain error. code() is a stable machine-readable identifier
// used by the CLI and the service; what() is a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class InclinationExceeded : public Error {
 public:
  InclinationExceeded(double inclination_deg, double limit_deg);
  double inclination() const noexcept { return inclination_; }

 private:
  double inclination_;
};

class TravelExceeded : public Error {
 public:
  explicit TravelExceeded(std::vector<std::string> joints);
  const std::vector<std::string>& joints() const noexcept { return joints_; }

 private:
  std::vector<std::string> joints_;
};

class IndexOutOfGrid : public Error {
 public:
  IndexOutOfGrid(int col, int row);
};

class NoAccess : public Error {
 public:
  explicit NoAccess(const std::string& message) : Error("NoAccess", message) {}
};

class NotPermitted : public Error {
 public:
  explicit NotPermitted(const std::string& message) : Error("NotPermitted", message) {}
};

class NotAtHome : public Error {
 public:
  explicit NotAtHome(double d_ins);
};

class ParseError : public Error {
 public:
  ParseError(std::string location, const std::string& reason);
  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string needle_id, const std::string& constraint);
  const std::string& needle_id() const noexcept { return needle_id_; }

 private:
  std::string needle_id_;
};

class DigestMismatch : public Error {
 public:
  DigestMismatch(const std::string& expected, const std::string& actual);
};

class TruncatedLog : public Error {
 public:
  explicit TruncatedLog(const std::string& message) : Error("TruncatedLog", message) {}
};

// Raised by the headless driver when a needle cannot be completed.
class RunFailure : public Error {
 public:
  RunFailure(std::string needle_id, const std::string& cause, const std::string& reason);
  const std::string& needle_id() const noexcept { return needle_id_; }
  const std::string& cause() const noexcept { return cause_; }

 private:
  std::string needle_id_;
  std::string cause_;
};

}  // namespace brachy
