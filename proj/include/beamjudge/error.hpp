#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace beamjudge {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied value violates an operation's precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// SQL text could not be parsed. offset is a byte offset into the input.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// SQL text is well formed but uses a construct outside the supported subset
// (CTEs, window functions, outer joins, ...).
class UnsupportedConstruct : public Error {
 public:
  UnsupportedConstruct(std::string construct, std::size_t offset)
      : Error("unsupported construct: " + construct + " at offset " +
              std::to_string(offset)),
        construct_(std::move(construct)),
        offset_(offset) {}

  const std::string& construct() const noexcept { return construct_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string construct_;
  std::size_t offset_;
};

// A beamset file record failed validation. line is 1-based.
class LoadError : public Error {
 public:
  LoadError(const std::string& what, std::size_t line)
      : Error(what + " at line " + std::to_string(line)), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// The scorer service could not be reached (after retries).
class TransportError : public Error {
 public:
  using Error::Error;
};

// The scorer service answered with something the protocol does not allow.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Scoring a beamset failed; identifies where.
class ScoringError : public Error {
 public:
  ScoringError(std::string entry_id, std::optional<std::size_t> candidate,
               const std::string& cause, bool transport)
      : Error(describe(entry_id, candidate, cause)),
        entry_id_(std::move(entry_id)),
        candidate_(candidate),
        transport_(transport) {}

  const std::string& entry_id() const noexcept { return entry_id_; }
  std::optional<std::size_t> candidate_index() const noexcept { return candidate_; }
  // True when the underlying cause was a transport or protocol failure
  // rather than invalid data.
  bool transport_failure() const noexcept { return transport_; }

 private:
  static std::string describe(const std::string& id, std::optional<std::size_t> candidate,
                              const std::string& cause) {
    std::string msg = "scoring failed for entry " + id;
    if (candidate) msg += " candidate " + std::to_string(*candidate);
    return msg + ": " + cause;
  }

  std::string entry_id_;
  std::optional<std::size_t> candidate_;
  bool transport_;
};

}  // namespace beamjudge
