#pragma once

#include <stdexcept>
#include <string>

namespace cfaudit {

// All library failures surface as Error with a machine-readable kind.
// Callers that only need a message can treat it as std::runtime_error.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    parse,             // malformed input text
    validation,        // structurally invalid model, graph, or argument
    zero_probability,  // conditioning event has probability zero
    size,              // enumeration would exceed the configured cap
    evaluation,        // query hit an undefined predictor row
    io,                // file could not be read or written
  };

  Error(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline Error parse_error(const std::string& m) { return Error(Error::Kind::parse, m); }
inline Error validation_error(const std::string& m) { return Error(Error::Kind::validation, m); }
inline Error zero_probability_error(const std::string& m) { return Error(Error::Kind::zero_probability, m); }
inline Error size_error(const std::string& m) { return Error(Error::Kind::size, m); }
inline Error evaluation_error(const std::string& m) { return Error(Error::Kind::evaluation, m); }
inline Error io_error(const std::string& m) { return Error(Error::Kind::io, m); }

}  // namespace cfaudit
