#pragma once

#include <stdexcept>
#include <string>

namespace vtc {

// Exit codes used by the command-line tool.  Library code throws typed
// exceptions; the tool maps them to these codes at the top level.
enum class ExitCode : int {
  ok = 0,
  validation = 2,     // bad config, bad shapes, bad input values
  compatibility = 3,  // artifact is well-formed but incompatible with the request
  integrity = 4,      // artifact is corrupt (digest mismatch, truncation)
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(ExitCode::validation, m) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error(ExitCode::validation, m) {}
};
struct DataError : Error {
  explicit DataError(const std::string& m) : Error(ExitCode::validation, m) {}
};
struct TokenOverflow : Error {
  explicit TokenOverflow(const std::string& m) : Error(ExitCode::validation, m) {}
};
struct UnknownToken : Error {
  explicit UnknownToken(const std::string& m) : Error(ExitCode::validation, m) {}
};
struct EmptyClassSet : Error {
  explicit EmptyClassSet(const std::string& m) : Error(ExitCode::validation, m) {}
};
struct ZeroNorm : Error {
  explicit ZeroNorm(const std::string& m) : Error(ExitCode::validation, m) {}
};
struct InvalidTemperature : Error {
  explicit InvalidTemperature(const std::string& m) : Error(ExitCode::validation, m) {}
};
struct InvalidMode : Error {
  explicit InvalidMode(const std::string& m) : Error(ExitCode::validation, m) {}
};
struct EmptyVideo : Error {
  explicit EmptyVideo(const std::string& m) : Error(ExitCode::validation, m) {}
};
struct EmptyViews : Error {
  explicit EmptyViews(const std::string& m) : Error(ExitCode::validation, m) {}
};
struct DuplicateParameter : Error {
  explicit DuplicateParameter(const std::string& m) : Error(ExitCode::validation, m) {}
};
struct VocabError : Error {
  explicit VocabError(const std::string& m) : Error(ExitCode::compatibility, m) {}
};
struct IntegrityError : Error {
  explicit IntegrityError(const std::string& m) : Error(ExitCode::integrity, m) {}
};

}  // namespace vtc
