#pragma once

#include <stdexcept>
#include <string>

namespace ragforge {

// Error categories map onto CLI exit codes: usage=2, data=3, provider=4.
enum class ErrorKind { usage, data, provider };

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    int exit_code() const {
        switch (kind_) {
        case ErrorKind::usage: return 2;
        case ErrorKind::data: return 3;
        case ErrorKind::provider: return 4;
        }
        return 1;
    }

    const char* kind_name() const {
        switch (kind_) {
        case ErrorKind::usage: return "usage";
        case ErrorKind::data: return "data";
        case ErrorKind::provider: return "provider";
        }
        return "unknown";
    }

  private:
    ErrorKind kind_;
};

#define RAGFORGE_DEFINE_ERROR(Name, Kind)                                                         \
    class Name : public Error {                                                                   \
      public:                                                                                     \
        explicit Name(const std::string& msg) : Error(ErrorKind::Kind, std::string(#Name ": ") + msg) {} \
    }

// corpus / data
RAGFORGE_DEFINE_ERROR(EmptyDocument, data);
RAGFORGE_DEFINE_ERROR(InvalidLimit, data);
RAGFORGE_DEFINE_ERROR(ParseError, data);
RAGFORGE_DEFINE_ERROR(DanglingGoldChunk, data);
RAGFORGE_DEFINE_ERROR(NoDocuments, data);

// index
RAGFORGE_DEFINE_ERROR(EmptyCorpus, data);
RAGFORGE_DEFINE_ERROR(DuplicateId, data);
RAGFORGE_DEFINE_ERROR(DimensionMismatch, data);
RAGFORGE_DEFINE_ERROR(FormatError, data);
RAGFORGE_DEFINE_ERROR(VersionMismatch, data);

// metrics / pipeline parameters
RAGFORGE_DEFINE_ERROR(EmptyGold, data);
RAGFORGE_DEFINE_ERROR(EmptyInput, data);
RAGFORGE_DEFINE_ERROR(InvalidParam, data);
RAGFORGE_DEFINE_ERROR(InsufficientPool, data);

// providers
RAGFORGE_DEFINE_ERROR(ProviderUnavailable, provider);
RAGFORGE_DEFINE_ERROR(TokenCeilingExceeded, provider);
RAGFORGE_DEFINE_ERROR(JudgeParseError, provider);

// CLI / configuration
RAGFORGE_DEFINE_ERROR(UsageError, usage);

#undef RAGFORGE_DEFINE_ERROR

// Wraps a stage failure with the stage name; keeps the original category so
// the CLI still maps it to the right exit code.
class PipelineError : public Error {
  public:
    PipelineError(const std::string& stage, const Error& inner)
        : Error(inner.kind(), "stage '" + stage + "': " + inner.what()), stage_(stage) {}

    const std::string& stage() const { return stage_; }

  private:
    std::string stage_;
};

} // namespace ragforge
