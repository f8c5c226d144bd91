#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sysarch {

/// Stable error codes surfaced by the library and the CLI.
enum class ErrorCode {
    ParseError,
    DuplicateId,
    UnknownKind,
    UnknownField,
    MissingField,
    TypeMismatch,
    LeafWithChildren,
    EdgeArity,
    DanglingRef,
    RootKind,
    MultipleRoots,
    NotAForest,
    EmptyReference,
    ProviderUnavailable,
    AgentUnavailable,
    AuthMissing,
    NoJsonFound,
    JsonParseError,
    SchemaViolation,
    PromptSlotMissing,
    MalformedSuggestion,
    InvalidConfig,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// One located problem inside a document (JSON path style: `$.children[0].id`).
struct Issue {
    ErrorCode code;
    std::string path;
    std::string message;
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string path = {});
    Error(ErrorCode code, std::string message, std::vector<Issue> issues);

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] const std::string& path() const noexcept { return path_; }
    [[nodiscard]] const std::vector<Issue>& issues() const noexcept { return issues_; }

private:
    ErrorCode code_;
    std::string path_;
    std::vector<Issue> issues_;
};

}  // namespace sysarch
