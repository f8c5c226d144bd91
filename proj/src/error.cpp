#include "sysarch/error.hpp"

#include <utility>

namespace sysarch {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::DuplicateId: return "DUP_ID";
    case ErrorCode::UnknownKind: return "UNKNOWN_KIND";
    case ErrorCode::UnknownField: return "UNKNOWN_FIELD";
    case ErrorCode::MissingField: return "MISSING_FIELD";
    case ErrorCode::TypeMismatch: return "TYPE_MISMATCH";
    case ErrorCode::LeafWithChildren: return "LEAF_WITH_CHILDREN";
    case ErrorCode::EdgeArity: return "EDGE_ARITY";
    case ErrorCode::DanglingRef: return "DANGLING_REF";
    case ErrorCode::RootKind: return "ROOT_KIND";
    case ErrorCode::MultipleRoots: return "MULTIPLE_ROOTS";
    case ErrorCode::NotAForest: return "NOT_A_FOREST";
    case ErrorCode::EmptyReference: return "EMPTY_REFERENCE";
    case ErrorCode::ProviderUnavailable: return "PROVIDER_UNAVAILABLE";
    case ErrorCode::AgentUnavailable: return "AGENT_UNAVAILABLE";
    case ErrorCode::AuthMissing: return "AUTH_MISSING";
    case ErrorCode::NoJsonFound: return "NO_JSON_FOUND";
    case ErrorCode::JsonParseError: return "PARSE_ERROR";
    case ErrorCode::SchemaViolation: return "SCHEMA_VIOLATION";
    case ErrorCode::PromptSlotMissing: return "PROMPT_SLOT_MISSING";
    case ErrorCode::MalformedSuggestion: return "MALFORMED_SUGGESTION";
    case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::IoError: return "IO_ERROR";
    }
    return "UNKNOWN";
}

Error::Error(ErrorCode code, std::string message, std::string path)
    : std::runtime_error(std::move(message)), code_(code), path_(std::move(path))
{
}

Error::Error(ErrorCode code, std::string message, std::vector<Issue> issues)
    : std::runtime_error(std::move(message)), code_(code), issues_(std::move(issues))
{
    if (!issues_.empty()) {
        path_ = issues_.front().path;
    }
}

}  // namespace sysarch
