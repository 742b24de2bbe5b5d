#pragma once

#include <nlohmann/json.hpp>

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lessonweave {

// Every failure the library raises carries one of these codes. The API layer
// maps each code to a stable wire string and an HTTP status; see error.cpp.
enum class ErrorCode {
    // corpus
    EmptyBody,
    EmptyTitle,
    EmptyBackground,
    EmptySubject,
    ProviderUnavailable,
    AllDuplicates,
    DuplicateEntry,
    ProviderMismatch,
    CorpusIo,
    UnknownMaterial,
    UnknownContext,
    // retrieval
    DimensionMismatch,
    ZeroVector,
    EmptyMaterialSet,
    DegenerateQuery,
    NoCandidates,
    // llm gateway
    ProviderTimeout,
    ProviderHttpError,
    FixtureMiss,
    BudgetExceeded,
    InvalidConfig,
    InvalidMessages,
    // prompts
    PayloadOverflow,
    PayloadMissing,
    RoleTaskMismatch,
    // agents
    MalformedOutput,
    AnalysisFailed,
    SameMaterial,
    UnknownFocus,
    // session
    UnknownCard,
    AlreadyDeleted,
    DuplicateChild,
    UnknownSession,
    NoMaterials,
    InvalidLessonCount,
    LessonCountUnset,
    // outcome
    EmptyCollectionEntry,
    NotInCollection,
    NothingToExport,
    UnknownActivity,
    // api
    UnknownJob,
    BadRequest,
    NotFound,
    Internal,
};

inline constexpr ErrorCode kAllErrorCodes[] = {
    ErrorCode::EmptyBody,          ErrorCode::EmptyTitle,
    ErrorCode::EmptyBackground,    ErrorCode::EmptySubject,
    ErrorCode::ProviderUnavailable, ErrorCode::AllDuplicates,
    ErrorCode::DuplicateEntry,     ErrorCode::ProviderMismatch,
    ErrorCode::CorpusIo,           ErrorCode::UnknownMaterial,
    ErrorCode::UnknownContext,     ErrorCode::DimensionMismatch,
    ErrorCode::ZeroVector,         ErrorCode::EmptyMaterialSet,
    ErrorCode::DegenerateQuery,    ErrorCode::NoCandidates,
    ErrorCode::ProviderTimeout,    ErrorCode::ProviderHttpError,
    ErrorCode::FixtureMiss,        ErrorCode::BudgetExceeded,
    ErrorCode::InvalidConfig,      ErrorCode::InvalidMessages,
    ErrorCode::PayloadOverflow,    ErrorCode::PayloadMissing,
    ErrorCode::RoleTaskMismatch,   ErrorCode::MalformedOutput,
    ErrorCode::AnalysisFailed,     ErrorCode::SameMaterial,
    ErrorCode::UnknownFocus,       ErrorCode::UnknownCard,
    ErrorCode::AlreadyDeleted,     ErrorCode::DuplicateChild,
    ErrorCode::UnknownSession,     ErrorCode::NoMaterials,
    ErrorCode::InvalidLessonCount, ErrorCode::LessonCountUnset,
    ErrorCode::EmptyCollectionEntry, ErrorCode::NotInCollection,
    ErrorCode::NothingToExport,    ErrorCode::UnknownActivity,
    ErrorCode::UnknownJob,         ErrorCode::BadRequest,
    ErrorCode::NotFound,           ErrorCode::Internal,
};

// Stable machine string, e.g. "no_candidates".
std::string_view error_code_name(ErrorCode code);

// HTTP status used when the error crosses the API boundary.
int error_http_status(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, nlohmann::json detail = nullptr)
        : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

    ErrorCode code() const noexcept { return code_; }
    const nlohmann::json& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    nlohmann::json detail_;
};

}  // namespace lessonweave
