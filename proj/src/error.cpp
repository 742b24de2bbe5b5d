#include "lessonweave/error.hpp"

namespace lessonweave {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyBody: return "empty_body";
        case ErrorCode::EmptyTitle: return "empty_title";
        case ErrorCode::EmptyBackground: return "empty_background";
        case ErrorCode::EmptySubject: return "empty_subject";
        case ErrorCode::ProviderUnavailable: return "provider_unavailable";
        case ErrorCode::AllDuplicates: return "all_duplicates";
        case ErrorCode::DuplicateEntry: return "duplicate_entry";
        case ErrorCode::ProviderMismatch: return "provider_mismatch";
        case ErrorCode::CorpusIo: return "corpus_io";
        case ErrorCode::UnknownMaterial: return "unknown_material";
        case ErrorCode::UnknownContext: return "unknown_context";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::ZeroVector: return "zero_vector";
        case ErrorCode::EmptyMaterialSet: return "empty_material_set";
        case ErrorCode::DegenerateQuery: return "degenerate_query";
        case ErrorCode::NoCandidates: return "no_candidates";
        case ErrorCode::ProviderTimeout: return "provider_timeout";
        case ErrorCode::ProviderHttpError: return "provider_http_error";
        case ErrorCode::FixtureMiss: return "fixture_miss";
        case ErrorCode::BudgetExceeded: return "budget_exceeded";
        case ErrorCode::InvalidConfig: return "invalid_config";
        case ErrorCode::InvalidMessages: return "invalid_messages";
        case ErrorCode::PayloadOverflow: return "payload_overflow";
        case ErrorCode::PayloadMissing: return "payload_missing";
        case ErrorCode::RoleTaskMismatch: return "role_task_mismatch";
        case ErrorCode::MalformedOutput: return "malformed_output";
        case ErrorCode::AnalysisFailed: return "analysis_failed";
        case ErrorCode::SameMaterial: return "same_material";
        case ErrorCode::UnknownFocus: return "unknown_focus";
        case ErrorCode::UnknownCard: return "unknown_card";
        case ErrorCode::AlreadyDeleted: return "already_deleted";
        case ErrorCode::DuplicateChild: return "duplicate_child";
        case ErrorCode::UnknownSession: return "unknown_session";
        case ErrorCode::NoMaterials: return "no_materials";
        case ErrorCode::InvalidLessonCount: return "invalid_lesson_count";
        case ErrorCode::LessonCountUnset: return "lesson_count_unset";
        case ErrorCode::EmptyCollectionEntry: return "empty_collection_entry";
        case ErrorCode::NotInCollection: return "not_in_collection";
        case ErrorCode::NothingToExport: return "nothing_to_export";
        case ErrorCode::UnknownActivity: return "unknown_activity";
        case ErrorCode::UnknownJob: return "unknown_job";
        case ErrorCode::BadRequest: return "bad_request";
        case ErrorCode::NotFound: return "not_found";
        case ErrorCode::Internal: return "internal";
    }
    return "internal";
}

int error_http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownMaterial:
        case ErrorCode::UnknownContext:
        case ErrorCode::UnknownFocus:
        case ErrorCode::UnknownCard:
        case ErrorCode::UnknownSession:
        case ErrorCode::UnknownActivity:
        case ErrorCode::UnknownJob:
        case ErrorCode::NotFound:
            return 404;
        case ErrorCode::AllDuplicates:
        case ErrorCode::DuplicateEntry:
        case ErrorCode::AlreadyDeleted:
        case ErrorCode::DuplicateChild:
        case ErrorCode::NotInCollection:
        case ErrorCode::NothingToExport:
        case ErrorCode::LessonCountUnset:
        case ErrorCode::EmptyCollectionEntry:
        case ErrorCode::NoCandidates:
            return 409;
        case ErrorCode::MalformedOutput:
        case ErrorCode::AnalysisFailed:
        case ErrorCode::FixtureMiss:
        case ErrorCode::ProviderHttpError:
        case ErrorCode::ProviderUnavailable:
        case ErrorCode::ProviderMismatch:
            return 502;
        case ErrorCode::ProviderTimeout:
            return 504;
        case ErrorCode::BudgetExceeded:
            return 413;
        case ErrorCode::CorpusIo:
        case ErrorCode::Internal:
            return 500;
        default:
            return 400;
    }
}

}  // namespace lessonweave
