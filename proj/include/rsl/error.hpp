#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rsl {

enum class ErrorCode {
    InvalidArgument,
    ConfigInfeasible,
    OracleFailure,
    SessionNotActive,
    TaskIsTeamButFullSettingGiven,
    TaskIsSoloButPartialSettingGiven,
    NothingEvaluated,
    SessionNotCompleted,
    TaskNotFinalized,
    InconsistentRecord,
    InsufficientData,
    DegenerateVariance,
    EmptyCell,
    RankDeficient,
    UnknownSession,
    DuplicateSession,
    PersistenceFailure,
    BindFailure,
    ParseError,
};

inline constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ConfigInfeasible: return "ConfigInfeasible";
        case ErrorCode::OracleFailure: return "OracleFailure";
        case ErrorCode::SessionNotActive: return "SessionNotActive";
        case ErrorCode::TaskIsTeamButFullSettingGiven: return "TaskIsTeamButFullSettingGiven";
        case ErrorCode::TaskIsSoloButPartialSettingGiven: return "TaskIsSoloButPartialSettingGiven";
        case ErrorCode::NothingEvaluated: return "NothingEvaluated";
        case ErrorCode::SessionNotCompleted: return "SessionNotCompleted";
        case ErrorCode::TaskNotFinalized: return "TaskNotFinalized";
        case ErrorCode::InconsistentRecord: return "InconsistentRecord";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::DegenerateVariance: return "DegenerateVariance";
        case ErrorCode::EmptyCell: return "EmptyCell";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::UnknownSession: return "UnknownSession";
        case ErrorCode::DuplicateSession: return "DuplicateSession";
        case ErrorCode::PersistenceFailure: return "PersistenceFailure";
        case ErrorCode::BindFailure: return "BindFailure";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code; the
/// service layer maps codes onto protocol errors.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace rsl
