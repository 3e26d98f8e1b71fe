#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace socorient {

enum class Errc {
  // data / ingest
  MalformedRecord,
  DuplicateConversationId,
  DuplicateUtteranceId,
  EmptyContext,
  TooShort,
  CorruptCache,
  CorruptModel,
  EmptyCorpus,
  MissingTag,
  Io,
  InvalidArgument,
  // tagging / transport
  UtteranceTooLong,
  MalformedTable,
  UnknownTag,
  MissingUtterance,
  IdMismatch,
  CoverageGap,
  TransportError,
  ProtocolError,
  // features / training
  EmptyConversation,
  SchemaMismatch,
  EmptyClass,
  SingleClass,
  DimensionMismatch,
  DivergenceDetected,
  // analysis
  LengthMismatch,
  PerfectExpectedAgreement,
  InterventionAborted,
};

constexpr std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::DuplicateConversationId: return "DuplicateConversationId";
    case Errc::DuplicateUtteranceId: return "DuplicateUtteranceId";
    case Errc::EmptyContext: return "EmptyContext";
    case Errc::TooShort: return "TooShort";
    case Errc::CorruptCache: return "CorruptCache";
    case Errc::CorruptModel: return "CorruptModel";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::MissingTag: return "MissingTag";
    case Errc::Io: return "Io";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::UtteranceTooLong: return "UtteranceTooLong";
    case Errc::MalformedTable: return "MalformedTable";
    case Errc::UnknownTag: return "UnknownTag";
    case Errc::MissingUtterance: return "MissingUtterance";
    case Errc::IdMismatch: return "IdMismatch";
    case Errc::CoverageGap: return "CoverageGap";
    case Errc::TransportError: return "TransportError";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::EmptyConversation: return "EmptyConversation";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::EmptyClass: return "EmptyClass";
    case Errc::SingleClass: return "SingleClass";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DivergenceDetected: return "DivergenceDetected";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::PerfectExpectedAgreement: return "PerfectExpectedAgreement";
    case Errc::InterventionAborted: return "InterventionAborted";
  }
  return "Unknown";
}

// Errors that indicate bad input data rather than a failing stage.
constexpr bool is_data_error(Errc c) {
  switch (c) {
    case Errc::MalformedRecord:
    case Errc::DuplicateConversationId:
    case Errc::DuplicateUtteranceId:
    case Errc::EmptyContext:
    case Errc::TooShort:
    case Errc::CorruptCache:
    case Errc::CorruptModel:
    case Errc::EmptyCorpus:
    case Errc::MissingTag:
    case Errc::Io:
      return true;
    default:
      return false;
  }
}

/// Single exception type for the library. `code()` names the failure,
/// `what()` carries the human-readable detail (line numbers, ids, offsets).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Error with a location: a 1-based line number or a byte offset.
class LocatedError : public Error {
 public:
  LocatedError(Errc code, std::uint64_t location, const std::string& detail)
      : Error(code, detail), location_(location) {}

  std::uint64_t location() const noexcept { return location_; }

 private:
  std::uint64_t location_;
};

}  // namespace socorient
