#include "ctxroute/error.hpp"

namespace ctxroute {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::DuplicateId:      return "DuplicateId";
        case Errc::RoundFromFuture:  return "RoundFromFuture";
        case Errc::RoundOutOfRange:  return "RoundOutOfRange";
        case Errc::RoundMismatch:    return "RoundMismatch";
        case Errc::NegativeAge:      return "NegativeAge";
        case Errc::TooManyItems:     return "TooManyItems";
        case Errc::TemplateMismatch: return "TemplateMismatch";
        case Errc::BackendFailure:   return "BackendFailure";
        case Errc::ConfigError:      return "ConfigError";
        case Errc::NegativeInterval: return "NegativeInterval";
        case Errc::EmptyRound:       return "EmptyRound";
        case Errc::NoJsonFound:      return "NoJsonFound";
        case Errc::ScoreOutOfRange:  return "ScoreOutOfRange";
        case Errc::MissingField:     return "MissingField";
        case Errc::ParseError:       return "ParseError";
        case Errc::UnknownFormat:    return "UnknownFormat";
    }
    return "Unknown";
}

}  // namespace ctxroute
