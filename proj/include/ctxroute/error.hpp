#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctxroute {

enum class Errc {
    DuplicateId,
    RoundFromFuture,
    RoundOutOfRange,
    RoundMismatch,
    NegativeAge,
    TooManyItems,
    TemplateMismatch,
    BackendFailure,
    ConfigError,
    NegativeInterval,
    EmptyRound,
    NoJsonFound,
    ScoreOutOfRange,
    MissingField,
    ParseError,
    UnknownFormat,
};

std::string_view to_string(Errc code) noexcept;

// Every failure raised by the library carries one of the codes above so
// callers (and tests) can branch on the taxonomy rather than on message text.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace ctxroute
