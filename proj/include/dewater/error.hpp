#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dewater {

enum class Errc {
    DimensionMismatch,
    DecodeError,
    IoError,
    BadMagic,
    VersionUnsupported,
    TruncatedFile,
    WavelengthOrder,
    BandOutOfRange,
    NoCubesFound,
    EmptyMask,
    ZeroIlluminantBand,
    NegativeRange,
    NonFiniteInput,
    ImageTooSmall,
    ShapeMismatch,
    NonFiniteGradient,
    InvalidArgument,
};

constexpr std::string_view errc_name(Errc e) noexcept {
    switch (e) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DecodeError: return "DecodeError";
    case Errc::IoError: return "IoError";
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionUnsupported: return "VersionUnsupported";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::WavelengthOrder: return "WavelengthOrder";
    case Errc::BandOutOfRange: return "BandOutOfRange";
    case Errc::NoCubesFound: return "NoCubesFound";
    case Errc::EmptyMask: return "EmptyMask";
    case Errc::ZeroIlluminantBand: return "ZeroIlluminantBand";
    case Errc::NegativeRange: return "NegativeRange";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::ImageTooSmall: return "ImageTooSmall";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace dewater
