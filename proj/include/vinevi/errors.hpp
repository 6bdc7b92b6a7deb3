#pragma once

#include <stdexcept>

namespace vinevi {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// capture files / model files
struct BadMagic : Error { using Error::Error; };
struct UnsupportedVersion : Error { using Error::Error; };
struct Truncated : Error { using Error::Error; };
struct CorruptHeader : Error { using Error::Error; };

// image transform
struct EmptyPacket : Error { using Error::Error; };
struct ZeroStd : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// model loading / inference
struct SchemaError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct LabelMismatch : Error { using Error::Error; };

// metrics / platform
struct BindError : Error { using Error::Error; };
struct Unsupported : Error { using Error::Error; };

// configuration (CLI flags, policy strings, bad argument combinations)
struct ConfigError : Error { using Error::Error; };

}  // namespace vinevi
