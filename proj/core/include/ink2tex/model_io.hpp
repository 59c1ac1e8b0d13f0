#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "ink2tex/params.hpp"

namespace ink2tex {

inline constexpr char kModelMagic[] = "INK2TEX";
inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Container layout, all integers little-endian:
///   "INK2TEX" (7 bytes), u32 version, u64 length + canonical JSON config,
///   u64 tensor count, then per tensor: u32 name length, name, u32 rank, u64 dims[rank],
///   f64 values[prod(dims)].
void save_model(const ModelParams& params, std::ostream& out);
void save_model(const ModelParams& params, const std::string& path);

/// Reads a whole container. When `expected` is given, the stored tensors are checked against
/// its parameter table instead of the stored config's; a missing tensor raises
/// MissingKeyError and a wrong shape ShapeMismatchError, both naming the key. Nothing is
/// returned unless the whole file is consistent.
ModelParams load_model(std::istream& in, const ModelConfig* expected = nullptr);
ModelParams load_model(const std::string& path, const ModelConfig* expected = nullptr);

}  // namespace ink2tex
