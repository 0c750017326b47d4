#ifndef PNN_MODEL_IO_HPP
#define PNN_MODEL_IO_HPP

#include <filesystem>

#include "pnn/nn.hpp"

namespace pnn {

/// Writes the model to a little-endian binary container: magic, format
/// version, architecture, then raw weight and bias values per layer.
/// Round-trips are bit-exact.
void save_model(const std::filesystem::path& path, const Mlp& mlp);

/// Loads a model written by save_model. Malformed or truncated files throw
/// DataError with the failing byte offset.
Mlp load_model(const std::filesystem::path& path);

} // namespace pnn

#endif
