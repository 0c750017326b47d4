#ifndef PNN_DATASET_HPP
#define PNN_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pnn/matrix.hpp"

namespace pnn {

/// Raw ubyte images as stored in an IDX file, before scaling.
struct RawImages {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> pixels; // count * rows * cols, row-major
};

/// Reads a file, transparently inflating it when it starts with the gzip
/// signature bytes 1f 8b.
std::vector<std::uint8_t> read_file_maybe_gzip(const std::filesystem::path& path);

// IDX decoding. Errors are DataError and include the byte offset of the
// offending field. `name` labels the source in messages.
RawImages parse_idx_images(const std::vector<std::uint8_t>& bytes,
                           const std::string& name);
std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes,
                                  const std::string& name);

RawImages load_idx_images(const std::filesystem::path& path);
std::vector<int> load_idx_labels(const std::filesystem::path& path);

/// Flattened dataset ready for training: one image per row, pixel values
/// scaled to [0, 1] by 1/255.
struct Dataset {
    Matrix images;
    std::vector<int> labels;
    std::size_t num_classes = 0;

    std::size_t size() const { return labels.size(); }
};

Dataset make_dataset(const RawImages& images, std::vector<int> labels,
                     std::size_t num_classes);
Dataset load_dataset(const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path,
                     std::size_t num_classes);

std::vector<std::size_t> class_counts(const Dataset& ds);

/// Deterministic class-stratified subset: keeps the first
/// max(1, round(fraction * n_c)) samples of each class c in original
/// order. fraction must lie in (0, 1]; 1 returns the dataset unchanged.
Dataset stratified_fraction(const Dataset& ds, double fraction);

std::string sha256_hex_of_file(const std::filesystem::path& path);
std::string sha256_hex_of_bytes(const void* data, std::size_t n);

/// Verifies `sha256sum`-style manifest lines ("<hex>  <filename>") against
/// files resolved relative to dir. Throws DataError on the first missing
/// file or digest mismatch; returns the verified filenames.
std::vector<std::string> verify_manifest(const std::filesystem::path& manifest,
                                         const std::filesystem::path& dir);

} // namespace pnn

#endif
