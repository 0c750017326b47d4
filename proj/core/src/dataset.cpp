#include "pnn/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>
#include <zlib.h>

#include "pnn/error.hpp"

namespace pnn {

namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& compressed,
                                 const std::string& name) {
    z_stream strm{};
    // 16+15: gzip wrapper with the maximum window.
    if (inflateInit2(&strm, 16 + 15) != Z_OK) {
        throw DataError(name + ": zlib initialization failed");
    }
    strm.next_in = const_cast<Bytef*>(compressed.data());
    strm.avail_in = static_cast<uInt>(compressed.size());

    std::vector<std::uint8_t> out;
    std::uint8_t chunk[1 << 16];
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        strm.next_out = chunk;
        strm.avail_out = sizeof(chunk);
        rc = inflate(&strm, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&strm);
            throw DataError(name + ": corrupt gzip stream (zlib error " +
                            std::to_string(rc) + ")");
        }
        out.insert(out.end(), chunk, chunk + (sizeof(chunk) - strm.avail_out));
    }
    inflateEnd(&strm);
    return out;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::string& name) {
    if (offset + 4 > bytes.size()) {
        throw DataError(name + ": truncated at byte " + std::to_string(offset) +
                        " (expected a 4-byte big-endian field)");
    }
    return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
           (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[offset + 3]);
}

} // namespace

std::vector<std::uint8_t> read_file_maybe_gzip(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes = read_all(path);
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
        return gunzip(bytes, path.string());
    }
    return bytes;
}

RawImages parse_idx_images(const std::vector<std::uint8_t>& bytes,
                           const std::string& name) {
    const std::uint32_t magic = read_be32(bytes, 0, name);
    if (magic != 0x00000803) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "0x%08x", magic);
        throw DataError(name + ": bad image magic " + buf + " at byte 0 (expected 0x00000803)");
    }
    RawImages img;
    img.count = read_be32(bytes, 4, name);
    img.rows = read_be32(bytes, 8, name);
    img.cols = read_be32(bytes, 12, name);
    if (img.count == 0 || img.rows == 0 || img.cols == 0) {
        throw DataError(name + ": zero-sized dimension in header");
    }
    std::uint64_t expected;
    if (__builtin_mul_overflow(static_cast<std::uint64_t>(img.count),
                               static_cast<std::uint64_t>(img.rows) * img.cols,
                               &expected)) {
        throw DataError(name + ": header dimensions overflow");
    }
    const std::size_t payload = bytes.size() - 16;
    if (payload != expected) {
        throw DataError(name + ": payload of " + std::to_string(payload) +
                        " bytes at offset 16 does not match header (" +
                        std::to_string(img.count) + "x" + std::to_string(img.rows) +
                        "x" + std::to_string(img.cols) + " = " +
                        std::to_string(expected) + ")");
    }
    img.pixels.assign(bytes.begin() + 16, bytes.end());
    return img;
}

std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes,
                                  const std::string& name) {
    const std::uint32_t magic = read_be32(bytes, 0, name);
    if (magic != 0x00000801) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "0x%08x", magic);
        throw DataError(name + ": bad label magic " + buf + " at byte 0 (expected 0x00000801)");
    }
    const std::uint32_t count = read_be32(bytes, 4, name);
    if (count == 0) throw DataError(name + ": zero labels in header");
    if (bytes.size() - 8 != count) {
        throw DataError(name + ": payload of " + std::to_string(bytes.size() - 8) +
                        " bytes at offset 8 does not match header count " +
                        std::to_string(count));
    }
    std::vector<int> labels(count);
    for (std::size_t i = 0; i < count; ++i) labels[i] = bytes[8 + i];
    return labels;
}

RawImages load_idx_images(const std::filesystem::path& path) {
    return parse_idx_images(read_file_maybe_gzip(path), path.string());
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
    return parse_idx_labels(read_file_maybe_gzip(path), path.string());
}

Dataset make_dataset(const RawImages& images, std::vector<int> labels,
                     std::size_t num_classes) {
    if (labels.size() != images.count) {
        throw DataError("image count " + std::to_string(images.count) +
                        " does not match label count " + std::to_string(labels.size()));
    }
    if (num_classes == 0) throw UsageError("class count must be at least 1");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
            throw DataError("label " + std::to_string(labels[i]) + " at index " +
                            std::to_string(i) + " out of range for " +
                            std::to_string(num_classes) + " classes");
        }
    }
    const std::size_t dim = images.rows * images.cols;
    Matrix pixels(images.count, dim);
    constexpr double scale = 1.0 / 255.0;
    for (std::size_t i = 0; i < images.pixels.size(); ++i) {
        pixels.data()[i] = static_cast<double>(images.pixels[i]) * scale;
    }
    return Dataset{std::move(pixels), std::move(labels), num_classes};
}

Dataset load_dataset(const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path,
                     std::size_t num_classes) {
    RawImages images = load_idx_images(images_path);
    std::vector<int> labels = load_idx_labels(labels_path);
    return make_dataset(images, std::move(labels), num_classes);
}

std::vector<std::size_t> class_counts(const Dataset& ds) {
    std::vector<std::size_t> counts(ds.num_classes, 0);
    for (int label : ds.labels) ++counts[static_cast<std::size_t>(label)];
    return counts;
}

Dataset stratified_fraction(const Dataset& ds, double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw UsageError("subset fraction must lie in (0, 1], got " +
                         std::to_string(fraction));
    }
    if (fraction == 1.0) return ds;

    const std::vector<std::size_t> counts = class_counts(ds);
    std::vector<std::size_t> quota(ds.num_classes, 0);
    for (std::size_t c = 0; c < ds.num_classes; ++c) {
        if (counts[c] > 0) {
            const auto want = static_cast<std::size_t>(
                std::llround(fraction * static_cast<double>(counts[c])));
            quota[c] = std::max<std::size_t>(1, std::min(want, counts[c]));
        }
    }

    // One pass in original order, taking each class until its quota fills;
    // deterministic with no randomness involved.
    std::vector<std::size_t> keep;
    std::vector<std::size_t> taken(ds.num_classes, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto c = static_cast<std::size_t>(ds.labels[i]);
        if (taken[c] < quota[c]) {
            keep.push_back(i);
            ++taken[c];
        }
    }

    Dataset out{gather_rows(ds.images, keep), {}, ds.num_classes};
    out.labels.reserve(keep.size());
    for (std::size_t i : keep) out.labels.push_back(ds.labels[i]);
    return out;
}

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
            EVP_MD_CTX_free(ctx_);
            throw DataError("sha256 initialization failed");
        }
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(const void* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx_, data, n) != 1) {
            throw DataError("sha256 update failed");
        }
    }

    std::string hex() {
        unsigned char digest[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_, digest, &len) != 1) {
            throw DataError("sha256 finalization failed");
        }
        static const char* alphabet = "0123456789abcdef";
        std::string out;
        out.reserve(2 * len);
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(alphabet[digest[i] >> 4]);
            out.push_back(alphabet[digest[i] & 0xf]);
        }
        return out;
    }

private:
    EVP_MD_CTX* ctx_;
};

} // namespace

std::string sha256_hex_of_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    Sha256 hash;
    char chunk[1 << 20];
    while (in) {
        in.read(chunk, sizeof(chunk));
        if (in.gcount() > 0) hash.update(chunk, static_cast<std::size_t>(in.gcount()));
    }
    return hash.hex();
}

std::string sha256_hex_of_bytes(const void* data, std::size_t n) {
    Sha256 hash;
    if (n > 0) hash.update(data, n);
    return hash.hex();
}

std::vector<std::string> verify_manifest(const std::filesystem::path& manifest,
                                         const std::filesystem::path& dir) {
    std::ifstream in(manifest);
    if (!in) throw DataError("cannot open " + manifest.string());

    std::vector<std::string> verified;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string digest, filename;
        fields >> digest >> filename;
        if (digest.size() != 64 || filename.empty()) {
            throw DataError(manifest.string() + ":" + std::to_string(line_no) +
                            ": expected '<sha256-hex>  <filename>'");
        }
        const std::filesystem::path target = dir / filename;
        if (!std::filesystem::exists(target)) {
            throw DataError(manifest.string() + ":" + std::to_string(line_no) +
                            ": missing file " + target.string());
        }
        const std::string actual = sha256_hex_of_file(target);
        if (actual != digest) {
            throw DataError(manifest.string() + ":" + std::to_string(line_no) + ": " +
                            target.string() + " digest mismatch (expected " + digest +
                            ", got " + actual + ")");
        }
        verified.push_back(filename);
    }
    if (verified.empty()) {
        throw DataError(manifest.string() + ": no entries to verify");
    }
    return verified;
}

} // namespace pnn
