#include "pnn/sil.hpp"

#include <cstring>
#include <fstream>
#include <string>

#include "pnn/binary_io.hpp"
#include "pnn/error.hpp"
#include "pnn/rng.hpp"

namespace pnn {

SilMatrix generate_sil(std::size_t boundary_size, std::size_t num_classes,
                       double kappa, std::uint64_t seed) {
    if (boundary_size == 0 || num_classes == 0) {
        throw UsageError("label matrix needs positive dimensions, got " +
                         std::to_string(boundary_size) + "x" +
                         std::to_string(num_classes));
    }
    if (kappa < 0.0) {
        throw UsageError("target scale must be non-negative, got " +
                         std::to_string(kappa));
    }
    SilMatrix sil{kappa, seed, Matrix(boundary_size, num_classes)};
    Rng rng(seed);
    // Scale outside the draw so the stream advances identically for every
    // kappa, including zero.
    for (std::size_t i = 0; i < sil.values.size(); ++i) {
        sil.values.data()[i] = kappa * rng.next_double();
    }
    return sil;
}

Matrix sil_targets_for(const SilMatrix& sil, const std::vector<int>& labels) {
    if (labels.empty()) throw UsageError("target lookup needs at least one label");
    Matrix targets(labels.size(), sil.boundary_size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= sil.num_classes()) {
            throw UsageError("label " + std::to_string(label) + " out of range for " +
                             std::to_string(sil.num_classes()) + " classes");
        }
        double* row = targets.row_ptr(i);
        for (std::size_t d = 0; d < sil.boundary_size(); ++d) {
            row[d] = sil.values.at(d, static_cast<std::size_t>(label));
        }
    }
    return targets;
}

namespace {

constexpr char kMagic[6] = {'P', 'N', 'N', 'S', 'I', 'L'};
constexpr std::uint16_t kVersion = 1;

} // namespace

void save_sil(const std::filesystem::path& path, const SilMatrix& sil) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    bin::write_bytes(out, kMagic, sizeof(kMagic));
    bin::write_u16(out, kVersion);
    bin::write_f64(out, sil.kappa);
    bin::write_u64(out, sil.seed);
    bin::write_u64(out, sil.values.rows());
    bin::write_u64(out, sil.values.cols());
    for (std::size_t i = 0; i < sil.values.size(); ++i) {
        bin::write_f64(out, sil.values.data()[i]);
    }
    out.flush();
    if (!out) throw DataError("write to " + path.string() + " failed");
}

SilMatrix load_sil(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    bin::Reader r(in, path.string());
    char magic[6];
    r.read_bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw DataError(path.string() + ": not an intermediate-label file (bad magic)");
    }
    const std::uint16_t version = r.read_u16();
    if (version != kVersion) {
        throw DataError(path.string() + ": unsupported format version " +
                        std::to_string(version));
    }
    const double kappa = r.read_f64();
    const std::uint64_t seed = r.read_u64();
    const std::uint64_t rows = r.read_u64();
    const std::uint64_t cols = r.read_u64();
    if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20)) {
        throw DataError(path.string() + ": implausible matrix shape " +
                        std::to_string(rows) + "x" + std::to_string(cols));
    }
    Matrix values(rows, cols);
    for (std::size_t i = 0; i < values.size(); ++i) values.data()[i] = r.read_f64();
    r.expect_eof();
    return SilMatrix{kappa, seed, std::move(values)};
}

} // namespace pnn
