#include "pnn/model_io.hpp"

#include <cstring>
#include <fstream>

#include "pnn/binary_io.hpp"
#include "pnn/error.hpp"

namespace pnn {

namespace {

constexpr char kMagic[6] = {'P', 'N', 'N', 'M', 'D', 'L'};
constexpr std::uint16_t kVersion = 1;

} // namespace

void save_model(const std::filesystem::path& path, const Mlp& mlp) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    bin::write_bytes(out, kMagic, sizeof(kMagic));
    bin::write_u16(out, kVersion);
    bin::write_u64(out, mlp.spec.input_size);
    bin::write_u32(out, static_cast<std::uint32_t>(mlp.spec.layers.size()));
    for (const LayerSpec& layer : mlp.spec.layers) {
        bin::write_u64(out, layer.out_size);
        bin::write_u8(out, static_cast<std::uint8_t>(layer.activation));
    }
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
        for (std::size_t i = 0; i < mlp.weights[l].size(); ++i) {
            bin::write_f64(out, mlp.weights[l].data()[i]);
        }
        for (std::size_t i = 0; i < mlp.biases[l].size(); ++i) {
            bin::write_f64(out, mlp.biases[l].data()[i]);
        }
    }
    out.flush();
    if (!out) throw DataError("write to " + path.string() + " failed");
}

Mlp load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    bin::Reader r(in, path.string());

    char magic[6];
    r.read_bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw DataError(path.string() + ": not a model file (bad magic)");
    }
    const std::uint16_t version = r.read_u16();
    if (version != kVersion) {
        throw DataError(path.string() + ": unsupported model format version " +
                        std::to_string(version));
    }

    MlpSpec spec;
    spec.input_size = r.read_u64();
    const std::uint32_t n_layers = r.read_u32();
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        LayerSpec layer;
        layer.out_size = r.read_u64();
        const std::uint8_t act = r.read_u8();
        if (act > 1) {
            throw DataError(path.string() + ": unknown activation code " +
                            std::to_string(act) + " at byte " +
                            std::to_string(r.offset() - 1));
        }
        layer.activation = static_cast<Activation>(act);
        spec.layers.push_back(layer);
    }
    spec.validate();

    Mlp mlp{spec, {}, {}};
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const std::size_t in_size = spec.in_size(l);
        const std::size_t out_size = spec.layers[l].out_size;
        Matrix w(out_size, in_size);
        for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = r.read_f64();
        Matrix b(out_size, 1);
        for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = r.read_f64();
        mlp.weights.push_back(std::move(w));
        mlp.biases.push_back(std::move(b));
    }
    r.expect_eof();
    return mlp;
}

} // namespace pnn
