#include "pnn/binary_io.hpp"

#include <bit>
#include <istream>
#include <ostream>

#include "pnn/error.hpp"

namespace pnn::bin {

namespace {

template <typename T>
void write_le(std::ostream& out, T v) {
    char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    }
    out.write(buf, sizeof(T));
}

} // namespace

void write_u8(std::ostream& out, std::uint8_t v) { write_le(out, v); }
void write_u16(std::ostream& out, std::uint16_t v) { write_le(out, v); }
void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }

void write_f64(std::ostream& out, double v) {
    write_le(out, std::bit_cast<std::uint64_t>(v));
}

void write_bytes(std::ostream& out, const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

Reader::Reader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

void Reader::read_bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
        throw DataError(name_ + ": truncated at byte " + std::to_string(offset_) +
                        " (wanted " + std::to_string(n) + " bytes, got " +
                        std::to_string(in_.gcount()) + ")");
    }
    offset_ += n;
}

namespace {

template <typename T>
T read_le(Reader& r) {
    unsigned char buf[sizeof(T)];
    r.read_bytes(buf, sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v = static_cast<T>(v | (static_cast<T>(buf[i]) << (8 * i)));
    }
    return v;
}

} // namespace

std::uint8_t Reader::read_u8() { return read_le<std::uint8_t>(*this); }
std::uint16_t Reader::read_u16() { return read_le<std::uint16_t>(*this); }
std::uint32_t Reader::read_u32() { return read_le<std::uint32_t>(*this); }
std::uint64_t Reader::read_u64() { return read_le<std::uint64_t>(*this); }

double Reader::read_f64() {
    return std::bit_cast<double>(read_le<std::uint64_t>(*this));
}

void Reader::expect_eof() {
    if (in_.peek() != std::istream::traits_type::eof()) {
        throw DataError(name_ + ": trailing bytes after offset " +
                        std::to_string(offset_));
    }
}

} // namespace pnn::bin
