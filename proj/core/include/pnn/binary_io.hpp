#ifndef PNN_BINARY_IO_HPP
#define PNN_BINARY_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

namespace pnn::bin {

// Fixed-width little-endian primitives shared by the on-disk formats.

void write_u8(std::ostream& out, std::uint8_t v);
void write_u16(std::ostream& out, std::uint16_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
void write_bytes(std::ostream& out, const void* data, std::size_t n);

/// Checked reader; failures throw DataError naming the stream and the byte
/// offset where the read started.
class Reader {
public:
    Reader(std::istream& in, std::string name);

    std::uint8_t read_u8();
    std::uint16_t read_u16();
    std::uint32_t read_u32();
    std::uint64_t read_u64();
    double read_f64();
    void read_bytes(void* data, std::size_t n);

    std::size_t offset() const { return offset_; }
    void expect_eof();

private:
    std::istream& in_;
    std::string name_;
    std::size_t offset_ = 0;
};

} // namespace pnn::bin

#endif
