#include "rfad/core/binio.hpp"

#include <cstring>
#include <ostream>
#include <istream>

#include "rfad/core/error.hpp"

namespace rfad::io {

void write_u16(std::ostream& out, uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_f32(std::ostream& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

void write_bytes(std::ostream& out, const void* data, size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void read_bytes(std::istream& in, void* data, size_t n) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
        throw FormatError("unexpected end of binary data");
}

uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    read_bytes(in, b, 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    read_bytes(in, b, 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

float read_f32(std::istream& in) {
    uint32_t bits = read_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

std::string read_string(std::istream& in, size_t n) {
    std::string s(n, '\0');
    if (n > 0) read_bytes(in, s.data(), n);
    return s;
}

}  // namespace rfad::io
