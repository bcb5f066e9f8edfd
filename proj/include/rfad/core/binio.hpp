#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace rfad::io {

// Explicit little-endian scalar IO. Readers throw FormatError on truncation.
void write_u16(std::ostream& out, uint16_t v);
void write_u32(std::ostream& out, uint32_t v);
void write_f32(std::ostream& out, float v);
void write_bytes(std::ostream& out, const void* data, size_t n);

uint16_t read_u16(std::istream& in);
uint32_t read_u32(std::istream& in);
float read_f32(std::istream& in);
void read_bytes(std::istream& in, void* data, size_t n);
std::string read_string(std::istream& in, size_t n);

}  // namespace rfad::io
