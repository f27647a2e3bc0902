#pragma once

// Little-endian container used for sensing matrices, measurement streams and
// dictionaries: 8-byte magic, two u32 dimensions, then payload.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace spts::binary {

using Magic = std::array<char, 8>;

Magic make_magic(std::string_view text);

void write_magic(std::ostream& out, const Magic& magic);
void write_u32(std::ostream& out, std::uint32_t value);
void write_f64(std::ostream& out, double value);

/// Throws DomainError if the next eight bytes differ from `expected`.
void expect_magic(std::istream& in, const Magic& expected);
std::uint32_t read_u32(std::istream& in);
double read_f64(std::istream& in);

}  // namespace spts::binary
