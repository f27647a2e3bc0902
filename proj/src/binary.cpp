#include "spts/binary.hpp"

#include "spts/core.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace spts::binary {

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFFu);
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) throw DomainError("truncated binary file");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

Magic make_magic(std::string_view text) {
  if (text.size() != 8) throw DomainError("magic must be eight characters");
  Magic m{};
  std::memcpy(m.data(), text.data(), 8);
  return m;
}

void write_magic(std::ostream& out, const Magic& magic) { out.write(magic.data(), magic.size()); }

void write_u32(std::ostream& out, std::uint32_t value) { put_le(out, value); }

void write_f64(std::ostream& out, double value) { put_le(out, std::bit_cast<std::uint64_t>(value)); }

void expect_magic(std::istream& in, const Magic& expected) {
  Magic got{};
  if (!in.read(got.data(), got.size()) || got != expected) {
    throw DomainError("bad magic, expected " + std::string(expected.data(), expected.size()));
  }
}

std::uint32_t read_u32(std::istream& in) { return get_le<std::uint32_t>(in); }

double read_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

}  // namespace spts::binary
