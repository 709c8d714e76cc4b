#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "miprune/errors.hpp"

namespace miprune {

// All binary artifacts are little-endian; these helpers spell out the byte
// order so the formats do not depend on host endianness.

void write_u8(std::ostream& os, uint8_t v);
void write_u32(std::ostream& os, uint32_t v);
void write_f32(std::ostream& os, float v);
void write_f64(std::ostream& os, double v);

// Readers throw FormatError naming `what` on short reads.
uint8_t read_u8(std::istream& is, const std::string& what);
uint32_t read_u32(std::istream& is, const std::string& what);
float read_f32(std::istream& is, const std::string& what);
double read_f64(std::istream& is, const std::string& what);

void read_bytes(std::istream& is, void* dst, size_t n, const std::string& what);
void write_bytes(std::ostream& os, const void* src, size_t n);

std::ofstream open_output(const std::filesystem::path& path);
std::ifstream open_input(const std::filesystem::path& path);

void expect_magic(std::istream& is, const std::array<char, 4>& magic,
                  const std::string& what);
void write_magic(std::ostream& os, const std::array<char, 4>& magic);

// Shortest round-trip decimal form (std::to_chars); used for every float
// that lands in a text artifact so reruns are byte-identical.
std::string format_double(double v);

}  // namespace miprune
