#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "eegvc/types.hpp"

namespace eegvc::binio {

// Little-endian primitives over fstreams. Readers throw FormatError on a
// short read so truncation surfaces as a structured error.

void write_bytes(std::ofstream& o, const void* p, std::size_t n);
void write_u8(std::ofstream& o, std::uint8_t v);
void write_u16(std::ofstream& o, std::uint16_t v);
void write_u32(std::ofstream& o, std::uint32_t v);
void write_u64(std::ofstream& o, std::uint64_t v);
void write_f64(std::ofstream& o, double v);
void write_f32(std::ofstream& o, float v);
void write_str(std::ofstream& o, const std::string& s);  // u32 length + bytes

void read_bytes(std::ifstream& i, void* p, std::size_t n, const char* what);
std::uint8_t read_u8(std::ifstream& i, const char* what);
std::uint16_t read_u16(std::ifstream& i, const char* what);
std::uint32_t read_u32(std::ifstream& i, const char* what);
std::uint64_t read_u64(std::ifstream& i, const char* what);
double read_f64(std::ifstream& i, const char* what);
float read_f32(std::ifstream& i, const char* what);
std::string read_str(std::ifstream& i, const char* what);

}  // namespace eegvc::binio
