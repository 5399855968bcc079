#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>

namespace sce {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Subsystem seeds are derived from the single run seed by labeled hashing.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

// Portable bounded draw; std::uniform_int_distribution is implementation-defined,
// so runs would not reproduce across standard libraries.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t bound);

}  // namespace sce
