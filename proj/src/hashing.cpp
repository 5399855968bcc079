#include "sce/hashing.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <limits>
#include <memory>

#include "sce/errors.hpp"

namespace sce {

namespace {

struct DigestContext {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

    DigestContext() { EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr); }

    void update(const void* data, std::size_t size) { EVP_DigestUpdate(ctx.get(), data, size); }

    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
        static constexpr char digits[] = "0123456789abcdef";
        std::string out;
        out.reserve(len * 2);
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(digits[md[i] >> 4]);
            out.push_back(digits[md[i] & 0x0f]);
        }
        return out;
    }
};

}  // namespace

std::string sha256_hex(std::string_view data) {
    DigestContext d;
    d.update(data.data(), data.size());
    return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::io_error, "cannot open " + path.string());
    }
    DigestContext d;
    std::array<char, 1 << 14> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return d.hex();
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    std::string material = std::to_string(seed);
    material.push_back('\0');
    material.append(label);
    const std::string hex = sha256_hex(material);
    return std::stoull(hex.substr(0, 16), nullptr, 16);
}

std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound <= 1) {
        return 0;
    }
    // rejection sampling on the largest multiple of bound
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % bound);
    std::uint64_t draw = rng();
    while (draw >= limit) {
        draw = rng();
    }
    return draw % bound;
}

}  // namespace sce
