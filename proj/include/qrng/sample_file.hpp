#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "qrng/errors.hpp"

namespace qrng {

/// Raw sample file: a 16-byte header followed by one little-endian 16-bit
/// two's complement word per ADC code (sign-extended from the declared
/// width).
///
///   offset 0  "QRNG"        magic
///   offset 4  u8 version    currently 1
///   offset 5  u8 bits       declared ADC width (<= 16)
///   offset 6  u8 channel    'X', 'P' or 'Z'
///   offset 7  u8 reserved   0
///   offset 8  u64le count   number of samples
inline constexpr std::uint8_t sample_file_version = 1;

struct DecodedSamples {
    std::vector<std::int32_t> codes;
    char channel = 'X';
    int bits = 12;
};

namespace detail {

inline void put_u64le(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = char((v >> (8 * i)) & 0xff);
    out.write(b.data(), b.size());
}

inline std::uint64_t get_u64le(std::istream& in) {
    std::array<unsigned char, 8> b{};
    in.read(reinterpret_cast<char*>(b.data()), b.size());
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

inline void check_code_range(std::int32_t code, int bits, const char* who) {
    const std::int32_t hi = (std::int32_t{1} << (bits - 1)) - 1;
    const std::int32_t lo = -(std::int32_t{1} << (bits - 1));
    if (code < lo || code > hi)
        throw PipelineError(std::string(who) + ": code outside declared bit width");
}

}  // namespace detail

inline void encode_samples(std::span<const std::int32_t> codes, char channel, int bits,
                           std::ostream& out) {
    if (bits < 1 || bits > 16)
        throw std::invalid_argument("encode_samples: bits must lie in [1, 16]");
    for (const auto code : codes) {
        const std::int32_t hi = (std::int32_t{1} << (bits - 1)) - 1;
        const std::int32_t lo = -(std::int32_t{1} << (bits - 1));
        if (code < lo || code > hi)
            throw std::invalid_argument("encode_samples: code outside declared bit width");
    }

    out.write("QRNG", 4);
    out.put(char(sample_file_version));
    out.put(char(bits));
    out.put(channel);
    out.put(0);
    detail::put_u64le(out, codes.size());
    for (const auto code : codes) {
        const auto w = std::uint16_t(std::int16_t(code));
        out.put(char(w & 0xff));
        out.put(char((w >> 8) & 0xff));
    }
    if (!out) throw PipelineError("encode_samples: write failed");
}

inline DecodedSamples decode_samples(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || std::string_view(magic.data(), 4) != "QRNG")
        throw PipelineError("decode_samples: bad magic");

    const int version = in.get();
    const int bits = in.get();
    const int channel = in.get();
    in.get();  // reserved
    if (!in) throw PipelineError("decode_samples: truncated header");
    if (version != sample_file_version) throw PipelineError("decode_samples: unknown version");
    if (bits < 1 || bits > 16) throw PipelineError("decode_samples: bad bit width");

    const std::uint64_t count = detail::get_u64le(in);
    if (!in) throw PipelineError("decode_samples: truncated header");

    DecodedSamples out;
    out.channel = char(channel);
    out.bits = bits;
    out.codes.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const int lo = in.get();
        const int hi = in.get();
        if (lo < 0 || hi < 0) throw PipelineError("decode_samples: truncated payload");
        const auto code = std::int32_t(std::int16_t(std::uint16_t(lo) | (std::uint16_t(hi) << 8)));
        detail::check_code_range(code, bits, "decode_samples");
        out.codes.push_back(code);
    }
    return out;
}

inline void encode_samples_file(std::span<const std::int32_t> codes, char channel, int bits,
                                const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PipelineError("encode_samples: cannot open " + path.string());
    encode_samples(codes, channel, bits, out);
}

inline DecodedSamples decode_samples_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PipelineError("decode_samples: cannot open " + path.string());
    return decode_samples(in);
}

}  // namespace qrng
