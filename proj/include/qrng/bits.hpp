#pragma once

#include <bit>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qrng {

/// Bit sequence backed by 64-bit words.  Bit 0 is the first bit of the
/// sequence and maps to the least significant bit of word 0.  Bits past
/// size() are kept zero, so whole-word XOR/parity/popcount never need
/// tail masking.
class BitVector {
public:
    BitVector() = default;

    explicit BitVector(std::size_t bit_count)
        : nbits_(bit_count), words_((bit_count + 63) / 64, 0) {}

    std::size_t size() const noexcept { return nbits_; }
    bool empty() const noexcept { return nbits_ == 0; }

    bool get(std::size_t i) const noexcept {
        assert(i < nbits_);
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }

    void set(std::size_t i, bool v) noexcept {
        assert(i < nbits_);
        const std::uint64_t mask = std::uint64_t{1} << (i & 63);
        if (v)
            words_[i >> 6] |= mask;
        else
            words_[i >> 6] &= ~mask;
    }

    void reset() noexcept {
        for (auto& w : words_) w = 0;
    }

    void append(bool b) {
        if ((nbits_ & 63) == 0) words_.push_back(0);
        ++nbits_;
        if (b) words_[(nbits_ - 1) >> 6] |= std::uint64_t{1} << ((nbits_ - 1) & 63);
    }

    void append(const BitVector& other) {
        for (std::size_t i = 0; i < other.size(); ++i) append(other.get(i));
    }

    BitVector& operator^=(const BitVector& rhs) {
        if (rhs.nbits_ != nbits_)
            throw std::invalid_argument("BitVector: XOR size mismatch");
        for (std::size_t w = 0; w < words_.size(); ++w) words_[w] ^= rhs.words_[w];
        return *this;
    }

    /// Parity (GF(2) inner product) of the bitwise AND with rhs.
    bool parity_and(const BitVector& rhs) const {
        if (rhs.nbits_ != nbits_)
            throw std::invalid_argument("BitVector: parity size mismatch");
        std::uint64_t acc = 0;
        for (std::size_t w = 0; w < words_.size(); ++w) acc ^= words_[w] & rhs.words_[w];
        return std::popcount(acc) & 1u;
    }

    std::uint64_t ones() const noexcept {
        std::uint64_t n = 0;
        for (auto w : words_) n += std::popcount(w);
        return n;
    }

    std::span<const std::uint64_t> words() const noexcept { return words_; }

    std::string str() const {
        std::string s(nbits_, '0');
        for (std::size_t i = 0; i < nbits_; ++i)
            if (get(i)) s[i] = '1';
        return s;
    }

    friend bool operator==(const BitVector&, const BitVector&) = default;

private:
    std::size_t nbits_ = 0;
    std::vector<std::uint64_t> words_;
};

inline BitVector bits_from_string(std::string_view s) {
    BitVector v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '1')
            v.set(i, true);
        else if (s[i] != '0')
            throw std::invalid_argument("bits_from_string: expected '0' or '1'");
    }
    return v;
}

/// Reads bit_count bits from a byte buffer, consuming each byte MSB-first.
/// Excess bits in the buffer are ignored.
inline BitVector bits_from_bytes_msb_first(std::span<const std::uint8_t> bytes,
                                           std::size_t bit_count) {
    if (bytes.size() * 8 < bit_count)
        throw std::invalid_argument("bits_from_bytes_msb_first: buffer too short");
    BitVector v(bit_count);
    for (std::size_t i = 0; i < bit_count; ++i)
        v.set(i, (bytes[i >> 3] >> (7 - (i & 7))) & 1u);
    return v;
}

struct PackedBits {
    std::vector<std::uint8_t> bytes;
    unsigned pad_bits = 0;  // zero bits appended on the right of the last byte
};

/// MSB-first packing: bit 0 of the sequence lands in the top bit of byte 0.
inline PackedBits pack_bits(const BitVector& bits) {
    PackedBits out;
    out.bytes.assign((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits.get(i)) out.bytes[i >> 3] |= std::uint8_t(1u << (7 - (i & 7)));
    out.pad_bits = unsigned((8 - bits.size() % 8) % 8);
    return out;
}

inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace qrng
