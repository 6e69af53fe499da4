#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "qrng/bits.hpp"

namespace qrng {

/// Extractor geometry: each sample contributes n input bits, yields m hashed
/// bits, and s consecutive samples are concatenated per hash.  The full
/// matrix is M x N with M = s*m rows and N = s*n columns.
struct HashParams {
    std::size_t n = 12;
    std::size_t m = 8;
    std::size_t s = 60;

    std::size_t input_bits() const noexcept { return s * n; }    // N
    std::size_t output_bits() const noexcept { return s * m; }   // M
    std::size_t seed_bits() const noexcept { return s * (m + n) - 1; }
    std::size_t seed_bytes() const noexcept { return (seed_bits() + 7) / 8; }

    void validate() const {
        if (m < 1 || m >= n) throw std::invalid_argument("HashParams: need 1 <= m < n");
        if (s < 1) throw std::invalid_argument("HashParams: need s >= 1");
        if (n > 64)
            throw std::invalid_argument("HashParams: per-sample width above 64 bits unsupported");
    }
};

/// Seed of exactly s*(m+n)-1 bits; the length check is mandatory.
class ToeplitzSeed {
public:
    ToeplitzSeed(BitVector bits, const HashParams& params) : bits_(std::move(bits)) {
        params.validate();
        if (bits_.size() != params.seed_bits())
            throw std::invalid_argument("ToeplitzSeed: seed length must equal s*(m+n)-1");
    }

    /// Consumes seed bytes MSB-first; excess bits beyond s*(m+n)-1 are ignored.
    static ToeplitzSeed from_bytes(std::span<const std::uint8_t> bytes,
                                   const HashParams& params) {
        params.validate();
        return ToeplitzSeed(bits_from_bytes_msb_first(bytes, params.seed_bits()), params);
    }

    static ToeplitzSeed from_host_entropy(const HashParams& params) {
        params.validate();
        std::random_device rd;
        BitVector bits(params.seed_bits());
        for (std::size_t i = 0; i < bits.size(); i += 32) {
            const std::uint32_t word = rd();
            for (std::size_t b = 0; b < 32 && i + b < bits.size(); ++b)
                bits.set(i + b, (word >> b) & 1u);
        }
        return ToeplitzSeed(std::move(bits), params);
    }

    const BitVector& bits() const noexcept { return bits_; }

private:
    BitVector bits_;
};

/// One per-sample column block of the full matrix: columns [index*n,
/// (index+1)*n), stored column-major so a sample's bits select columns to XOR.
struct SampleSlice {
    std::size_t index = 0;
    std::vector<BitVector> columns;  // n columns, each output_bits() long
};

/// M x N binary Toeplitz matrix with entry(i, j) = seed[i - j + N - 1];
/// constant along every descending diagonal.
class ToeplitzMatrix {
public:
    ToeplitzMatrix(ToeplitzSeed seed, const HashParams& params)
        : params_(params), seed_(std::move(seed)) {
        params_.validate();
        const std::size_t rows = params_.output_bits();
        const std::size_t cols = params_.input_bits();
        rows_.reserve(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            BitVector row(cols);
            for (std::size_t j = 0; j < cols; ++j) row.set(j, entry_from_seed(i, j));
            rows_.push_back(std::move(row));
        }
    }

    const HashParams& params() const noexcept { return params_; }
    const ToeplitzSeed& seed() const noexcept { return seed_; }
    const std::vector<BitVector>& rows() const noexcept { return rows_; }

    bool entry(std::size_t i, std::size_t j) const {
        if (i >= params_.output_bits() || j >= params_.input_bits())
            throw std::out_of_range("ToeplitzMatrix: entry index out of range");
        return entry_from_seed(i, j);
    }

private:
    bool entry_from_seed(std::size_t i, std::size_t j) const noexcept {
        return seed_.bits().get(i - j + params_.input_bits() - 1);
    }

    HashParams params_;
    ToeplitzSeed seed_;
    std::vector<BitVector> rows_;
};

inline ToeplitzMatrix build_toeplitz(ToeplitzSeed seed, const HashParams& params) {
    return ToeplitzMatrix(std::move(seed), params);
}

/// Dense GF(2) matrix-vector product: output bit i is the parity of the AND
/// between matrix row i and the input.
inline BitVector hash_dense(const ToeplitzMatrix& matrix, const BitVector& input) {
    if (input.size() != matrix.params().input_bits())
        throw std::invalid_argument("hash_dense: input length must equal s*n");
    BitVector out(matrix.params().output_bits());
    const auto& rows = matrix.rows();
    for (std::size_t i = 0; i < rows.size(); ++i) out.set(i, rows[i].parity_and(input));
    return out;
}

/// Column block for sample k; concatenating slices 0..s-1 left to right
/// reconstructs the full matrix.
inline SampleSlice sample_slice(const ToeplitzMatrix& matrix, std::size_t k) {
    const auto& p = matrix.params();
    if (k >= p.s) throw std::out_of_range("sample_slice: sample index out of range");
    SampleSlice slice;
    slice.index = k;
    slice.columns.resize(p.n, BitVector(p.output_bits()));
    const auto& rows = matrix.rows();
    for (std::size_t i = 0; i < p.output_bits(); ++i)
        for (std::size_t t = 0; t < p.n; ++t)
            if (rows[i].get(k * p.n + t)) slice.columns[t].set(i, true);
    return slice;
}

/// Running XOR accumulator for the streaming hash; owns no matrix data.
class StreamState {
public:
    explicit StreamState(const HashParams& params)
        : params_(params), accumulator_(params.output_bits()) {
        params_.validate();
    }

    const BitVector& accumulator() const noexcept { return accumulator_; }
    std::size_t samples_absorbed() const noexcept { return absorbed_; }
    const HashParams& params() const noexcept { return params_; }

    friend std::optional<BitVector> stream_absorb(StreamState&, std::uint64_t,
                                                  const SampleSlice&);

private:
    HashParams params_;
    BitVector accumulator_;
    std::size_t absorbed_ = 0;
};

/// Absorbs one sample: XORs the slice columns selected by the sample bits
/// (MSB first) into the accumulator.  Once s samples have arrived the
/// accumulated hash is emitted and the state resets.
inline std::optional<BitVector> stream_absorb(StreamState& state, std::uint64_t sample,
                                              const SampleSlice& slice) {
    const auto& p = state.params_;
    if (state.absorbed_ >= p.s)
        throw std::logic_error("stream_absorb: state already holds s samples");
    if (slice.index != state.absorbed_)
        throw std::invalid_argument("stream_absorb: slice index does not match stream position");
    if (slice.columns.size() != p.n)
        throw std::invalid_argument("stream_absorb: slice width does not match params");

    for (std::size_t t = 0; t < p.n; ++t)
        if ((sample >> (p.n - 1 - t)) & 1u) state.accumulator_ ^= slice.columns[t];

    if (++state.absorbed_ == p.s) {
        BitVector hash = state.accumulator_;
        state.accumulator_.reset();
        state.absorbed_ = 0;
        return hash;
    }
    return std::nullopt;
}

/// Streams ADC codes through the slice scheme.  Each code is rendered as its
/// n-bit two's complement pattern, most significant bit first; emitted hashes
/// are concatenated and any trailing partial group is discarded.
inline BitVector extract_stream(std::span<const std::int32_t> codes, const HashParams& params,
                                const ToeplitzSeed& seed) {
    params.validate();
    const ToeplitzMatrix matrix(seed, params);

    std::vector<SampleSlice> slices;
    slices.reserve(params.s);
    for (std::size_t k = 0; k < params.s; ++k) slices.push_back(sample_slice(matrix, k));

    const std::uint64_t mask =
        params.n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << params.n) - 1;

    BitVector out;
    StreamState state(params);
    for (const std::int32_t code : codes) {
        const std::uint64_t sample = std::uint64_t(std::int64_t(code)) & mask;
        if (auto hash = stream_absorb(state, sample, slices[state.samples_absorbed()]))
            out.append(*hash);
    }
    return out;
}

}  // namespace qrng
