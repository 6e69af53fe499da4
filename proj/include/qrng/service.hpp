#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <ctime>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "qrng/pipeline.hpp"

namespace qrng {

namespace detail {

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (const auto b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

/// Bounded FIFO of extracted bytes.  The producer blocks while full; readers
/// either take all n bytes at once or nothing.  Bytes leave the queue exactly
/// once.
class EntropyBuffer {
public:
    explicit EntropyBuffer(std::size_t capacity) : capacity_(capacity) {}

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t fill() const noexcept { return fill_.load(); }
    std::uint64_t total_served() const noexcept { return served_.load(); }

    /// Appends all bytes, blocking while the buffer is full and inserting
    /// incrementally as room frees up.  Returns false when stopped first.
    bool push(std::span<const std::uint8_t> bytes) {
        std::size_t offset = 0;
        std::unique_lock lock(mutex_);
        while (offset < bytes.size()) {
            room_.wait(lock, [&] { return stopped_ || queue_.size() < capacity_; });
            if (stopped_) return false;
            const std::size_t n = std::min(capacity_ - queue_.size(), bytes.size() - offset);
            queue_.insert(queue_.end(), bytes.begin() + std::ptrdiff_t(offset),
                          bytes.begin() + std::ptrdiff_t(offset + n));
            offset += n;
            fill_.store(queue_.size());
        }
        return true;
    }

    /// Removes exactly n bytes, or returns an empty vector when the buffer
    /// cannot supply them right now.
    std::vector<std::uint8_t> take(std::size_t n) {
        std::unique_lock lock(mutex_);
        if (queue_.size() < n) return {};
        std::vector<std::uint8_t> out(queue_.begin(), queue_.begin() + std::ptrdiff_t(n));
        queue_.erase(queue_.begin(), queue_.begin() + std::ptrdiff_t(n));
        fill_.store(queue_.size());
        served_.fetch_add(n);
        room_.notify_all();
        return out;
    }

    void stop() {
        std::lock_guard lock(mutex_);
        stopped_ = true;
        room_.notify_all();
    }

private:
    std::size_t capacity_;
    std::mutex mutex_;
    std::condition_variable room_;
    std::deque<std::uint8_t> queue_;
    std::atomic<std::size_t> fill_{0};
    std::atomic<std::uint64_t> served_{0};
    bool stopped_ = false;
};

struct ServiceConfig {
    PipelineConfig pipeline;
    std::size_t buffer_capacity = 1u << 20;
    std::size_t max_request_bytes = 4096;
};

/// HTTP byte server backed by a continuously running extraction pipeline.
///
///   GET /random?bytes=N  ->  {"bytes": N, "data": "<hex>", "timestamp": ...}
///   GET /health          ->  buffer fill level and producer throughput
///
/// Served bytes are consumed from the buffer, so no byte is returned twice.
class RandomService {
public:
    explicit RandomService(ServiceConfig cfg)
        : cfg_(std::move(cfg)), buffer_(cfg_.buffer_capacity) {
        cfg_.pipeline.validate();
        seed_ = std::make_unique<ToeplitzSeed>(detail::load_toeplitz_seed(cfg_.pipeline));
        register_routes_();
    }

    ~RandomService() { stop(); }

    /// Binds to the given port (0 picks a free one), then starts the producer
    /// and listener threads.  Returns the bound port.
    int start(int port = 0) {
        int bound = port;
        if (port == 0) {
            bound = server_.bind_to_any_port("0.0.0.0");
            if (bound <= 0) throw PipelineError("service: failed to bind a port");
        } else if (!server_.bind_to_port("0.0.0.0", port)) {
            throw PipelineError("service: failed to bind port " + std::to_string(port));
        }
        running_.store(true);
        producer_ = std::thread([this] { produce_(); });
        listener_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        port_ = bound;
        return bound;
    }

    void stop() {
        if (!running_.exchange(false)) return;
        buffer_.stop();
        server_.stop();
        if (producer_.joinable()) producer_.join();
        if (listener_.joinable()) listener_.join();
    }

    int port() const noexcept { return port_; }
    EntropyBuffer& buffer() noexcept { return buffer_; }

private:
    void register_routes_() {
        server_.Get("/random", [this](const httplib::Request& req, httplib::Response& res) {
            res.set_header("Cache-Control", "no-store");
            if (!req.has_param("bytes")) {
                res.status = 400;
                res.set_content(R"({"error":"missing 'bytes' parameter"})", "application/json");
                return;
            }
            long n = 0;
            try {
                n = std::stol(req.get_param_value("bytes"));
            } catch (const std::exception&) {
                n = -1;
            }
            if (n < 1 || std::size_t(n) > cfg_.max_request_bytes) {
                res.status = 400;
                res.set_content(R"({"error":"'bytes' must lie in [1, 4096]"})",
                                "application/json");
                return;
            }
            const auto bytes = buffer_.take(std::size_t(n));
            if (bytes.empty()) {
                res.status = 503;
                res.set_content(R"({"error":"buffer cannot supply that many bytes yet"})",
                                "application/json");
                return;
            }
            nlohmann::json body;
            body["bytes"] = bytes.size();
            body["data"] = detail::to_hex(bytes);
            body["timestamp"] = detail::utc_timestamp();
            res.set_content(body.dump(), "application/json");
        });

        server_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
            nlohmann::json body;
            body["status"] = "ok";
            body["buffer_bytes"] = buffer_.fill();
            body["buffer_capacity"] = buffer_.capacity();
            body["throughput_bits_per_s"] = throughput_bps_.load();
            body["total_bytes_served"] = buffer_.total_served();
            res.set_content(body.dump(), "application/json");
        });
    }

    /// Continuous chunked pipeline: each chunk reseeds the sampler with
    /// base_seed + chunk index and spans a whole number of hash groups, so
    /// the emitted stream is reproducible from the configuration alone.
    void produce_() {
        const PipelineConfig& pc = cfg_.pipeline;
        const DetectorVariances dv = detector_variances(pc.lo_power_w, pc.detector);
        const NoiseSpec noise{0.0, dv.sigma_q_sq, dv.sigma_c_sq};
        const std::size_t chunk_samples = pc.hash.s * 256;

        std::uint64_t chunk = 0;
        while (running_.load()) {
            TraceConfig trace = pc.trace;
            trace.num_samples = chunk_samples;
            trace.rng_seed = pc.trace.rng_seed + chunk;
            const auto t0 = std::chrono::steady_clock::now();
            const QuadratureBatch batch = sample_quadratures(noise, pc.tone, trace);
            const QuantizedTrace qx = quantize_trace(batch.x, pc.adc);
            const QuantizedTrace qp = quantize_trace(batch.p, pc.adc);
            const auto codes = detail::extractor_codes(pc, qx, qp);
            const BitVector bits = extract_stream(codes, pc.hash, *seed_);
            const auto packed = pack_bits(bits);
            const auto t1 = std::chrono::steady_clock::now();
            const double dt = std::chrono::duration<double>(t1 - t0).count();
            if (dt > 0.0) throughput_bps_.store(double(bits.size()) / dt);
            if (!buffer_.push(packed.bytes)) return;
            ++chunk;
        }
    }

    ServiceConfig cfg_;
    EntropyBuffer buffer_;
    std::unique_ptr<ToeplitzSeed> seed_;
    httplib::Server server_;
    std::thread producer_;
    std::thread listener_;
    std::atomic<bool> running_{false};
    std::atomic<double> throughput_bps_{0.0};
    int port_ = 0;
};

}  // namespace qrng
