#include "synapse/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <stdexcept>

#include "synapse/backend.hpp"
#include "synapse/kerr.hpp"

namespace synapse {

namespace {

bool send_line(int fd, std::string line) {
    line.push_back('\n');
    std::size_t sent = 0;
    while (sent < line.size()) {
        const ssize_t n = ::send(fd, line.data() + sent, line.size() - sent,
                                 MSG_NOSIGNAL);
        if (n <= 0) return false;
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

}  // namespace

DeviceServer::DeviceServer(ServerConfig config) : config_(std::move(config)) {
    config_.calibration.validate();
}

DeviceServer::~DeviceServer() { stop(); }

void DeviceServer::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(config_.port);
    if (::inet_pton(AF_INET, config_.bind_address.c_str(), &addr.sin_addr) != 1)
        throw std::runtime_error("invalid bind address " + config_.bind_address);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw std::runtime_error("cannot bind " + config_.bind_address + ":" +
                                 std::to_string(config_.port) + ": " +
                                 std::strerror(errno));
    if (::listen(listen_fd_, 16) != 0)
        throw std::runtime_error("listen() failed");

    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);

    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void DeviceServer::stop() {
    if (!running_.exchange(false)) return;
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    {
        std::lock_guard<std::mutex> lock(mutex_);
        for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> workers;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        workers.swap(workers_);
    }
    for (auto& t : workers)
        if (t.joinable()) t.join();
}

void DeviceServer::accept_loop() {
    while (running_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (!running_) break;
            continue;
        }
        const std::uint64_t index = connection_counter_++;
        std::lock_guard<std::mutex> lock(mutex_);
        client_fds_.push_back(fd);
        workers_.emplace_back(
            [this, fd, index] { handle_connection(fd, index); });
    }
}

SynapseResponse DeviceServer::handle_request(const SynapseRequest& request,
                                             Rng& rng) {
    SynapseResponse response;
    response.id = request.id;
    try {
        if (request.seed) {
            // seed-plumbed deterministic path: same count algorithm as
            // the in-process backend, bits packed as ones-then-zeros
            const std::uint32_t count = plumbed_sample_count(
                config_.calibration,
                {request.field_mT, request.input, request.samples},
                *request.seed);
            response.bits.assign(request.samples, 0);
            std::fill_n(response.bits.begin(), count, std::uint8_t{1});
            return response;
        }
        if (request.input == 0) {
            response.bits.assign(request.samples, 0);  // bypass, no RNG
            return response;
        }
        double field = request.field_mT;
        if (config_.field_jitter_mT > 0.0)
            field += config_.field_jitter_mT * gaussian(rng);
        if (!config_.trace_mode) {
            response.bits = sample_synapse_bits(config_.calibration, field, 1,
                                                request.samples, rng);
            return response;
        }
        // slow path: every sample runs the full measurement chain
        const double p = passing_probability(config_.calibration, field);
        const double depin = config_.trace_depin_field_mT;
        const double notch = std::min(0.6 * depin, depin - 1.0);
        response.bits.reserve(request.samples);
        for (std::uint32_t s = 0; s < request.samples; ++s) {
            const int passed = bernoulli(p, rng) ? 1 : 0;
            KerrTrace trace = synthesize_kerr_trace(passed, depin, notch,
                                                    config_.trace_noise, rng);
            response.bits.push_back(
                static_cast<std::uint8_t>(detect_pinning(trace)));
            response.traces.push_back(std::move(trace));
        }
    } catch (const std::exception& e) {
        response.bits.clear();
        response.traces.clear();
        response.error = e.what();
    }
    return response;
}

void DeviceServer::handle_connection(int fd, std::uint64_t connection_index) {
    Rng rng = make_stream(config_.seed, "connection", connection_index);
    Rng latency_rng = make_stream(config_.seed, "latency", connection_index);
    std::string buffer;
    char chunk[1 << 16];
    bool open = true;
    while (open && running_) {
        const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t pos;
        while (open && (pos = buffer.find('\n')) != std::string::npos) {
            std::string line = buffer.substr(0, pos);
            buffer.erase(0, pos + 1);
            if (line.empty()) continue;

            if (config_.latency.fixed_ms > 0.0 ||
                config_.latency.jitter_ms > 0.0) {
                const double ms =
                    config_.latency.fixed_ms +
                    config_.latency.jitter_ms * uniform01(latency_rng);
                std::this_thread::sleep_for(
                    std::chrono::duration<double, std::milli>(ms));
            }

            std::vector<SynapseRequest> requests;
            bool as_batch = false;
            try {
                as_batch = line.front() == '[';
                requests = parse_request_line(line);
            } catch (const ProtocolError& e) {
                send_line(fd, serialize_line_error(e.what(), e.request_id));
                if (e.version_mismatch) open = false;  // refuse connection
                continue;
            }
            std::vector<SynapseResponse> responses;
            responses.reserve(requests.size());
            for (const SynapseRequest& r : requests)
                responses.push_back(handle_request(r, rng));
            if (!send_line(fd, serialize_responses(responses, as_batch,
                                                   config_.trace_mode)))
                open = false;
        }
    }
    ::close(fd);
}

}  // namespace synapse
