#include "synapse/remote_backend.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <thread>
#include <unordered_map>

#include "synapse/protocol.hpp"

namespace synapse {

namespace {
constexpr std::size_t kBatchLimit = 512;  // queries per wire line

void set_timeout(int fd, int ms) {
    timeval tv{};
    tv.tv_sec = ms / 1000;
    tv.tv_usec = (ms % 1000) * 1000;
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}
}  // namespace

RemoteBackend::RemoteBackend(std::string host, std::uint16_t port,
                             RetryPolicy policy)
    : host_(std::move(host)), port_(port), policy_(policy) {
    connect();
}

RemoteBackend::~RemoteBackend() {
    if (fd_ >= 0) ::close(fd_);
}

void RemoteBackend::enable_seed_plumbing(std::uint64_t base_seed) {
    plumbed_ = true;
    plumb_seed_ = base_seed;
    query_counter_ = 0;
}

void RemoteBackend::connect() {
    std::string last_error;
    for (int attempt = 0; attempt <= policy_.connect_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(policy_.retry_delay_ms));
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) {
            last_error = std::strerror(errno);
            continue;
        }
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port_);
        if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
            ::close(fd);
            throw TransportError("invalid device address " + host_);
        }
        if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) ==
            0) {
            set_timeout(fd, policy_.timeout_ms);
            fd_ = fd;
            return;
        }
        last_error = std::strerror(errno);
        ::close(fd);
    }
    throw TransportError("cannot reach device at " + host_ + ":" +
                         std::to_string(port_) + ": " + last_error);
}

std::string RemoteBackend::exchange_line(const std::string& line) {
    std::string payload = line;
    payload.push_back('\n');
    std::size_t sent = 0;
    while (sent < payload.size()) {
        const ssize_t n = ::send(fd_, payload.data() + sent,
                                 payload.size() - sent, MSG_NOSIGNAL);
        if (n <= 0)
            throw TransportError("send failed: " +
                                 std::string(std::strerror(errno)));
        sent += static_cast<std::size_t>(n);
    }
    char chunk[1 << 16];
    for (;;) {
        const std::size_t pos = read_buffer_.find('\n');
        if (pos != std::string::npos) {
            std::string result = read_buffer_.substr(0, pos);
            read_buffer_.erase(0, pos + 1);
            return result;
        }
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n == 0) throw TransportError("device closed the connection");
        if (n < 0)
            throw TransportError("receive failed (timeout?): " +
                                 std::string(std::strerror(errno)));
        read_buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

void RemoteBackend::sample_counts(std::span<const SynapseQuery> queries,
                                  std::span<std::uint32_t> counts, Rng&) {
    if (queries.size() != counts.size())
        throw std::invalid_argument("sample_counts: size mismatch");
    std::size_t done = 0;
    while (done < queries.size()) {
        const std::size_t batch =
            std::min(kBatchLimit, queries.size() - done);
        std::vector<SynapseRequest> requests(batch);
        std::unordered_map<std::uint64_t, std::size_t> slots;
        for (std::size_t i = 0; i < batch; ++i) {
            SynapseRequest& r = requests[i];
            r.id = next_id_++;
            r.field_mT = queries[done + i].field_mT;
            r.input = queries[done + i].input;
            r.samples = queries[done + i].samples;
            if (plumbed_)
                r.seed = plumbed_query_seed(plumb_seed_, query_counter_++);
            slots[r.id] = done + i;
        }
        const std::string reply = exchange_line(serialize_requests(requests));
        std::vector<SynapseResponse> responses;
        try {
            responses = parse_response_line(reply);
        } catch (const ProtocolError& e) {
            throw TransportError(std::string("garbled device response: ") +
                                 e.what());
        }
        if (responses.size() != batch)
            throw TransportError("device answered " +
                                 std::to_string(responses.size()) +
                                 " of " + std::to_string(batch) + " requests");
        for (const SynapseResponse& resp : responses) {
            if (resp.error)
                throw DeviceError("device error for request " +
                                  std::to_string(resp.id) + ": " + *resp.error);
            const auto slot = slots.find(resp.id);
            if (slot == slots.end())
                throw TransportError("response id " + std::to_string(resp.id) +
                                     " does not match any request");
            const SynapseQuery& q = queries[slot->second];
            if (resp.bits.size() != q.samples)
                throw DeviceError("device returned " +
                                  std::to_string(resp.bits.size()) +
                                  " bits, expected " +
                                  std::to_string(q.samples));
            std::uint32_t count = 0;
            for (std::uint8_t b : resp.bits) count += b;
            counts[slot->second] = count;
        }
        done += batch;
    }
}

}  // namespace synapse
