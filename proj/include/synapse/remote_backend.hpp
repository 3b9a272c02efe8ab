#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "synapse/backend.hpp"

namespace synapse {

/// Connection/timeout failures: the device was unreachable or stopped
/// responding; no partial results are usable.
struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The device answered with an error object.
struct DeviceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RetryPolicy {
    int connect_retries = 3;
    int retry_delay_ms = 200;
    int timeout_ms = 10000;
};

/// SynapseBackend served by a remote device emulator over the JSON
/// lines protocol. One connection; requests are batched (one JSON
/// array per line) to amortize round trips.
class RemoteBackend final : public SynapseBackend {
  public:
    RemoteBackend(std::string host, std::uint16_t port, RetryPolicy policy = {});
    ~RemoteBackend() override;

    RemoteBackend(const RemoteBackend&) = delete;
    RemoteBackend& operator=(const RemoteBackend&) = delete;

    /// Switches every subsequent query to the deterministic seed-plumbed
    /// path shared with InProcessBackend::seed_plumbed.
    void enable_seed_plumbing(std::uint64_t base_seed);

    void sample_counts(std::span<const SynapseQuery> queries,
                       std::span<std::uint32_t> counts, Rng& rng) override;

  private:
    void connect();
    std::string exchange_line(const std::string& line);

    std::string host_;
    std::uint16_t port_;
    RetryPolicy policy_;
    int fd_ = -1;
    std::string read_buffer_;
    std::uint64_t next_id_ = 1;
    bool plumbed_ = false;
    std::uint64_t plumb_seed_ = 0;
    std::uint64_t query_counter_ = 0;
};

}  // namespace synapse
