#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "synapse/device_model.hpp"
#include "synapse/protocol.hpp"

namespace synapse {

/// Emulated per-line service latency: fixed + uniform jitter, to mimic
/// the prototype's low throughput.
struct LatencyModel {
    double fixed_ms = 0.0;
    double jitter_ms = 0.0;
};

struct ServerConfig {
    std::string bind_address = "127.0.0.1";
    std::uint16_t port = 0;  ///< 0 = ephemeral; see DeviceServer::port()
    std::uint64_t seed = 0;
    bool trace_mode = false;  ///< bits via synthesize + detect (slow path)
    LatencyModel latency;
    double field_jitter_mT = 0.0;  ///< emulated field-setting error, off by default
    double trace_depin_field_mT = 8.0;
    double trace_noise = 0.02;
    PassingProbabilityModel calibration;
};

/// TCP device emulator speaking newline-delimited JSON. Connections
/// are handled concurrently; requests within a connection strictly in
/// order, with a per-connection RNG derived from (seed, connection
/// counter) so identical request sequences replay identically.
class DeviceServer {
  public:
    explicit DeviceServer(ServerConfig config);
    ~DeviceServer();

    DeviceServer(const DeviceServer&) = delete;
    DeviceServer& operator=(const DeviceServer&) = delete;

    /// Binds and starts accepting. Throws std::runtime_error if the
    /// address is not bindable.
    void start();
    void stop();

    std::uint16_t port() const { return port_; }

  private:
    void accept_loop();
    void handle_connection(int fd, std::uint64_t connection_index);
    SynapseResponse handle_request(const SynapseRequest& request, Rng& rng);

    ServerConfig config_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::atomic<std::uint64_t> connection_counter_{0};
    std::thread accept_thread_;
    std::mutex mutex_;
    std::vector<std::thread> workers_;
    std::vector<int> client_fds_;
};

}  // namespace synapse
