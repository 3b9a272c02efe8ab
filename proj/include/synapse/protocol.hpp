#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "synapse/kerr.hpp"

namespace synapse {

inline constexpr int kProtocolVersion = 1;

/// Wire request, one JSON object:
///   {"v":1,"id":<u64>,"field_mT":<f64>,"input":<0|1>,"samples":<u32>}
/// A batch is a JSON array of such objects on a single line. The
/// optional "seed" field selects the seed-plumbed deterministic path.
struct SynapseRequest {
    std::uint64_t id = 0;
    double field_mT = 0.0;
    std::uint8_t input = 0;
    std::uint32_t samples = 1;
    std::optional<std::uint64_t> seed;
};

/// {"v":1,"id":<u64>,"bits":[...]} on success, or
/// {"v":1,"id":<u64>,"error":"<msg>"} per failed request. Traces are
/// attached only when the server runs in trace mode.
struct SynapseResponse {
    std::uint64_t id = 0;
    std::vector<std::uint8_t> bits;
    std::optional<std::string> error;
    std::vector<KerrTrace> traces;
};

struct ProtocolError : std::runtime_error {
    std::optional<std::uint64_t> request_id;
    bool version_mismatch = false;
    explicit ProtocolError(const std::string& msg,
                           std::optional<std::uint64_t> id = std::nullopt,
                           bool version = false)
        : std::runtime_error(msg), request_id(id), version_mismatch(version) {}
};

/// Parses one line (single object or array). Throws ProtocolError on
/// malformed input; the error carries an id when one is recoverable
/// from the broken line.
std::vector<SynapseRequest> parse_request_line(const std::string& line);

std::string serialize_requests(const std::vector<SynapseRequest>& requests);

/// One line per batch, mirroring the request shape (object for a
/// single response, array for a batch).
std::string serialize_responses(const std::vector<SynapseResponse>& responses,
                                bool as_batch, bool include_traces = false);

std::vector<SynapseResponse> parse_response_line(const std::string& line);

/// Standalone error line used when a whole request line is unusable.
std::string serialize_line_error(const std::string& message,
                                 std::optional<std::uint64_t> id);

}  // namespace synapse
