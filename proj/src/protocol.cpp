#include "synapse/protocol.hpp"

#include <cmath>
#include <regex>

#include <json.hpp>

namespace synapse {

namespace {

using nlohmann::json;

std::optional<std::uint64_t> recover_id(const std::string& line) {
    static const std::regex id_re("\"id\"\\s*:\\s*(\\d+)");
    std::smatch m;
    if (std::regex_search(line, m, id_re)) {
        try {
            return std::stoull(m[1].str());
        } catch (const std::exception&) {
        }
    }
    return std::nullopt;
}

SynapseRequest request_from_json(const json& j) {
    if (!j.is_object()) throw ProtocolError("request must be a JSON object");
    std::optional<std::uint64_t> id;
    if (j.contains("id") && j["id"].is_number_unsigned())
        id = j["id"].get<std::uint64_t>();
    if (!j.contains("v") || !j["v"].is_number_integer())
        throw ProtocolError("missing protocol version field \"v\"", id);
    if (j["v"].get<int>() != kProtocolVersion)
        throw ProtocolError("unsupported protocol version " +
                                std::to_string(j["v"].get<int>()),
                            id, /*version=*/true);
    if (!id) throw ProtocolError("missing or invalid \"id\"");
    SynapseRequest r;
    r.id = *id;
    if (!j.contains("field_mT") || !j["field_mT"].is_number())
        throw ProtocolError("missing or non-numeric \"field_mT\"", id);
    r.field_mT = j["field_mT"].get<double>();
    if (!std::isfinite(r.field_mT))
        throw ProtocolError("non-finite \"field_mT\"", id);
    if (!j.contains("input") || !j["input"].is_number_integer() ||
        (j["input"].get<int>() != 0 && j["input"].get<int>() != 1))
        throw ProtocolError("\"input\" must be 0 or 1", id);
    r.input = static_cast<std::uint8_t>(j["input"].get<int>());
    if (!j.contains("samples") || !j["samples"].is_number_unsigned() ||
        j["samples"].get<std::uint64_t>() < 1 ||
        j["samples"].get<std::uint64_t>() > 0xffffffffULL)
        throw ProtocolError("\"samples\" must be an integer >= 1", id);
    r.samples = static_cast<std::uint32_t>(j["samples"].get<std::uint64_t>());
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned())
            throw ProtocolError("\"seed\" must be an unsigned integer", id);
        r.seed = j["seed"].get<std::uint64_t>();
    }
    return r;
}

json request_to_json(const SynapseRequest& r) {
    json j{{"v", kProtocolVersion},
           {"id", r.id},
           {"field_mT", r.field_mT},
           {"input", static_cast<int>(r.input)},
           {"samples", r.samples}};
    if (r.seed) j["seed"] = *r.seed;
    return j;
}

json response_to_json(const SynapseResponse& r, bool include_traces) {
    json j{{"v", kProtocolVersion}, {"id", r.id}};
    if (r.error) {
        j["error"] = *r.error;
        return j;
    }
    j["bits"] = r.bits;
    if (include_traces && !r.traces.empty()) {
        json traces = json::array();
        for (const KerrTrace& t : r.traces)
            traces.push_back({{"field_axis_mT", t.field_axis_mT},
                              {"signal", t.signal}});
        j["traces"] = std::move(traces);
    }
    return j;
}

SynapseResponse response_from_json(const json& j) {
    if (!j.is_object()) throw ProtocolError("malformed response object");
    SynapseResponse r;
    // whole-line error replies may carry no id (none was recoverable)
    if (j.contains("id")) r.id = j["id"].get<std::uint64_t>();
    if (j.contains("error")) {
        r.error = j["error"].get<std::string>();
        return r;
    }
    if (!j.contains("id")) throw ProtocolError("malformed response object");
    r.bits = j.at("bits").get<std::vector<std::uint8_t>>();
    for (std::uint8_t b : r.bits)
        if (b != 0 && b != 1) throw ProtocolError("response bit not 0/1", r.id);
    if (j.contains("traces")) {
        for (const auto& t : j["traces"]) {
            KerrTrace trace;
            trace.field_axis_mT =
                t.at("field_axis_mT").get<std::vector<double>>();
            trace.signal = t.at("signal").get<std::vector<double>>();
            r.traces.push_back(std::move(trace));
        }
    }
    return r;
}

}  // namespace

std::vector<SynapseRequest> parse_request_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        // also out_of_range: number overflow is raised at parse time
        throw ProtocolError(std::string("invalid JSON: ") + e.what(),
                            recover_id(line));
    }
    std::vector<SynapseRequest> out;
    if (j.is_array()) {
        if (j.empty()) throw ProtocolError("empty request batch");
        for (const auto& item : j) out.push_back(request_from_json(item));
    } else {
        out.push_back(request_from_json(j));
    }
    return out;
}

std::string serialize_requests(const std::vector<SynapseRequest>& requests) {
    if (requests.size() == 1) return request_to_json(requests[0]).dump();
    json arr = json::array();
    for (const auto& r : requests) arr.push_back(request_to_json(r));
    return arr.dump();
}

std::string serialize_responses(const std::vector<SynapseResponse>& responses,
                                bool as_batch, bool include_traces) {
    if (!as_batch && responses.size() == 1)
        return response_to_json(responses[0], include_traces).dump();
    json arr = json::array();
    for (const auto& r : responses)
        arr.push_back(response_to_json(r, include_traces));
    return arr.dump();
}

std::vector<SynapseResponse> parse_response_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("invalid JSON response: ") + e.what());
    }
    std::vector<SynapseResponse> out;
    if (j.is_array())
        for (const auto& item : j) out.push_back(response_from_json(item));
    else
        out.push_back(response_from_json(j));
    return out;
}

std::string serialize_line_error(const std::string& message,
                                 std::optional<std::uint64_t> id) {
    json j{{"v", kProtocolVersion}, {"error", message}};
    if (id) j["id"] = *id;
    return j.dump();
}

}  // namespace synapse
