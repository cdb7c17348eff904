#pragma once

// Newline-delimited JSON protocol spoken between the toolkit and a remote
// victim. One document per line:
//   -> {"id": 0, "op": "info"}
//   <- {"id": 0, "num_classes": C, "input_dim": d}
//   -> {"id": n, "op": "predict", "graph": {"num_nodes", "edges", "node_features"}}
//   <- {"id": n, "label": y}   or   {"id": n, "error": "..."}

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "nodeinj/error.hpp"
#include "nodeinj/graph.hpp"
#include "nodeinj/graph_io.hpp"
#include "nodeinj/victim.hpp"

namespace nodeinj::wire {

inline std::string info_request(std::uint64_t id = 0) {
  return nlohmann::json{{"id", id}, {"op", "info"}}.dump();
}

/// The graph label is not sent.
inline std::string predict_request(std::uint64_t id, const Graph& g) {
  auto gj = graph_to_json(g);
  gj.erase("label");
  return nlohmann::json{{"id", id}, {"op", "predict"}, {"graph", std::move(gj)}}.dump();
}

struct Response {
  std::uint64_t id = 0;
  std::optional<Label> label;
  std::optional<std::string> error;
  std::optional<std::size_t> num_classes;
  std::optional<std::size_t> input_dim;
};

inline Response parse_response(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ProtocolError(std::string("malformed response: ") + ex.what());
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_number_unsigned()) {
    throw ProtocolError("response lacks an unsigned id: " + line);
  }
  Response r;
  r.id = j["id"].get<std::uint64_t>();
  try {
    if (j.contains("error")) r.error = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
    if (j.contains("label")) r.label = j["label"].get<Label>();
    if (j.contains("num_classes")) r.num_classes = j["num_classes"].get<std::size_t>();
    if (j.contains("input_dim")) r.input_dim = j["input_dim"].get<std::size_t>();
  } catch (const nlohmann::json::exception& ex) {
    throw ProtocolError(std::string("malformed response field: ") + ex.what());
  }
  return r;
}

/// Server-side handling of one request line. Never throws; failures become
/// error responses carrying the request id (0 when it cannot be read).
inline std::string handle_request(VictimOracle& oracle, std::size_t input_dim, const std::string& line) {
  std::uint64_t id = 0;
  try {
    const auto j = nlohmann::json::parse(line);
    if (!j.is_object()) throw ProtocolError("request must be a JSON object");
    if (j.contains("id") && j["id"].is_number_unsigned()) id = j["id"].get<std::uint64_t>();
    else throw ProtocolError("request lacks an unsigned id");
    const auto op = j.value("op", std::string{});
    if (op == "info") {
      return nlohmann::json{{"id", id}, {"num_classes", oracle.num_classes()}, {"input_dim", input_dim}}.dump();
    }
    if (op == "predict") {
      const Graph g = graph_from_json(j.at("graph"));
      return nlohmann::json{{"id", id}, {"label", oracle.predict(g)}}.dump();
    }
    throw ProtocolError("unknown op '" + op + "'");
  } catch (const std::exception& ex) {
    return nlohmann::json{{"id", id}, {"error", ex.what()}}.dump();
  }
}

}  // namespace nodeinj::wire
