#pragma once

#include <json.hpp>

#include "mcgs/types.hpp"

namespace mcgs {

// nlohmann::json with default (alphabetically ordered) object keys; every
// serialization in the project goes through it so emitted bytes are stable.
using Json = nlohmann::json;

Json payload_to_json(const SolutionPayload& p);
SolutionPayload payload_from_json(const Json& j);

Json node_to_json(const SolutionNode& n);
SolutionNode node_from_json(const Json& j);

Json edge_to_json(const EdgeRecord& e);
EdgeRecord edge_from_json(const Json& j);

Json task_to_json(const TaskSpec& t);
TaskSpec task_from_json(const Json& j);

// Strict field access helpers; raise ConfigError with the offending key.
const Json& require_field(const Json& j, const char* key);
std::string get_string(const Json& j, const char* key);
double get_double(const Json& j, const char* key);
std::int64_t get_int(const Json& j, const char* key);

}  // namespace mcgs
