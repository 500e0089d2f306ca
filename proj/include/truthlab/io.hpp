#pragma once

#include "truthlab/instance.hpp"
#include "truthlab/mechanism.hpp"

#include <json.hpp>

#include <string>
#include <string_view>

namespace truthlab {

using Json = nlohmann::json;

/// Parses text into a document; syntax errors become ParseError with the
/// line and column of the failure.
Json parse_document(std::string_view text, const std::string& source = "document");

/// Two-space indented, keys sorted, trailing newline.
std::string dump_document(const Json& doc);

Json value_to_json(const Value& v);
/// Reads a rational field; `field` names it in diagnostics.
Value value_from_json(const Json& j, const std::string& field);
int int_from_json(const Json& obj, const std::string& key, const std::string& where);
const Json& member(const Json& obj, const std::string& key, const std::string& where);

Json instance_to_json(const Instance& instance);
Instance instance_from_json(const Json& doc);
std::string serialize_instance(const Instance& instance);
Instance parse_instance(std::string_view text);

Json allocation_to_json(const Instance& instance, const Allocation& alloc);

Json spec_to_json(const MechanismSpec& spec);
MechanismSpec spec_from_json(const Json& doc);

/// Whole-file helpers. read_file throws std::runtime_error when the file is
/// missing; callers map that to their own exit codes.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace truthlab
