#pragma once

#include "loratdma/engine.hpp"

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace YAML {
class Node;
}

namespace loratdma::cli {

inline constexpr int kSchemaVersion = 1;

// Malformed scenario file or override. The message carries the line and
// field when known.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parses a scenario document. Unknown keys and missing required keys raise
// SchemaError; semantic checks are left to loratdma::validate.
Scenario parse_scenario(const YAML::Node& root);

// Applies `dotted.path=value` to a document. The value is parsed as YAML;
// integer path components index sequences.
void apply_override(YAML::Node& root, std::string_view assignment);

// Reads, overrides, parses and validates. Invalid scenarios (including
// disconnected topologies) are reported as SchemaError.
Scenario load_scenario(const std::filesystem::path& path, std::span<const std::string> overrides = {});

}  // namespace loratdma::cli
