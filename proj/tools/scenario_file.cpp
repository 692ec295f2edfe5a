#include "scenario_file.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace loratdma::cli {

namespace {

std::string where(const YAML::Node& node)
{
    const YAML::Mark mark = node.Mark();
    if (mark.is_null()) {
        return "";
    }
    return fmt::format("line {}, column {}: ", mark.line + 1, mark.column + 1);
}

std::string join_path(std::string_view parent, std::string_view key)
{
    return parent.empty() ? std::string(key) : fmt::format("{}.{}", parent, key);
}

void check_map(const YAML::Node& node, std::string_view path, std::initializer_list<std::string_view> allowed)
{
    if (!node.IsMap()) {
        throw SchemaError(fmt::format("{}field '{}': expected a mapping", where(node), path));
    }
    const std::set<std::string_view> keys(allowed);
    for (const auto& item : node) {
        const auto key = item.first.as<std::string>();
        if (!keys.contains(key)) {
            throw SchemaError(fmt::format("{}unknown key '{}'", where(item.first), join_path(path, key)));
        }
    }
}

template <typename T>
T convert(const YAML::Node& value, std::string_view field, std::string_view expected)
{
    try {
        return value.as<T>();
    } catch (const YAML::Exception&) {
        throw SchemaError(fmt::format("{}field '{}': expected {}", where(value), field, expected));
    }
}

template <typename T>
constexpr std::string_view type_name()
{
    if constexpr (std::is_same_v<T, bool>) {
        return "a boolean";
    } else if constexpr (std::is_floating_point_v<T>) {
        return "a number";
    } else {
        return "an integer";
    }
}

template <typename T>
T optional_field(const YAML::Node& map, std::string_view path, const char* key, T fallback)
{
    const YAML::Node value = map[key];
    if (!value || value.IsNull()) {
        return fallback;
    }
    return convert<T>(value, join_path(path, key), type_name<T>());
}

template <typename T>
T required_field(const YAML::Node& map, std::string_view path, const char* key)
{
    const YAML::Node value = map[key];
    if (!value || value.IsNull()) {
        throw SchemaError(fmt::format("{}missing required field '{}'", where(map), join_path(path, key)));
    }
    return convert<T>(value, join_path(path, key), type_name<T>());
}

NodeId node_id_field(const YAML::Node& map, std::string_view path, const char* key)
{
    const int id = required_field<int>(map, path, key);
    if (id < 0 || id > 255) {
        throw SchemaError(fmt::format("{}field '{}': node ids are 0..255", where(map[key]), join_path(path, key)));
    }
    return make_node_id(id);
}

YAML::Node section(const YAML::Node& root, const char* key, std::string_view path,
                   std::initializer_list<std::string_view> allowed)
{
    YAML::Node node = root[key];
    if (!node || node.IsNull()) {
        return YAML::Node(YAML::NodeType::Map);
    }
    check_map(node, path, allowed);
    return node;
}

}  // namespace

Scenario parse_scenario(const YAML::Node& root)
{
    check_map(root, "",
              {"schema_version", "seed", "frames", "channels", "network_id", "queue_capacity", "relay", "schedule",
               "radio", "timing", "guard", "traffic", "join", "power", "nodes", "links"});
    const int version = required_field<int>(root, "", "schema_version");
    if (version != kSchemaVersion) {
        throw SchemaError(fmt::format("{}field 'schema_version': unsupported version {} (expected {})",
                                      where(root["schema_version"]), version, kSchemaVersion));
    }

    Scenario sc;
    sc.seed = optional_field<std::uint64_t>(root, "", "seed", 1);
    sc.frames = optional_field<std::int64_t>(root, "", "frames", 100);
    sc.channels = optional_field<int>(root, "", "channels", 1);
    const int network_id = optional_field<int>(root, "", "network_id", 1);
    if (network_id < 0 || network_id > 255) {
        throw SchemaError(fmt::format("{}field 'network_id': expected 0..255", where(root["network_id"])));
    }
    sc.mac.network_id = static_cast<std::uint8_t>(network_id);
    const auto capacity = optional_field<std::int64_t>(root, "", "queue_capacity", 64);
    if (capacity < 1) {
        throw SchemaError(fmt::format("{}field 'queue_capacity': must be >= 1", where(root["queue_capacity"])));
    }
    sc.mac.queue_capacity = static_cast<std::size_t>(capacity);
    sc.relay = node_id_field(root, "", "relay");

    const auto schedule = section(root, "schedule", "schedule",
                                  {"max_nodes", "slots_per_frame", "ticks_per_slot", "tick_rate_hz"});
    const int max_nodes = optional_field<int>(schedule, "schedule", "max_nodes", 4);
    const int slots = optional_field<int>(schedule, "schedule", "slots_per_frame", 90);
    const int ticks = optional_field<int>(schedule, "schedule", "ticks_per_slot", 21281);
    sc.mac.tick_rate_hz = optional_field<double>(schedule, "schedule", "tick_rate_hz", timebase::kDefaultTickRateHz);
    try {
        sc.mac.schedule = build_schedule(max_nodes, slots, ticks);
    } catch (const std::invalid_argument& err) {
        throw SchemaError(fmt::format("{}field 'schedule': {}", where(root["schedule"]), err.what()));
    }

    const auto radio = section(root, "radio", "radio",
                               {"spreading_factor", "bandwidth_hz", "coding_rate_denominator", "preamble_symbols",
                                "explicit_header", "crc_on", "low_data_rate_opt"});
    phy::RadioParams& rp = sc.mac.radio;
    rp.spreading_factor = optional_field<int>(radio, "radio", "spreading_factor", rp.spreading_factor);
    rp.bandwidth_hz = optional_field<int>(radio, "radio", "bandwidth_hz", rp.bandwidth_hz);
    rp.coding_rate_denominator =
        optional_field<int>(radio, "radio", "coding_rate_denominator", rp.coding_rate_denominator);
    rp.preamble_symbols = optional_field<int>(radio, "radio", "preamble_symbols", rp.preamble_symbols);
    rp.explicit_header = optional_field<bool>(radio, "radio", "explicit_header", rp.explicit_header);
    rp.crc_on = optional_field<bool>(radio, "radio", "crc_on", rp.crc_on);
    rp.low_data_rate_opt = optional_field<bool>(radio, "radio", "low_data_rate_opt", rp.low_data_rate_opt);
    try {
        phy::validate(rp);
    } catch (const std::invalid_argument& err) {
        throw SchemaError(fmt::format("{}field 'radio': {}", where(root["radio"]), err.what()));
    }

    const auto timing = section(root, "timing", "timing", {"t_offset", "t_guard", "t_data_max", "t_ack", "t_bcn"});
    const SlotTiming derived = default_timing(rp);
    sc.mac.timing.t_offset = optional_field<double>(timing, "timing", "t_offset", derived.t_offset);
    sc.mac.timing.t_guard = optional_field<double>(timing, "timing", "t_guard", derived.t_guard);
    sc.mac.timing.t_data_max = optional_field<double>(timing, "timing", "t_data_max", derived.t_data_max);
    sc.mac.timing.t_ack = optional_field<double>(timing, "timing", "t_ack", derived.t_ack);
    sc.mac.timing.t_bcn = optional_field<double>(timing, "timing", "t_bcn", derived.t_bcn);

    const auto guard = section(root, "guard", "guard", {"widen_factor", "max_misses"});
    sc.mac.guard.widen_factor = optional_field<double>(guard, "guard", "widen_factor", sc.mac.guard.widen_factor);
    sc.mac.guard.max_misses = optional_field<int>(guard, "guard", "max_misses", sc.mac.guard.max_misses);
    sc.mac.guard.base_guard = sc.mac.timing.t_guard;

    const auto traffic = section(root, "traffic", "traffic",
                                 {"k", "app_payload_bytes", "uplink", "downlink_period_frames",
                                  "downlink_payload_bytes"});
    sc.traffic.k = optional_field<int>(traffic, "traffic", "k", sc.traffic.k);
    sc.mac.app_payload_bytes = optional_field<int>(traffic, "traffic", "app_payload_bytes", sc.mac.app_payload_bytes);
    sc.traffic.uplink = optional_field<bool>(traffic, "traffic", "uplink", sc.traffic.uplink);
    sc.traffic.downlink_period_frames =
        optional_field<int>(traffic, "traffic", "downlink_period_frames", sc.traffic.downlink_period_frames);
    sc.traffic.downlink_payload_bytes =
        optional_field<int>(traffic, "traffic", "downlink_payload_bytes", sc.traffic.downlink_payload_bytes);

    const auto join = section(root, "join", "join",
                              {"listen_frames", "backoff_offsets", "retry_frames", "parent_listen_frames"});
    sc.mac.join.listen_frames = optional_field<int>(join, "join", "listen_frames", sc.mac.join.listen_frames);
    sc.mac.join.retry_frames = optional_field<int>(join, "join", "retry_frames", sc.mac.join.retry_frames);
    sc.mac.join.parent_listen_frames =
        optional_field<int>(join, "join", "parent_listen_frames", sc.mac.join.parent_listen_frames);
    if (const YAML::Node offsets = join["backoff_offsets"]; offsets && !offsets.IsNull()) {
        if (!offsets.IsSequence()) {
            throw SchemaError(fmt::format("{}field 'join.backoff_offsets': expected a list of seconds",
                                          where(offsets)));
        }
        sc.mac.join.backoff_offsets.clear();
        for (const auto& v : offsets) {
            sc.mac.join.backoff_offsets.push_back(convert<double>(v, "join.backoff_offsets", "a number"));
        }
    }

    const auto power = section(root, "power", "power", {"p_sleep", "p_rx", "p_tx", "p_app", "tau_app"});
    sc.power.p_sleep = optional_field<double>(power, "power", "p_sleep", sc.power.p_sleep);
    sc.power.p_rx = optional_field<double>(power, "power", "p_rx", sc.power.p_rx);
    sc.power.p_tx = optional_field<double>(power, "power", "p_tx", sc.power.p_tx);
    sc.power.p_app = optional_field<double>(power, "power", "p_app", sc.power.p_app);
    sc.power.tau_app = optional_field<double>(power, "power", "tau_app", sc.power.tau_app);

    const YAML::Node nodes = root["nodes"];
    if (!nodes || !nodes.IsSequence() || nodes.size() == 0) {
        throw SchemaError(fmt::format("{}field 'nodes': expected a non-empty list", where(nodes ? nodes : root)));
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto path = fmt::format("nodes[{}]", i);
        const YAML::Node n = nodes[i];
        check_map(n, path, {"id", "drift_ppm", "drift_jitter_ppm"});
        sc.nodes.push_back({node_id_field(n, path, "id"), optional_field<double>(n, path, "drift_ppm", 0.0),
                            optional_field<double>(n, path, "drift_jitter_ppm", 0.0)});
    }

    const YAML::Node links = root["links"];
    if (!links || !links.IsSequence()) {
        throw SchemaError(fmt::format("{}field 'links': expected a list", where(links ? links : root)));
    }
    for (std::size_t i = 0; i < links.size(); ++i) {
        const auto path = fmt::format("links[{}]", i);
        const YAML::Node l = links[i];
        check_map(l, path, {"from", "to", "per", "rssi_dbm", "symmetric"});
        sc.links.push_back({node_id_field(l, path, "from"), node_id_field(l, path, "to"),
                            optional_field<double>(l, path, "per", 0.0),
                            optional_field<double>(l, path, "rssi_dbm", -60.0),
                            optional_field<bool>(l, path, "symmetric", true)});
    }
    return sc;
}

void apply_override(YAML::Node& root, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw SchemaError(fmt::format("override '{}': expected key=value", assignment));
    }
    const std::string_view path = assignment.substr(0, eq);
    YAML::Node value;
    try {
        value = YAML::Load(std::string(assignment.substr(eq + 1)));
    } catch (const YAML::Exception& err) {
        throw SchemaError(fmt::format("override '{}': {}", assignment, err.msg));
    }

    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= path.size()) {
        const auto dot = path.find('.', start);
        const auto end = dot == std::string_view::npos ? path.size() : dot;
        if (end == start) {
            throw SchemaError(fmt::format("override '{}': empty path component", assignment));
        }
        parts.emplace_back(path.substr(start, end - start));
        start = end + 1;
        if (dot == std::string_view::npos) {
            break;
        }
    }

    YAML::Node cursor = root;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const std::string& part = parts[i];
        const bool last = i + 1 == parts.size();
        if (cursor.IsSequence()) {
            std::size_t index = 0;
            const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), index);
            if (ec != std::errc() || ptr != part.data() + part.size() || index >= cursor.size()) {
                throw SchemaError(fmt::format("override '{}': '{}' is not a valid list index", assignment, part));
            }
            if (last) {
                cursor[index] = value;
            } else {
                YAML::Node next = cursor[index];
                cursor.reset(next);
            }
        } else {
            if (cursor.IsScalar()) {
                throw SchemaError(fmt::format("override '{}': '{}' is not a mapping", assignment,
                                              fmt::join(parts.begin(), parts.begin() + static_cast<long>(i), ".")));
            }
            if (last) {
                cursor[part] = value;
            } else {
                YAML::Node next = cursor[part];
                cursor.reset(next);
            }
        }
    }
}

Scenario load_scenario(const std::filesystem::path& path, std::span<const std::string> overrides)
{
    std::ifstream in(path);
    if (!in) {
        throw SchemaError(fmt::format("cannot read scenario file '{}'", path.string()));
    }
    YAML::Node root;
    try {
        root = YAML::Load(in);
    } catch (const YAML::ParserException& err) {
        throw SchemaError(fmt::format("{}: line {}, column {}: {}", path.string(), err.mark.line + 1,
                                      err.mark.column + 1, err.msg));
    }
    if (!root || root.IsNull()) {
        throw SchemaError(fmt::format("{}: empty scenario file", path.string()));
    }
    for (const auto& assignment : overrides) {
        apply_override(root, assignment);
    }
    Scenario sc;
    try {
        sc = parse_scenario(root);
        validate(sc);
    } catch (const SchemaError& err) {
        throw SchemaError(fmt::format("{}: {}", path.string(), err.what()));
    } catch (const ScenarioError& err) {
        throw SchemaError(fmt::format("{}: {}", path.string(), err.what()));
    }
    return sc;
}

}  // namespace loratdma::cli
