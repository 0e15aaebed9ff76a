#include "bpsim/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bpsim/format.hpp"

namespace bpsim {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* first = value.data();
    const char* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) {
        throw ConfigError(key, "cannot parse '" + value + "' as a number");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError(key, "expected true/false, got '" + value + "'");
}

template <typename T, typename Parser>
T parse_enum(const std::string& key, const std::string& value, Parser parser, const char* allowed) {
    if (auto v = parser(value)) return *v;
    throw ConfigError(key, "unknown value '" + value + "' (expected " + allowed + ")");
}

}  // namespace

std::vector<std::string> known_keys() {
    return {"mode",    "scheduler", "estimator", "control-rule", "routing",    "rows",
            "cols",    "N",         "topology-file", "K",         "M",          "dt",
            "alpha",   "beta",      "lambda-min", "lambda-max",  "m-min",      "m-max",
            "seed",    "per-node",  "node-sample", "out-dir"};
}

Settings parse_settings(const std::string& text) {
    Settings out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("", "line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        std::string key = trim(std::string_view(body).substr(0, eq));
        if (key.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": empty key");
        out.emplace_back(std::move(key), trim(std::string_view(body).substr(eq + 1)));
    }
    return out;
}

Settings load_settings_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config", "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') return parse_settings(text);

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config", path + ": " + e.what());
    }
    const nlohmann::json& obj = doc.contains("config") ? doc.at("config") : doc;
    if (!obj.is_object()) throw ConfigError("config", path + ": expected a JSON object");
    Settings out;
    for (const auto& [key, value] : obj.items()) {
        out.emplace_back(key, value.is_string() ? value.get<std::string>() : value.dump());
    }
    return out;
}

void apply_setting(SimConfig& c, const std::string& key, const std::string& value) {
    if (value.empty()) {
        throw ConfigError(key, key == "mode" ? "missing required mode" : "missing value");
    }
    if (key == "mode") {
        c.mode = parse_enum<SimMode>(key, value, parse_mode, "coupled|meanfield");
    } else if (key == "scheduler") {
        c.scheduler = parse_enum<SchedulerKind>(key, value, parse_scheduler, "coop|br|mft|on|off");
    } else if (key == "estimator") {
        c.estimator = parse_enum<EstimatorMode>(key, value, parse_estimator, "per-sample|ensemble-mean");
    } else if (key == "control-rule") {
        c.control_rule = parse_enum<ControlRule>(key, value, parse_control_rule, "representative|majority");
    } else if (key == "routing") {
        c.routing = parse_enum<RoutingMode>(key, value, parse_routing, "sender-conserving|receiver-normalized");
    } else if (key == "rows") {
        c.rows = parse_number<std::size_t>(key, value);
        c.num_nodes.reset();
    } else if (key == "cols") {
        c.cols = parse_number<std::size_t>(key, value);
        c.num_nodes.reset();
    } else if (key == "N") {
        c.num_nodes = parse_number<std::size_t>(key, value);
    } else if (key == "topology-file") {
        c.topology_file = value;
    } else if (key == "K") {
        c.steps = parse_number<std::uint64_t>(key, value);
    } else if (key == "M") {
        c.samples = parse_number<std::size_t>(key, value);
    } else if (key == "dt") {
        c.dt = parse_number<double>(key, value);
    } else if (key == "alpha") {
        c.alpha = parse_number<double>(key, value);
        if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw ConfigError(key, "must lie in [0, 1]");
    } else if (key == "beta") {
        c.beta = parse_number<double>(key, value);
        if (!(c.beta >= 0.0 && c.beta <= 1.0)) throw ConfigError(key, "must lie in [0, 1]");
    } else if (key == "lambda-min") {
        c.ranges.lambda_min = parse_number<double>(key, value);
    } else if (key == "lambda-max") {
        c.ranges.lambda_max = parse_number<double>(key, value);
    } else if (key == "m-min") {
        c.ranges.m_min = parse_number<double>(key, value);
    } else if (key == "m-max") {
        c.ranges.m_max = parse_number<double>(key, value);
    } else if (key == "seed") {
        c.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "per-node") {
        c.per_node = parse_bool(key, value);
    } else if (key == "node-sample") {
        c.node_sample = parse_number<std::size_t>(key, value);
    } else if (key == "out-dir") {
        c.out_dir = value;
    } else {
        throw ConfigError(key, "unknown key");
    }
}

SimConfig make_config(const Settings& settings) {
    SimConfig c;
    for (const auto& [key, value] : settings) apply_setting(c, key, value);
    c.validate();
    return c;
}

Settings to_settings(const SimConfig& c) {
    Settings s;
    s.emplace_back("mode", std::string(to_string(c.mode)));
    s.emplace_back("scheduler", std::string(to_string(c.resolved_scheduler())));
    s.emplace_back("estimator", std::string(to_string(c.estimator)));
    s.emplace_back("control-rule", std::string(to_string(c.control_rule)));
    s.emplace_back("routing", std::string(to_string(c.routing)));
    s.emplace_back("rows", std::to_string(c.rows));
    s.emplace_back("cols", std::to_string(c.cols));
    if (c.num_nodes) s.emplace_back("N", std::to_string(*c.num_nodes));
    if (!c.topology_file.empty()) s.emplace_back("topology-file", c.topology_file);
    s.emplace_back("K", std::to_string(c.steps));
    s.emplace_back("M", std::to_string(c.samples));
    s.emplace_back("dt", format_shortest(c.dt));
    s.emplace_back("alpha", format_shortest(c.alpha));
    s.emplace_back("beta", format_shortest(c.beta));
    s.emplace_back("lambda-min", format_shortest(c.ranges.lambda_min));
    s.emplace_back("lambda-max", format_shortest(c.ranges.lambda_max));
    s.emplace_back("m-min", format_shortest(c.ranges.m_min));
    s.emplace_back("m-max", format_shortest(c.ranges.m_max));
    s.emplace_back("seed", std::to_string(c.seed));
    s.emplace_back("per-node", c.per_node ? "true" : "false");
    s.emplace_back("node-sample", std::to_string(c.node_sample));
    s.emplace_back("out-dir", c.out_dir);
    return s;
}

}  // namespace bpsim
