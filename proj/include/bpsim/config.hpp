#pragma once

// Flat key-value configuration: one `key = value` per line, `#` starts a
// comment. Keys use the long CLI flag spelling without dashes.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpsim/engine.hpp"

namespace bpsim {

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

using Settings = std::vector<std::pair<std::string, std::string>>;

/// Parses flat key-value text. Throws ConfigError on malformed lines.
Settings parse_settings(const std::string& text);

/// Reads a config file. Accepts the flat format, or a JSON object (either a
/// bare settings object or a run summary with a "config" member).
Settings load_settings_file(const std::string& path);

/// Applies one key. Throws ConfigError naming the key on unknown keys or
/// unparsable values.
void apply_setting(SimConfig& config, const std::string& key, const std::string& value);

/// Applies settings in order (later entries win), then validates.
SimConfig make_config(const Settings& settings);

/// Fully-resolved settings of a config, in a fixed key order.
Settings to_settings(const SimConfig& config);

std::vector<std::string> known_keys();

}  // namespace bpsim
