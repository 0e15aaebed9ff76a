// bpsim: backpressure / mean-field queue simulator command line.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bpsim/checks.hpp"
#include "bpsim/config.hpp"
#include "bpsim/engine.hpp"
#include "bpsim/format.hpp"
#include "bpsim/topology.hpp"

namespace fs = std::filesystem;
using namespace bpsim;

namespace {

struct ConfigFlags {
    std::string config_file;
    std::map<std::string, std::string> values;
    bool per_node = false;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
    cmd->add_option("--config", flags.config_file, "flat key=value file or a summary.json");
    for (const std::string& key : known_keys()) {
        if (key == "per-node") continue;
        cmd->add_option("--" + key, flags.values[key]);
    }
    cmd->add_flag("--per-node", flags.per_node, "write per-node queue columns");
}

Settings collect_settings(const CLI::App* cmd, const ConfigFlags& flags) {
    Settings s;
    if (!flags.config_file.empty()) s = load_settings_file(flags.config_file);
    for (const std::string& key : known_keys()) {
        if (key == "per-node") continue;
        if (cmd->count("--" + key) > 0) s.emplace_back(key, flags.values.at(key));
    }
    if (flags.per_node) s.emplace_back("per-node", "true");
    return s;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

int cmd_simulate(const SimConfig& config) {
    ensure_dir(config.out_dir);
    const Trajectory traj = run(config);
    const fs::path dir(config.out_dir);
    write_file(dir / "trajectory.csv", trajectory_csv(traj, config.per_node));
    write_file(dir / "summary.json", summary_json(config, traj).dump(2) + "\n");
    std::cout << "wrote " << (dir / "trajectory.csv").string() << " (" << traj.records.size()
              << " rows) and " << (dir / "summary.json").string() << "\n";
    return 0;
}

// "label:key=value,key=value"
std::pair<std::string, Settings> parse_variant(const std::string& spec, std::size_t index) {
    std::string label = "run" + std::to_string(index);
    std::string body = spec;
    if (const auto colon = spec.find(':'); colon != std::string::npos && spec.find('=') > colon) {
        label = spec.substr(0, colon);
        body = spec.substr(colon + 1);
    }
    Settings s;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        const auto comma = body.find(',', pos);
        const std::string item = body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!item.empty()) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw ConfigError("variant", "expected key=value in '" + item + "'");
            s.emplace_back(item.substr(0, eq), item.substr(eq + 1));
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return {label, s};
}

int cmd_compare(const Settings& base, const std::vector<std::string>& variants) {
    if (variants.size() < 2) throw ConfigError("variant", "compare needs at least two --variant");
    std::vector<SimConfig> configs;
    std::vector<std::string> labels;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        auto [label, overrides] = parse_variant(variants[v], v);
        Settings s = base;
        s.insert(s.end(), overrides.begin(), overrides.end());
        configs.push_back(make_config(s));
        labels.push_back(label);
    }
    const std::string out_dir = configs.front().out_dir;
    ensure_dir(out_dir);
    const ComparisonTable table = compare_runs(configs, labels);
    std::ostringstream csv;
    write_comparison_csv(csv, table);
    write_file(fs::path(out_dir) / "comparison.csv", csv.str());
    write_file(fs::path(out_dir) / "comparison.json", comparison_json(table).dump(2) + "\n");
    for (const auto& row : table.rows) {
        std::cout << row.label << ": plateau " << format_g9(row.plateau) << ", stabilization "
                  << (row.stabilization ? format_g9(*row.stabilization) : std::string("n/a"))
                  << ", throughput " << format_g9(row.throughput) << "\n";
    }
    return 0;
}

int cmd_validate(std::size_t trials, std::uint64_t seed, const std::string& fault) {
    CheckOptions opt;
    opt.trials = trials;
    opt.seed = seed;
    if (fault == "tie-break") {
        opt.scheduler_tie = TieBreak::Transmit;
    } else if (!fault.empty()) {
        throw ConfigError("inject-fault", "unknown fault '" + fault + "' (expected tie-break)");
    }
    bool ok = true;
    for (const CheckResult& r : run_builtin_checks(opt)) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        ok = ok && r.pass;
    }
    std::cout << (ok ? "all checks passed" : "some checks FAILED") << "\n";
    return ok ? 0 : 1;
}

int cmd_topology(const Settings& settings, const std::string& out) {
    SimConfig c = make_config(settings);
    const Topology topo = make_topology(c);
    if (out.empty() || out == "-") {
        write_edge_list(std::cout, topo);
    } else {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + out);
        write_edge_list(f, topo);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* env = std::getenv("SIM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) set_worker_count(n);
    }

    CLI::App app{"Backpressure and mean-field queue simulator for multi-hop sensor networks"};
    app.require_subcommand(1);

    ConfigFlags sim_flags;
    auto* simulate = app.add_subcommand("simulate", "run one simulation and write CSV + JSON");
    add_config_flags(simulate, sim_flags);

    ConfigFlags cmp_flags;
    std::vector<std::string> variants;
    auto* compare = app.add_subcommand("compare", "run several variants of a base config");
    add_config_flags(compare, cmp_flags);
    compare->add_option("--variant", variants, "label:key=value,... (repeat)")->required();

    std::size_t trials = 100;
    std::uint64_t check_seed = 7;
    std::string fault;
    auto* validate_cmd = app.add_subcommand("validate", "run the built-in oracle suite");
    validate_cmd->add_option("--trials", trials, "random scheduler instances");
    validate_cmd->add_option("--seed", check_seed);
    validate_cmd->add_option("--inject-fault", fault, "negative control: tie-break");

    ConfigFlags topo_flags;
    std::string topo_out;
    auto* topology = app.add_subcommand("topology", "dump the grid edge list");
    add_config_flags(topology, topo_flags);
    topology->add_option("--out", topo_out, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) return cmd_simulate(make_config(collect_settings(simulate, sim_flags)));
        if (*compare) return cmd_compare(collect_settings(compare, cmp_flags), variants);
        if (*validate_cmd) return cmd_validate(trials, check_seed, fault);
        if (*topology) return cmd_topology(collect_settings(topology, topo_flags), topo_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
