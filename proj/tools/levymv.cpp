#include "commands.hpp"
#include "presets.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

struct Options {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::size_t threads = 0;
};

levymv::json load_config(const Options& o, const std::string& command) {
    using levymv::ConfigError;
    if (!o.config_path.empty() && !o.preset.empty()) throw ConfigError("give either --config or --preset, not both");
    levymv::json root;
    if (!o.preset.empty()) {
        const auto& all = levymv::cli::presets();
        const auto it = all.find(o.preset);
        if (it == all.end()) throw ConfigError("unknown preset " + o.preset);
        if (it->second.command != command) throw ConfigError("preset " + o.preset + " belongs to the " + it->second.command + " command");
        root = it->second.config;
    } else if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw ConfigError("cannot open config " + o.config_path);
        try {
            root = levymv::json::parse(in);
        } catch (const levymv::json::parse_error& e) {
            throw ConfigError(o.config_path + ": " + e.what());
        }
    } else {
        throw ConfigError("no configuration: pass --config FILE or --preset NAME");
    }
    // Files written by --write-presets and config.resolved.json name their command.
    if (root.is_object() && root.contains("command")) {
        if (root["command"] != command) throw ConfigError("config is for the " + root["command"].dump() + " command");
        root.erase("command");
    }
    if (o.seed) root["seed"] = *o.seed;
    return root;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Particle and PDE experiments for McKean-Vlasov SDEs driven by Levy processes"};
    app.require_subcommand(0, 1);
    bool list = false;
    app.add_flag("--list-presets", list, "List the built-in presets and exit");
    std::string preset_dir;
    app.add_option("--write-presets", preset_dir, "Write every preset as DIR/<name>.json and exit");

    Options opt;
    std::vector<std::pair<std::string, CLI::App*>> subs;
    for (const auto& name : levymv::cli::command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("-c,--config", opt.config_path, "JSON configuration file");
        sub->add_option("-p,--preset", opt.preset, "Built-in configuration (see --list-presets)");
        sub->add_option("--seed", opt.seed, "Override the configured seed");
        sub->add_option("-o,--out", opt.out, "Output directory")->capture_default_str();
        sub->add_option("-t,--threads", opt.threads, "Worker threads, 0 for all cores; never changes results")->capture_default_str();
        subs.emplace_back(name, sub);
    }
    CLI11_PARSE(app, argc, argv);

    if (list) {
        for (const auto& [name, p] : levymv::cli::presets())
            std::cout << name << "\t" << p.command << "\t" << p.config.value("description", "") << "\n";
        return 0;
    }
    if (!preset_dir.empty()) {
        std::filesystem::create_directories(preset_dir);
        for (const auto& [name, p] : levymv::cli::presets()) {
            levymv::json doc = p.config;
            doc["command"] = p.command;
            std::ofstream out(std::filesystem::path(preset_dir) / (name + ".json"));
            out << doc.dump(2) << "\n";
        }
        return 0;
    }
    for (const auto& [name, sub] : subs) {
        if (!sub->parsed()) continue;
        try {
            const auto root = load_config(opt, name);
            levymv::cli::RunContext ctx;
            ctx.out_dir = opt.out;
            ctx.threads = opt.threads;
            if (!opt.config_path.empty()) ctx.base_dir = std::filesystem::path(opt.config_path).parent_path();
            const auto result = levymv::cli::run_command(name, root, ctx);
            std::cout << result.summary.dump(2) << "\n";
            if (!result.pass) {
                std::cerr << name << ": one or more checks failed (see " << (ctx.out_dir / "summary.json").string() << ")\n";
                return 1;
            }
            return 0;
        } catch (const levymv::ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }
    std::cerr << app.help();
    return 2;
}
