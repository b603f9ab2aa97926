// Command-line front end: run single configs or presets, sweep a parameter,
// summarize finished run directories, list presets.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "latmon/runner.hpp"

namespace fs = std::filesystem;
using namespace latmon;

static RunConfig load_config_arg(const std::string& arg) {
    if (fs::exists(arg)) return parse_config(arg);
    if (const Preset* p = find_preset(arg)) return parse_config_json(nlohmann::json::parse(p->config));
    throw std::runtime_error("no such config file or preset: " + arg);
}

static void print_summary(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "ensemble.json");
    if (!in) {
        std::cout << dir << ": no ensemble.json (run finished?)\n";
        return;
    }
    nlohmann::json j;
    in >> j;
    std::string engine = "?";
    std::ifstream cin_(fs::path(dir) / "config.json");
    if (cin_) {
        nlohmann::json c;
        cin_ >> c;
        engine = c.value("engine", "?");
    }
    std::printf("%-24s %-10s peak=%.4f slope_med=%.3e pos_frac=%.2f growth=%.2f\n", dir.c_str(),
                engine.c_str(), j["spectral"].value("median", 0.0),
                j["envelope"].value("slope_median", 0.0),
                j["envelope"].value("positive_fraction", 0.0),
                j["envelope"].value("growth_ratio", 0.0));
}

int main(int argc, char** argv) {
    CLI::App app{"conditional dynamics of cavity-monitored lattice bosons"};
    app.require_subcommand(1);

    std::string config_arg;
    int jobs = 1;

    auto* run = app.add_subcommand("run", "run one config or preset");
    run->add_option("config", config_arg, "config file path or preset name")->required();
    run->add_option("--jobs", jobs, "worker threads (outputs are independent of this)");

    std::string sweep_param;
    std::vector<double> sweep_values;
    auto* sweep = app.add_subcommand("sweep", "run a config across parameter values");
    sweep->add_option("config", config_arg, "config file path or preset name")->required();
    sweep->add_option("--param", sweep_param, "physics parameter: gamma|J|U|N|eta")->required();
    sweep->add_option("--values", sweep_values, "parameter values")->required()->expected(-1);
    sweep->add_option("--jobs", jobs, "worker threads");

    std::vector<std::string> report_dirs;
    auto* report = app.add_subcommand("report", "summarize finished run directories");
    report->add_option("dirs", report_dirs, "run output directories")->required()->expected(-1);

    auto* presets_cmd = app.add_subcommand("presets", "list or materialize presets");
    std::string presets_write_dir;
    bool presets_list = false;
    presets_cmd->add_flag("--list,!--no-list", presets_list, "list presets (default)");
    presets_cmd->add_option("--write", presets_write_dir, "write preset config files to a directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            RunConfig c = load_config_arg(config_arg);
            if (c.engine == Engine::sme && !c.eta_sweep.empty()) {
                auto results = run_eta_sweep(c, jobs);
                for (std::size_t i = 0; i < results.size(); ++i)
                    std::printf("eta run %zu: %zu trajectories, %zu failures\n", i,
                                results[i].records.size(), results[i].failures.size());
            } else {
                auto res = run_batch(c, jobs);
                std::printf("%s: %zu trajectories (%zu failed), outputs in %s\n",
                            engine_name(c.engine).c_str(), res.records.size(),
                            res.failures.size(), c.output_dir.c_str());
            }
        } else if (*sweep) {
            RunConfig base = load_config_arg(config_arg);
            for (double v : sweep_values) {
                RunConfig c = base;
                nlohmann::json raw = base.raw;
                if (sweep_param == "gamma" || sweep_param == "J" || sweep_param == "U" ||
                    sweep_param == "eta")
                    raw["physics"][sweep_param] = v;
                else if (sweep_param == "N")
                    raw["physics"]["N"] = int(v);
                else
                    throw std::runtime_error("sweep: unsupported parameter " + sweep_param);
                char sub[64];
                std::snprintf(sub, sizeof(sub), "%s_%g", sweep_param.c_str(), v);
                raw["output_dir"] = (fs::path(base.output_dir) / sub).string();
                RunConfig c2 = parse_config_json(raw);
                auto res = run_batch(c2, jobs);
                std::printf("%s=%g: %zu trajectories (%zu failed) -> %s\n", sweep_param.c_str(), v,
                            res.records.size(), res.failures.size(), c2.output_dir.c_str());
            }
        } else if (*report) {
            for (const auto& d : report_dirs) print_summary(d);
            if (report_dirs.size() >= 2)
                std::printf("(spectral peaks across engines should agree at matched physics)\n");
        } else if (*presets_cmd) {
            if (!presets_write_dir.empty()) {
                fs::create_directories(presets_write_dir);
                for (const auto& p : presets()) {
                    std::ofstream os(fs::path(presets_write_dir) / (std::string(p.name) + ".json"));
                    os << p.config << "\n";
                }
                std::printf("wrote %zu preset files to %s\n", presets().size(),
                            presets_write_dir.c_str());
            } else {
                for (const auto& p : presets()) std::printf("%-8s %s\n", p.name, p.description);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
