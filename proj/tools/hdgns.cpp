// Command-line driver: hdgns solve|study|diagnose [options]
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hdgns/driver.hpp"

int main(int argc, char** argv) {
    CLI::App app{"HDG solver for the steady incompressible Navier-Stokes equations on polygonal meshes"};
    std::string command;
    std::string config_path;
    std::optional<int> k, levels;
    std::optional<double> nu;
    std::optional<std::string> mesh, out, mode;

    app.add_option("command", command, "solve, study or diagnose")->required();
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_option("--k", k, "polynomial degree in [0, 4]");
    app.add_option("--nu", nu, "viscosity");
    app.add_option("--mesh", mesh, "tri|quad|hexdom[:n] or file:<path>");
    app.add_option("--levels", levels, "refinement levels for study/diagnose, in [2, 6]");
    app.add_option("--out", out, "output directory");
    app.add_option("--mode", mode, "monolithic or condensed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return hdgns::exit_config;
    }

    hdgns::RunConfig cfg;
    try {
        if (!config_path.empty()) hdgns::load_config_file(cfg, config_path);
        cfg.command = command;
        if (k) cfg.k = *k;
        if (nu) cfg.nu = *nu;
        if (levels) cfg.levels = *levels;
        if (out) cfg.out = *out;
        if (mesh) cfg.mesh = hdgns::parse_mesh_spec(*mesh);
        if (mode) cfg.mode = hdgns::parse_mode(*mode);
    } catch (const hdgns::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return hdgns::exit_config;
    }
    return hdgns::run(cfg, std::cout, std::cerr);
}
