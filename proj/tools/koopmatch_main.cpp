#include "koopmatch/jobs.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

namespace {

nlohmann::json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw koop::ValidationError("cannot open config file " + path);
    nlohmann::json config;
    try {
        in >> config;
    } catch (const nlohmann::json::parse_error& e) {
        throw koop::ValidationError(std::string("config parse error: ") + e.what());
    }
    return config;
}

int emit(const koop::RunReport& report) {
    nlohmann::json out;
    out["status"] = report.status;
    out["metrics"] = report.metrics;
    out["artifacts"] = report.artifacts;
    out["wall_seconds"] = report.wall_seconds;
    std::cout << out.dump(2) << "\n";
    if (report.exit_code != 0) std::cerr << report.status << "\n";
    return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"koopmatch: matching dynamical systems through Koopman eigenfunctions"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    long long seed_override = -1;
    bool have_seed = false;

    auto add_job = [&](const std::string& name, const std::string& desc) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "JSON job config")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed_override, "seed override")
            ->each([&](const std::string&) { have_seed = true; });
        return sub;
    };

    add_job("keig", "evaluate eigenfunctions onto CSV grids");
    add_job("match", "build a matching transformation and measure its defect");
    add_job("edmd", "project or fit a Koopman matrix");
    add_job("edmdm", "run the matching EDMD pipeline");
    add_job("train", "learn a shared dictionary for two systems");
    add_job("levelset", "trace a Laplace-average level set");
    add_job("defect", "conjugacy defect of a given transformation");

    std::string reproduce_name;
    CLI::App* rep = app.add_subcommand("reproduce", "run a pinned reproduction case");
    rep->add_option("name", reproduce_name, "one of the catalog case names")->required();
    rep->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (rep->parsed()) return emit(koop::reproduce(reproduce_name, out_dir));
        CLI::App* sub = app.get_subcommands().front();
        nlohmann::json config = load_config(config_path);
        config["subcommand"] = sub->get_name();
        if (have_seed) config["seed"] = seed_override;
        return emit(koop::run_job(config, out_dir));
    } catch (const koop::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
