#pragma once

#include "koopmatch/core.hpp"

#include <json.hpp>

namespace koop {

// Outcome of one CLI job. The on-disk report.json carries everything except
// wall time, so reruns with identical configs are byte-identical.
struct RunReport {
    nlohmann::json config;
    nlohmann::json metrics;
    std::vector<std::string> artifacts;
    std::string status = "ok";
    int exit_code = 0;
    double wall_seconds = 0.0;
};

// Validates the config (schema version, seed, strict field checking) and
// dispatches to the owning module. Artifacts land in out_dir.
RunReport run_job(const nlohmann::json& config, const std::string& out_dir);

// Pinned configs for the reproduction suite.
nlohmann::json reproduce_config(const std::string& name);
std::vector<std::string> reproduce_names();

// Runs the pinned config and checks golden expectations; exit code 3 on a
// golden mismatch, with the diff summary in metrics.
RunReport reproduce(const std::string& name, const std::string& out_dir);

// Serialization helpers shared with tests: complex numbers as [re, im].
nlohmann::json complex_to_json(const Complex& z);
nlohmann::json cmat_to_json(const CMat& m);
nlohmann::json cvec_to_json(const CVec& v);
nlohmann::json vec_to_json(const Vec& v);
Vec vec_from_json(const nlohmann::json& j);

}  // namespace koop
