#include "koopmatch/jobs.hpp"

#include "koopmatch/catalog.hpp"
#include "koopmatch/dictlearn.hpp"
#include "koopmatch/edmdm.hpp"
#include "koopmatch/laplace.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace koop {

using nlohmann::json;

nlohmann::json complex_to_json(const Complex& z) { return json::array({z.real(), z.imag()}); }

nlohmann::json cvec_to_json(const CVec& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(complex_to_json(v[i]));
    return arr;
}

nlohmann::json cmat_to_json(const CMat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json vec_to_json(const Vec& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Vec vec_from_json(const json& j) {
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

namespace {

constexpr const char* kSchemaVersion = "1";

void check_fields(const json& j, const std::string& ctx,
                  const std::vector<std::string>& required,
                  const std::vector<std::string>& optional = {}) {
    if (!j.is_object()) throw ValidationError(ctx + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const auto& r : required) known = known || key == r;
        for (const auto& o : optional) known = known || key == o;
        if (!known) throw ValidationError(ctx + ": unknown field '" + key + "'");
    }
    for (const auto& r : required)
        if (!j.contains(r)) throw ValidationError(ctx + ": missing field '" + r + "'");
}

SystemSpec system_from(const json& j, const std::string& ctx) {
    check_fields(j, ctx, {"id"}, {"params"});
    return catalog::make_system(j.at("id").get<std::string>(), j.value("params", json::object()));
}

EigenStack stack_from(const json& j, const std::string& ctx) {
    check_fields(j, ctx, {"stack"}, {"params"});
    return catalog_eigenstack(j.at("stack").get<std::string>(),
                              j.value("params", json::object()));
}

struct Box {
    Vec lo, hi;
    int n = 0;
};

Box box_from(const json& j, const std::string& ctx, bool with_n = true) {
    if (with_n)
        check_fields(j, ctx, {"lo", "hi", "n"});
    else
        check_fields(j, ctx, {"lo", "hi"});
    Box b;
    b.lo = vec_from_json(j.at("lo"));
    b.hi = vec_from_json(j.at("hi"));
    if (with_n) b.n = j.at("n").get<int>();
    return b;
}

std::vector<Vec> sample_box(const Box& b, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vec> out;
    for (int k = 0; k < b.n; ++k) {
        Vec x(b.lo.size());
        for (int i = 0; i < b.lo.size(); ++i)
            x[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * unit(rng);
        out.push_back(x);
    }
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot write artifact " + path.string());
    os << content;
}

Dictionary dictionary_from(const json& j, const std::string& ctx) {
    check_fields(j, ctx, {"kind"}, {"max_index"});
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "multinomial")
        return multinomial_dictionary(2, j.value("max_index", 9));
    throw ValidationError(ctx + ": unsupported dictionary kind '" + kind + "'");
}

// ---------------------------------------------------------------- subcommands

json run_keig(const json& p, std::uint64_t seed, const std::filesystem::path& dir,
              std::vector<std::string>& artifacts) {
    check_fields(p, "keig payload", {"mode"},
                 {"system", "lambda", "x_ref", "grid", "stack", "stack_params",
                  "surface_csv", "g0", "t_max"});
    const std::string mode = p.at("mode").get<std::string>();
    json metrics;

    auto write_grid = [&](const std::vector<Eigenfunction>& entries, const Box& grid,
                          const std::string& name) {
        std::ostringstream os;
        const int d = static_cast<int>(grid.lo.size());
        os << "x1";
        for (int i = 2; i <= d; ++i) os << ",x" << i;
        for (std::size_t e = 0; e < entries.size(); ++e)
            os << ",re_g" << (e + 1) << ",im_g" << (e + 1);
        os << "\n";
        const int n = grid.n;
        std::vector<Vec> pts;
        if (d == 1) {
            for (int i = 0; i < n; ++i)
                pts.push_back(vec1(grid.lo[0] + (grid.hi[0] - grid.lo[0]) * i / (n - 1)));
        } else {
            for (int i = 0; i < n; ++i)
                for (int jx = 0; jx < n; ++jx)
                    pts.push_back(
                        vec2(grid.lo[0] + (grid.hi[0] - grid.lo[0]) * i / (n - 1),
                             grid.lo[1] + (grid.hi[1] - grid.lo[1]) * jx / (n - 1)));
        }
        for (const Vec& x : pts) {
            os << fmt(x[0]);
            for (int i = 1; i < d; ++i) os << "," << fmt(x[i]);
            for (const auto& g : entries) {
                Complex v;
                try {
                    v = g.eval(x);
                } catch (const std::exception&) {
                    v = Complex(std::nan(""), std::nan(""));
                }
                os << "," << fmt(v.real()) << "," << fmt(v.imag());
            }
            os << "\n";
        }
        write_text(dir / name, os.str());
        artifacts.push_back(name);
    };

    if (mode == "quadrature") {
        SystemSpec sys = system_from(p.at("system"), "keig system");
        const Complex lambda(p.at("lambda")[0].get<double>(), p.at("lambda")[1].get<double>());
        const double x_ref = p.at("x_ref").get<double>();
        Eigenfunction g = make_quadrature_keig(sys, lambda, x_ref);
        Box grid = box_from(p.at("grid"), "keig grid");
        write_grid({g}, grid, "eigenfunction.csv");
        metrics["lambda"] = complex_to_json(lambda);
        std::vector<Vec> pts;
        for (int i = 0; i < grid.n; ++i)
            pts.push_back(vec1(grid.lo[0] + (grid.hi[0] - grid.lo[0]) * i / (grid.n - 1)));
        metrics["residual"] = keig_residual(sys, g, pts);
    } else if (mode == "catalog") {
        EigenStack st = stack_from(json{{"stack", p.at("stack")},
                                        {"params", p.value("stack_params", json::object())}},
                                   "keig stack");
        Box grid = box_from(p.at("grid"), "keig grid");
        write_grid(st.entries, grid, "eigenfunction.csv");
        metrics["eigenvalues"] = cvec_to_json(st.eigenvalues());
    } else if (mode == "characteristics") {
        SystemSpec sys = system_from(p.at("system"), "keig system");
        const Complex lambda(p.at("lambda")[0].get<double>(), p.at("lambda")[1].get<double>());
        // Initial surface from a polyline CSV produced by the levelset job.
        std::ifstream in(p.at("surface_csv").get<std::string>());
        if (!in) throw ValidationError("keig: cannot read surface_csv");
        std::string line;
        std::getline(in, line);  // header
        LevelSet ls;
        while (std::getline(in, line)) {
            std::istringstream row(line);
            double a, b;
            char comma;
            row >> a >> comma >> b;
            ls.points.push_back(vec2(a, b));
        }
        if (ls.points.size() > 2 && (ls.points.front() - ls.points.back()).norm() < 1e-12) {
            ls.closed = true;
            ls.points.pop_back();
        }
        Complex g0(p.at("g0")[0].get<double>(), p.at("g0")[1].get<double>());
        std::vector<Complex> vals(ls.points.size(), g0);
        InitialSurface surf = surface_from_levelset(ls, vals);
        Eigenfunction g =
            make_characteristics_keig(sys, lambda, surf, p.value("t_max", 50.0));
        Box grid = box_from(p.at("grid"), "keig grid");
        write_grid({g}, grid, "eigenfunction.csv");
        metrics["lambda"] = complex_to_json(lambda);
    } else {
        throw ValidationError("keig: unknown mode '" + mode + "'");
    }
    (void)seed;
    return metrics;
}

json run_match(const json& p, std::uint64_t seed, const std::filesystem::path& dir,
               std::vector<std::string>& artifacts) {
    check_fields(p, "match payload",
                 {"g1", "g2", "system1", "system2", "samples", "horizon", "steps"});
    EigenStack g1 = stack_from(p.at("g1"), "match g1");
    EigenStack g2 = stack_from(p.at("g2"), "match g2");
    SystemSpec sys1 = system_from(p.at("system1"), "match system1");
    SystemSpec sys2 = system_from(p.at("system2"), "match system2");
    TransformMap h = build_match(g1, g2);

    Box box = box_from(p.at("samples"), "match samples");
    std::vector<Vec> samples = sample_box(box, seed);

    int accepted = 0;
    std::ostringstream os;
    const int d = static_cast<int>(box.lo.size());
    os << "accepted";
    for (int i = 1; i <= d; ++i) os << ",x" << i;
    for (int i = 1; i <= d; ++i) os << ",y" << i;
    os << "\n";
    for (const Vec& x : samples) {
        const bool ok = h.in_domain(x);
        os << (ok ? 1 : 0);
        for (int i = 0; i < d; ++i) os << "," << fmt(x[i]);
        if (ok) {
            Vec y = h.forward(x);
            for (int i = 0; i < d; ++i) os << "," << fmt(y[i]);
            ++accepted;
        } else {
            for (int i = 0; i < d; ++i) os << ",nan";
        }
        os << "\n";
    }
    write_text(dir / "samples.csv", os.str());
    artifacts.push_back("samples.csv");

    DefectResult defect = conjugacy_defect(h, sys1, sys2, samples,
                                           p.at("horizon").get<double>(),
                                           p.at("steps").get<int>());
    json metrics;
    metrics["defect"] = defect.defect;
    metrics["acceptance_rate"] = static_cast<double>(accepted) / samples.size();
    metrics["retained"] = defect.retained;
    metrics["skipped"] = defect.skipped;
    return metrics;
}

json run_edmd(const json& p, std::uint64_t seed, const std::filesystem::path& dir,
              std::vector<std::string>& artifacts) {
    check_fields(p, "edmd payload", {"system", "dictionary"}, {"fit", "truncate"});
    SystemSpec sys = system_from(p.at("system"), "edmd system");
    Dictionary dict = dictionary_from(p.at("dictionary"), "edmd dictionary");

    KoopmanMatrix k;
    if (p.contains("fit") && !p.at("fit").is_null()) {
        const json& f = p.at("fit");
        check_fields(f, "edmd fit", {"box", "n", "dt", "ridge"});
        Box box = box_from(f.at("box"), "edmd box", false);
        SamplePairs pairs =
            sample_pairs(sys, box.lo, box.hi, f.at("n").get<int>(), f.at("dt").get<double>(), seed);
        k = edmd_fit(pairs, dict, f.at("ridge").get<double>());
    } else if (p.value("truncate", false)) {
        k = project_generator_truncated(sys, dict);
    } else {
        k = project_generator(sys, dict);
    }

    SpectralDecomposition dec = left_eigens(k);
    json out;
    out["k"] = cmat_to_json(k.k);
    out["mode"] = k.mode == KoopmanMatrix::Mode::generator ? "generator" : "discrete";
    out["dt"] = k.dt;
    out["eigenvalues"] = cvec_to_json(dec.eigenvalues);
    out["left_vectors"] = cmat_to_json(dec.left_vectors);
    out["distinct"] = dec.distinct;
    write_text(dir / "koopman.json", out.dump(2) + "\n");
    artifacts.push_back("koopman.json");

    json metrics;
    metrics["n"] = dict.n;
    metrics["distinct"] = dec.distinct;
    metrics["min_gap"] = dec.min_gap;
    return metrics;
}

json run_edmdm(const json& p, std::uint64_t seed, const std::filesystem::path& dir,
               std::vector<std::string>& artifacts) {
    check_fields(p, "edmdm payload",
                 {"system1", "system2", "dictionary", "matching_point"},
                 {"truncate", "data", "grid"});
    SystemSpec sys1 = system_from(p.at("system1"), "edmdm system1");
    SystemSpec sys2 = system_from(p.at("system2"), "edmdm system2");
    Dictionary dict = dictionary_from(p.at("dictionary"), "edmdm dictionary");
    check_fields(p.at("matching_point"), "matching_point", {"z1", "z2"});
    MatchingPoint mp{vec_from_json(p.at("matching_point").at("z1")),
                     vec_from_json(p.at("matching_point").at("z2"))};

    KoopmanMatrix k1, k2;
    if (p.contains("data") && !p.at("data").is_null()) {
        const json& f = p.at("data");
        check_fields(f, "edmdm data", {"box1", "box2", "n", "dt", "ridge"});
        Box b1 = box_from(f.at("box1"), "edmdm box1", false);
        Box b2 = box_from(f.at("box2"), "edmdm box2", false);
        SamplePairs d1 = sample_pairs(sys1, b1.lo, b1.hi, f.at("n").get<int>(),
                                      f.at("dt").get<double>(), seed);
        SamplePairs d2 = sample_pairs(sys2, b2.lo, b2.hi, f.at("n").get<int>(),
                                      f.at("dt").get<double>(), seed + 1);
        k1 = edmd_fit(d1, dict, f.at("ridge").get<double>());
        k2 = edmd_fit(d2, dict, f.at("ridge").get<double>());
    } else if (p.value("truncate", false)) {
        k1 = project_generator_truncated(sys1, dict);
        k2 = project_generator_truncated(sys2, dict);
    } else {
        k1 = project_generator(sys1, dict);
        k2 = project_generator(sys2, dict);
    }

    MatchResult res = edmdm_pipeline(k1, k2, dict, mp);

    json out;
    out["d_diag"] = cvec_to_json(res.d_diag);
    out["h_matrix"] = cmat_to_json(res.h_matrix);
    out["similarity_residual"] = res.similarity_residual;
    out["denominators"] = cvec_to_json(res.denominators);
    out["lambda1"] = cvec_to_json(res.lambda1);
    out["lambda2"] = cvec_to_json(res.lambda2);
    out["distinct_spectra"] = res.distinct_spectra;
    write_text(dir / "match_result.json", out.dump(2) + "\n");
    artifacts.push_back("match_result.json");

    if (p.contains("grid")) {
        Box grid = box_from(p.at("grid"), "edmdm grid");
        std::ostringstream os;
        os << "x1,x2,h1,h2\n";
        for (int i = 0; i < grid.n; ++i)
            for (int j = 0; j < grid.n; ++j) {
                Vec x = vec2(grid.lo[0] + (grid.hi[0] - grid.lo[0]) * i / (grid.n - 1),
                             grid.lo[1] + (grid.hi[1] - grid.lo[1]) * j / (grid.n - 1));
                Vec y = res.h_map.forward(x);
                os << fmt(x[0]) << "," << fmt(x[1]) << "," << fmt(y[0]) << "," << fmt(y[1])
                   << "\n";
            }
        write_text(dir / "h_grid.csv", os.str());
        artifacts.push_back("h_grid.csv");
    }

    json metrics;
    metrics["similarity_residual"] = res.similarity_residual;
    metrics["h_matrix"] = cmat_to_json(res.h_matrix);
    metrics["d_diag"] = cvec_to_json(res.d_diag);
    metrics["matching_point_residual"] =
        (res.h_map.forward(mp.z1) - mp.z2).norm();
    return metrics;
}

json run_train(const json& p, std::uint64_t seed, const std::filesystem::path& dir,
               std::vector<std::string>& artifacts) {
    check_fields(p, "train payload", {"system1", "system2", "data", "config"});
    SystemSpec sys1 = system_from(p.at("system1"), "train system1");
    SystemSpec sys2 = system_from(p.at("system2"), "train system2");
    const json& d = p.at("data");
    check_fields(d, "train data", {"box1", "box2", "n", "dt"});
    Box b1 = box_from(d.at("box1"), "train box1", false);
    Box b2 = box_from(d.at("box2"), "train box2", false);
    SamplePairs data1 =
        sample_pairs(sys1, b1.lo, b1.hi, d.at("n").get<int>(), d.at("dt").get<double>(), seed);
    SamplePairs data2 = sample_pairs(sys2, b2.lo, b2.hi, d.at("n").get<int>(),
                                     d.at("dt").get<double>(), seed + 1);

    const json& c = p.at("config");
    check_fields(c, "train config", {},
                 {"lr", "ridge", "beta", "iters", "sim_every", "width"});
    TrainConfig cfg;
    cfg.lr = c.value("lr", cfg.lr);
    cfg.ridge = c.value("ridge", cfg.ridge);
    cfg.beta = c.value("beta", cfg.beta);
    cfg.iters = c.value("iters", cfg.iters);
    cfg.sim_every = c.value("sim_every", cfg.sim_every);
    cfg.width = c.value("width", cfg.width);
    cfg.seed = seed;

    TrainResult res = train(data1, data2, cfg);

    json ckpt;
    ckpt["version"] = "koopmatch-ckpt-1";
    ckpt["width"] = res.dict.width;
    ckpt["out_dim"] = res.dict.out_dim;
    ckpt["theta"] = vec_to_json(res.dict.flatten());
    ckpt["k1"] = cmat_to_json(res.k1.k);
    ckpt["k2"] = cmat_to_json(res.k2.k);
    ckpt["dt"] = res.k1.dt;
    write_text(dir / "checkpoint.json", ckpt.dump() + "\n");
    artifacts.push_back("checkpoint.json");

    std::ostringstream os;
    os << "iter,J,sim_residual,spectrum_gap\n";
    for (std::size_t i = 0; i < res.history.loss.size(); ++i)
        os << i << "," << fmt(res.history.loss[i]) << "," << fmt(res.history.sim_residual[i])
           << "," << fmt(res.history.spectrum_gap[i]) << "\n";
    write_text(dir / "history.csv", os.str());
    artifacts.push_back("history.csv");

    json metrics;
    metrics["final_loss"] = res.history.loss.empty() ? 0.0 : res.history.loss.back();
    metrics["aborted"] = res.history.aborted;
    metrics["iterations"] = res.history.loss.size();
    return metrics;
}

json run_levelset(const json& p, std::uint64_t seed, const std::filesystem::path& dir,
                  std::vector<std::string>& artifacts) {
    check_fields(p, "levelset payload",
                 {"system", "observable", "lambda", "direction", "horizon", "quad_step",
                  "x0", "step", "max_points"});
    SystemSpec sys = system_from(p.at("system"), "levelset system");
    LaplaceConfig cfg;
    const std::string obs = p.at("observable").get<std::string>();
    if (obs == "x1")
        cfg.observable = [](const Vec& x) { return x[0]; };
    else if (obs == "x2")
        cfg.observable = [](const Vec& x) { return x[1]; };
    else if (obs == "norm")
        cfg.observable = [](const Vec& x) { return x.norm(); };
    else
        throw ValidationError("levelset: unknown observable '" + obs + "'");
    cfg.lambda = Complex(p.at("lambda")[0].get<double>(), p.at("lambda")[1].get<double>());
    cfg.direction = p.at("direction").get<std::string>() == "backward"
                        ? LaplaceConfig::Direction::backward
                        : LaplaceConfig::Direction::forward;
    cfg.horizon = p.at("horizon").get<double>();
    cfg.step = p.at("quad_step").get<double>();

    LevelSet ls = levelset_continuation(cfg, sys, vec_from_json(p.at("x0")),
                                        p.at("step").get<double>(),
                                        p.at("max_points").get<int>());

    std::ostringstream os;
    os << "x1,x2\n";
    for (const Vec& pt : ls.points) os << fmt(pt[0]) << "," << fmt(pt[1]) << "\n";
    if (ls.closed) os << fmt(ls.points.front()[0]) << "," << fmt(ls.points.front()[1]) << "\n";
    write_text(dir / "levelset.csv", os.str());
    artifacts.push_back("levelset.csv");

    double max_dev = 0.0;
    for (const Vec& pt : ls.points)
        max_dev = std::max(max_dev, std::abs(std::abs(laplace_average(cfg, sys, pt)) - ls.level));

    json metrics;
    metrics["level"] = ls.level;
    metrics["closed"] = ls.closed;
    metrics["points"] = ls.points.size();
    metrics["max_level_deviation"] = max_dev;
    (void)seed;
    return metrics;
}

json run_defect(const json& p, std::uint64_t seed, const std::filesystem::path& dir,
                std::vector<std::string>& artifacts) {
    check_fields(p, "defect payload",
                 {"transform", "system1", "system2", "samples", "horizon", "steps"});
    SystemSpec sys1 = system_from(p.at("system1"), "defect system1");
    SystemSpec sys2 = system_from(p.at("system2"), "defect system2");

    TransformMap h;
    const json& t = p.at("transform");
    if (t.is_string() && t.get<std::string>() == "identity") {
        h = identity_map(sys1.dim);
    } else {
        check_fields(t, "defect transform", {"g1", "g2"});
        h = build_match(stack_from(t.at("g1"), "defect g1"), stack_from(t.at("g2"), "defect g2"));
    }

    Box box = box_from(p.at("samples"), "defect samples");
    std::vector<Vec> samples = sample_box(box, seed);
    DefectResult res = conjugacy_defect(h, sys1, sys2, samples, p.at("horizon").get<double>(),
                                        p.at("steps").get<int>());
    json metrics;
    metrics["defect"] = res.defect;
    metrics["retained"] = res.retained;
    metrics["skipped"] = res.skipped;
    (void)dir;
    (void)artifacts;
    return metrics;
}

}  // namespace

RunReport run_job(const json& config, const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    RunReport report;
    report.config = config;

    try {
        check_fields(config, "config", {"subcommand", "version", "seed", "payload"}, {"io"});
        const std::string version = config.at("version").get<std::string>();
        if (version != kSchemaVersion)
            throw ValidationError("config: unsupported schema version '" + version +
                                  "' (expected '" + std::string(kSchemaVersion) + "')");
        if (!config.at("seed").is_number_integer())
            throw ValidationError("config: seed must be an integer");
        const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
        const std::string sub = config.at("subcommand").get<std::string>();
        const json& payload = config.at("payload");

        std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);

        if (sub == "keig")
            report.metrics = run_keig(payload, seed, dir, report.artifacts);
        else if (sub == "match")
            report.metrics = run_match(payload, seed, dir, report.artifacts);
        else if (sub == "edmd")
            report.metrics = run_edmd(payload, seed, dir, report.artifacts);
        else if (sub == "edmdm")
            report.metrics = run_edmdm(payload, seed, dir, report.artifacts);
        else if (sub == "train")
            report.metrics = run_train(payload, seed, dir, report.artifacts);
        else if (sub == "levelset")
            report.metrics = run_levelset(payload, seed, dir, report.artifacts);
        else if (sub == "defect")
            report.metrics = run_defect(payload, seed, dir, report.artifacts);
        else
            throw ValidationError("config: unknown subcommand '" + sub + "'");

        json disk;
        disk["config"] = report.config;
        disk["metrics"] = report.metrics;
        disk["artifacts"] = report.artifacts;
        disk["status"] = "ok";
        write_text(dir / "report.json", disk.dump(2) + "\n");
        report.artifacts.push_back("report.json");
        report.status = "ok";
        report.exit_code = 0;
    } catch (const ValidationError& e) {
        report.status = std::string("validation_error: ") + e.what();
        report.exit_code = 2;
    } catch (const NumericalError& e) {
        report.status = std::string("numerical_error: ") + e.what();
        report.exit_code = 3;
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace koop
