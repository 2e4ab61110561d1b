#pragma once

// Executes an ExperimentConfig and writes CSV/JSON artifacts plus a manifest
// with SHA-256 checksums.

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "degen/classifier.hpp"
#include "degen/config.hpp"
#include "degen/csv.hpp"
#include "degen/dirichlet.hpp"
#include "degen/halfcyl.hpp"
#include "degen/parabolic.hpp"
#include "degen/sde.hpp"

namespace degen {

inline constexpr const char* tool_version = "0.1.0";

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        fail(ErrorCode::InvalidArgument, "SHA-256 digest failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return out.str();
}

struct Artifact {
    std::string path;  // relative to the output directory
    std::string content;
};

struct RunResult {
    std::filesystem::path output_dir;
    std::vector<Artifact> artifacts;
    std::string config_hash;
    json manifest;
};

inline SimulationParams to_params(const McBlock& mc, const ExperimentConfig& c) {
    SimulationParams p;
    p.dt = mc.dt;
    p.n_paths = mc.n_paths;
    p.max_time = mc.max_time;
    p.seed = c.seed;
    p.threads = c.threads;
    p.bridge_correction = mc.bridge_correction;
    if (mc.outer_wall) {
        p.wall_policy = WallPolicy::Both;
        p.outer_wall = *mc.outer_wall;
    }
    return p;
}

inline std::filesystem::path resolve_output_dir(const ExperimentConfig& c) {
    if (const char* root = std::getenv("DEGEN_OUTPUT_ROOT"); root && *root)
        return std::filesystem::path(root) / c.output_dir;
    return std::filesystem::path(c.output_dir);
}

/// Computes all artifacts in memory; no file-system effects.
inline std::vector<Artifact> compute_artifacts(const ExperimentConfig& c) {
    std::vector<Artifact> out;
    json summary;
    summary["name"] = c.name;
    summary["kind"] = to_string(c.kind);
    summary["model"] = c.model.name;
    switch (c.kind) {
        case ExperimentKind::Classify: {
            ClassificationReport r = classify(c.model, c.tolerance, c.n_y);
            summary["alpha_bar"] = r.alpha_bar;
            summary["beta_bar"] = r.beta_bar;
            summary["verdict"] = to_string(r.verdict);
            summary["neutral_tolerance"] = r.neutral_tolerance;
            summary["corrector_residual"] = r.corrector_residual;
            std::string csv = "y,density,corrector\n";
            for (int i = 0; i < r.measure.grid_size; ++i)
                csv += fmt_double(r.measure.spacing() * i) + "," + fmt_double(r.measure.density[static_cast<std::size_t>(i)]) +
                       "," + fmt_double(r.corrector[i]) + "\n";
            out.push_back({"measure.csv", csv});
            break;
        }
        case ExperimentKind::Halfcyl: {
            HalfCylinderSolution s = solve_limit(c.model, c.f, c.grid, c.truncation);
            summary["ubar"] = s.ubar;
            summary["top_oscillation"] = s.top_oscillation;
            summary["conditioned"] = !s.h.empty();
            if (s.truncation_estimate) summary["truncation_estimate"] = *s.truncation_estimate;
            std::string var = "j,zz,variation\n";
            for (std::size_t j = 0; j < s.variation.size(); ++j)
                var += std::to_string(j) + "," + fmt_double(s.zz[j]) + "," + fmt_double(s.variation[j]) + "\n";
            out.push_back({"variation.csv", var});
            std::string grid = "j,i,zz,y,u\n";
            for (int j = 0; j <= s.grid.n_z; ++j)
                for (int i = 0; i < s.grid.n_y; ++i)
                    grid += std::to_string(j) + "," + std::to_string(i) + "," + fmt_double(s.zz[static_cast<std::size_t>(j)]) +
                            "," + fmt_double(s.grid.dy() * i) + "," + fmt_double(s.at(i, j)) + "\n";
            out.push_back({"u_grid.csv", grid});
            break;
        }
        case ExperimentKind::DirichletConvergence: {
            ConvergenceOptions opt;
            opt.completion = c.completion;
            opt.domain = c.domain;
            opt.n_theta = c.n_theta;
            opt.layer_cells = c.layer_cells;
            opt.halfcyl = c.grid;
            if (c.mc) opt.mc = to_params(*c.mc, c);
            ConvergenceTable t = convergence_experiment(c.model, c.f, c.eps, radial_probes(c.probe_radii), opt);
            summary["ubar"] = t.ubar;
            summary["completion"] = t.completion;
            summary["monotone"] = t.monotone();
            summary["non_monotone_probes"] = t.non_monotone_probes;
            out.push_back({"convergence.csv", t.to_csv()});
            break;
        }
        case ExperimentKind::Attraction: {
            std::vector<ChartPoint> starts;
            for (double z : c.starts) starts.push_back({0.0, z});
            auto stats = attraction_stats(c.model, starts, c.horizon, to_params(*c.mc, c), c.near);
            std::string csv = "start_z,horizon,near,fraction,stderr,min_z,max_z,unstable\n";
            for (const auto& s : stats)
                csv += fmt_double(s.start_z) + "," + fmt_double(s.horizon) + "," + fmt_double(s.near_threshold) + "," +
                       fmt_double(s.fraction_near.mean) + "," + fmt_double(s.fraction_near.stderr_) + "," +
                       fmt_double(s.min_z) + "," + fmt_double(s.max_z) + "," + std::to_string(s.unstable) + "\n";
            out.push_back({"attraction.csv", csv});
            break;
        }
        case ExperimentKind::Martingale: {
            ClassificationReport cls = classify(c.model);
            MartingaleTrace tr = martingale_trace(c.model, cls, {0.0, c.start_zz}, to_params(*c.mc, c), c.band_lo,
                                                  c.band_hi, c.checkpoints);
            summary["initial_value"] = tr.initial_value;
            summary["stopped_fraction"] = tr.stopped_fraction;
            std::string csv = "t,mean,stderr,raw_mean,raw_stderr\n";
            for (std::size_t k = 0; k < tr.times.size(); ++k)
                csv += fmt_double(tr.times[k]) + "," + fmt_double(tr.values[k].mean) + "," +
                       fmt_double(tr.values[k].stderr_) + "," + fmt_double(tr.raw[k].mean) + "," +
                       fmt_double(tr.raw[k].stderr_) + "\n";
            out.push_back({"martingale.csv", csv});
            break;
        }
        case ExperimentKind::Timescale: {
            StoppedProcessSpec spec{c.model, c.g, c.f, c.completion, c.domain};
            TimescaleSweep sw = timescale_sweep(spec, c.eps, c.rules, c.start, to_params(*c.mc, c));
            summary["boundary_plateau"] = sw.boundary_plateau;
            out.push_back({"timescale.csv", sw.to_csv()});
            break;
        }
    }
    out.insert(out.begin(), {"summary.json", summary.dump(2) + "\n"});
    out.insert(out.begin(), {"config.json", c.to_json_text()});
    return out;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::InvalidArgument, "cannot write " + p.string());
    f << content;
    if (!f) fail(ErrorCode::InvalidArgument, "failed writing " + p.string());
}

inline RunResult run_experiment(const ExperimentConfig& c) {
    auto t0 = std::chrono::steady_clock::now();
    std::time_t started = std::time(nullptr);
    RunResult r;
    r.output_dir = resolve_output_dir(c);
    r.config_hash = sha256_hex(c.to_json_text());
    r.artifacts = compute_artifacts(c);
    std::filesystem::create_directories(r.output_dir);
    json files = json::array();
    for (const auto& a : r.artifacts) {
        write_file(r.output_dir / a.path, a.content);
        files.push_back({{"path", a.path}, {"bytes", a.content.size()}, {"sha256", sha256_hex(a.content)}});
    }
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started));
    r.manifest = {{"tool_version", tool_version},
                  {"config_hash", r.config_hash},
                  {"started_at", stamp},
                  {"wall_clock_seconds",
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                  {"files", files}};
    write_file(r.output_dir / "manifest.json", r.manifest.dump(2) + "\n");
    return r;
}

/// Machine-readable error record.
inline json error_record(const Error& e) {
    json j{{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
    if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) j["field"] = ce->field();
    return j;
}

}  // namespace degen
