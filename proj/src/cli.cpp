#include "polyspec/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "polyspec/analytic.hpp"
#include "polyspec/estimation.hpp"
#include "polyspec/fitting.hpp"
#include "polyspec/io.hpp"
#include "polyspec/models.hpp"
#include "polyspec/svg.hpp"
#include "polyspec/trajectory.hpp"

namespace polyspec {

namespace fs = std::filesystem;

namespace {

struct ModelArgs {
    std::string preset;
    std::string model_file;
    std::vector<std::string> sets;
};

void add_model_options(CLI::App* cmd, ModelArgs& m) {
    cmd->add_option("--preset", m.preset, "Model preset: sqd, spin3 or doubledot");
    cmd->add_option("--model", m.model_file, "Model JSON file");
    cmd->add_option("--set", m.sets, "Preset parameter override key=value (repeatable)");
}

ParamOverrides parse_sets(const std::vector<std::string>& sets) {
    ParamOverrides out;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
        const std::string key = s.substr(0, eq);
        const std::string val = s.substr(eq + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(val, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != val.size() || val.empty()) throw ConfigError("--set " + key + ": '" + val + "' is not a number");
        out[key] = v;
    }
    return out;
}

LiouvillianSpec resolve_model(const ModelArgs& m) {
    if (!m.preset.empty() && !m.model_file.empty()) throw ConfigError("give either --preset or --model, not both");
    if (!m.preset.empty()) return model_from_preset(m.preset, parse_sets(m.sets));
    if (!m.model_file.empty()) {
        if (!m.sets.empty()) throw ConfigError("--set applies to presets only");
        return io::load_model(m.model_file);
    }
    throw ConfigError("no model given: use --preset NAME or --model FILE");
}

std::vector<int> parse_orders(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item != "2" && item != "3" && item != "4") {
            throw ConfigError("unsupported spectral order '" + item + "' (orders 2, 3, 4 are available)");
        }
        const int o = item[0] - '0';
        if (std::find(out.begin(), out.end(), o) == out.end()) out.push_back(o);
    }
    if (out.empty()) throw ConfigError("no spectral orders requested");
    return out;
}

fs::path ensure_dir(const std::string& dir) {
    if (dir.empty()) throw ConfigError("--out is required");
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw ConfigError("cannot create directory " + dir + ": " + ec.message());
    return p;
}

void write_spectra(const std::vector<SpectrumGrid>& grids, const fs::path& dir, std::ostream& out) {
    for (const auto& g : grids) {
        const fs::path p = dir / ("s" + std::to_string(g.order) + ".json");
        io::write_spectrum(g, p);
        out << "wrote " << p.string() << "\n";
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantum polyspectra of continuously measured systems"};
    app.require_subcommand(1, 1);

    // simulate
    ModelArgs sim_model;
    double minutes = 0.0, dt = 0.0;
    std::int64_t steps = 0;
    int stride = 10;
    std::uint64_t seed = 1;
    bool latent = false;
    std::string integrator = "kraus";
    std::string sim_out;
    auto* sim = app.add_subcommand("simulate", "Integrate the stochastic master equation to a detector trace");
    add_model_options(sim, sim_model);
    sim->add_option("--minutes", minutes, "Trace duration in minutes");
    sim->add_option("--steps", steps, "Number of integration steps (alternative to --minutes)");
    sim->add_option("--dt", dt, "Integration step in ms (default 0.01 / fastest rate)");
    sim->add_option("--stride", stride, "Integration steps averaged per output sample")->capture_default_str();
    sim->add_option("--seed", seed, "Random seed")->capture_default_str();
    sim->add_flag("--latent", latent, "Also record Tr[rho A]");
    sim->add_option("--integrator", integrator, "kraus or euler")->capture_default_str();
    sim->add_option("--out", sim_out, "Trace file (.bin); the sidecar is written next to it");

    // analytic
    ModelArgs an_model;
    std::string an_orders = "2,3,4", an_out;
    double fmax = 5.0;
    int points = 101, points2d = 61;
    auto* an = app.add_subcommand("analytic", "Exact polyspectra of a model");
    add_model_options(an, an_model);
    an->add_option("--orders", an_orders, "Comma-separated orders")->capture_default_str();
    an->add_option("--fmax", fmax, "Maximum frequency in kHz")->capture_default_str();
    an->add_option("--points", points, "Odd number of S2 grid points")->capture_default_str();
    an->add_option("--points2d", points2d, "Odd number of points per axis for S3/S4")->capture_default_str();
    an->add_option("--out", an_out, "Output directory");

    // estimate
    std::string trace_path, est_orders = "2,3,4", est_out;
    EstimatorConfig ecfg;
    auto* est = app.add_subcommand("estimate", "Estimate polyspectra from a trace");
    est->add_option("--trace", trace_path, "Trace file (.bin)");
    est->add_option("--orders", est_orders, "Comma-separated orders")->capture_default_str();
    est->add_option("--frame-len", ecfg.frame_length, "Frame length N in samples")->capture_default_str();
    est->add_option("--window-s", ecfg.window_s, "Window width as a fraction of the frame duration")->capture_default_str();
    est->add_option("--kmax", ecfg.max_index, "Largest frequency index of the 2-D grids (0: N/4 - 1)");
    est->add_option("--frame-stride", ecfg.stride, "Samples between frame starts (0: disjoint frames)");
    est->add_option("--out", est_out, "Output directory");

    // fit
    std::string fit_config, fit_out;
    auto* ft = app.add_subcommand("fit", "Fit model parameters to estimated spectra");
    ft->add_option("--config", fit_config, "Fit config JSON");
    ft->add_option("--out", fit_out, "FitResult JSON file");

    // plot
    std::vector<std::string> plot_inputs;
    std::string plot_out;
    auto* pl = app.add_subcommand("plot", "Render spectra as SVG");
    pl->add_option("--spectrum", plot_inputs, "Spectrum JSON file (repeatable)");
    pl->add_option("--out", plot_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (sim->parsed()) {
            SimConfig cfg;
            cfg.spec = resolve_model(sim_model);
            cfg.dt = dt > 0.0 ? dt : default_dt(cfg.spec);
            if (dt < 0.0) throw ConfigError("--dt must be positive");
            if (minutes > 0.0 && steps > 0) throw ConfigError("give either --minutes or --steps");
            if (minutes > 0.0) {
                cfg.n_steps = static_cast<std::int64_t>(std::llround(minutes * 60000.0 / cfg.dt));
            } else {
                cfg.n_steps = steps;
            }
            if (cfg.n_steps < 1) throw ConfigError("trace length missing: use --minutes or --steps");
            cfg.seed = seed;
            cfg.record_latent = latent;
            cfg.output_stride = stride;
            if (integrator == "kraus") cfg.integrator = Integrator::kraus;
            else if (integrator == "euler") cfg.integrator = Integrator::euler_maruyama;
            else throw ConfigError("unknown integrator '" + integrator + "'");
            if (sim_out.empty()) throw ConfigError("--out is required");
            const TimeTrace trace = simulate(cfg);
            const fs::path path(sim_out);
            if (path.has_parent_path()) fs::create_directories(path.parent_path());
            io::write_trace(trace, path);
            out << "wrote " << trace.samples.size() << " samples (dt " << trace.dt << " ms) to " << path.string() << "\n";
        } else if (an->parsed()) {
            const auto orders = parse_orders(an_orders);
            const LiouvillianSpec spec = resolve_model(an_model);
            const QuantumPolyspectra engine(spec);
            const fs::path dir = ensure_dir(an_out);
            std::vector<SpectrumGrid> grids;
            for (int o : orders) {
                if (o == 2) {
                    const auto w = symmetric_grid(fmax, points);
                    grids.push_back(s2_analytic(engine, w));
                } else {
                    const auto w = symmetric_grid(fmax, points2d);
                    grids.push_back(o == 3 ? s3_analytic(engine, w, w) : s4_analytic(engine, w, w));
                }
            }
            write_spectra(grids, dir, out);
        } else if (est->parsed()) {
            const auto orders = parse_orders(est_orders);
            if (trace_path.empty()) throw ConfigError("--trace is required");
            const TimeTrace trace = io::read_trace(trace_path);
            const fs::path dir = ensure_dir(est_out);
            std::vector<SpectrumGrid> grids;
            const bool need34 = std::any_of(orders.begin(), orders.end(), [](int o) { return o > 2; });
            if (need34) {
                const EstimatedSpectra s = estimate_all(trace, ecfg);
                for (int o : orders) grids.push_back(o == 2 ? s.s2 : o == 3 ? s.s3 : s.s4);
            } else {
                grids.push_back(estimate_s2(trace, ecfg));
            }
            write_spectra(grids, dir, out);
        } else if (ft->parsed()) {
            if (fit_config.empty()) throw ConfigError("--config is required");
            if (fit_out.empty()) throw ConfigError("--out is required");
            const fs::path cfg_path(fit_config);
            const FitProblem problem = io::fit_problem_from_json(io::read_json(cfg_path), cfg_path.parent_path());
            const FitResult result = problem.model == "spin3" ? fit_spin3(problem) : fit(problem);
            const fs::path path(fit_out);
            if (path.has_parent_path()) fs::create_directories(path.parent_path());
            io::write_text(path, io::fit_result_to_json(result).dump(2) + "\n");
            out << "wrote " << path.string() << (result.converged ? "" : " (not converged)") << "\n";
        } else if (pl->parsed()) {
            if (plot_inputs.empty()) throw ConfigError("--spectrum is required");
            const fs::path dir = ensure_dir(plot_out);
            for (const auto& in : plot_inputs) {
                const SpectrumGrid g = io::read_spectrum(in);
                const fs::path p = dir / (fs::path(in).stem().string() + ".svg");
                std::string title = "S" + std::to_string(g.order) + " (" + g.source + ")";
                io::write_text(p, svg_plot(g, title));
                out << "wrote " << p.string() << "\n";
            }
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace polyspec
