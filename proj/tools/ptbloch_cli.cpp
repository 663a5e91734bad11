// Command-line front end: runs configured experiments and writes CSV/JSON
// data plus SVG pictures of spectra near resonances, divisor trajectories
// with their fitted ellipses, and Dubrovin flows.
//
// Exit codes: 0 success, 1 numerical failure, 2 configuration error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "ptbloch/config.hpp"
#include "ptbloch/divisor.hpp"
#include "ptbloch/dubrovin.hpp"
#include "ptbloch/io.hpp"
#include "ptbloch/monodromy.hpp"
#include "ptbloch/parallel.hpp"
#include "ptbloch/perturbation.hpp"
#include "ptbloch/potential.hpp"
#include "ptbloch/spectrum.hpp"
#include "ptbloch/svg.hpp"

namespace fs = std::filesystem;
using namespace ptbloch;
using nlohmann::json;

namespace {

struct CliArgs {
    std::string config_path;
    std::string out_dir; // overrides config output_dir when set
    unsigned jobs = 0;
    double tol = 0.0; // overrides config integrator tol when > 0
};

std::string out_path(const ExperimentConfig& cfg, const CliArgs& args,
                     const std::string& name) {
    const std::string dir = args.out_dir.empty() ? cfg.output_dir : args.out_dir;
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

ExperimentConfig load(const CliArgs& args) {
    ExperimentConfig cfg = load_config(args.config_path);
    if (args.jobs > 0) cfg.jobs = args.jobs;
    if (args.tol > 0.0) cfg.integrator_tol = args.tol;
    return cfg;
}

json result_header(const ExperimentConfig& cfg) {
    return json{{"config", cfg.raw}};
}

int cmd_discriminant(const CliArgs& args) {
    const ExperimentConfig cfg = load(args);
    const int nr = std::max(cfg.grid_re, 1);
    const int ni = std::max(cfg.grid_im, 1);
    std::vector<cplx> grid;
    grid.reserve(static_cast<std::size_t>(nr) * ni);
    for (int j = 0; j < ni; ++j)
        for (int i = 0; i < nr; ++i) {
            const double re =
                nr == 1 ? cfg.window.re_min
                        : cfg.window.re_min +
                              (cfg.window.re_max - cfg.window.re_min) * i / (nr - 1);
            const double im =
                ni == 1 ? 0.5 * (cfg.window.im_min + cfg.window.im_max)
                        : cfg.window.im_min +
                              (cfg.window.im_max - cfg.window.im_min) * j / (ni - 1);
            grid.emplace_back(re, im);
        }

    std::vector<cplx> values(grid.size());
    parallel_for(grid.size(), cfg.jobs, [&](std::size_t i) {
        values[i] = discriminant(cfg.potential, grid[i], cfg.integrator_tol);
    });

    std::string csv = "re_E,im_E,re_delta,im_delta\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
        csv += io::csv_number(grid[i].real()) + "," +
               io::csv_number(grid[i].imag()) + "," +
               io::csv_number(values[i].real()) + "," +
               io::csv_number(values[i].imag()) + "\n";
    io::write_text_file(out_path(cfg, args, "discriminant.csv"), csv);
    return 0;
}

SpectrumOptions spectrum_options(const ExperimentConfig& cfg) {
    SpectrumOptions opt;
    opt.ode_tol = cfg.integrator_tol;
    opt.newton_tol = cfg.newton_tol;
    opt.jobs = cfg.jobs;
    return opt;
}

TraceOptions trace_options(const ExperimentConfig& cfg) {
    TraceOptions opt;
    opt.ode_tol = cfg.integrator_tol;
    opt.trace_tol = cfg.trace_tol;
    return opt;
}

/// Spectral picture near one resonance: traced locus plus branch-point
/// markers (numeric circles, first-order crosses).
void resonance_svg(const ExperimentConfig& cfg, const CliArgs& args,
                   const ResonanceReport& rep, const SpectralLocus& locus) {
    SvgPlot plot;
    char title[128];
    std::snprintf(title, sizeof(title),
                  "resonance n=%d, c_n c_-n = %.6g (%s)", rep.n, rep.product,
                  io::verdict_name(rep.verdict));
    plot.title(title);
    for (const auto& arc : locus.arcs) {
        std::vector<cplx> pts;
        pts.reserve(arc.samples.size());
        for (const auto& s : arc.samples) pts.push_back(s.E);
        plot.polyline(pts, "#1f77b4", 1.8);
    }
    plot.marker(rep.first_order_branch_points.first, "#d62728", "cross", 5.0);
    plot.marker(rep.first_order_branch_points.second, "#d62728", "cross", 5.0);
    if (rep.numeric_branch_points) {
        plot.marker(rep.numeric_branch_points->first, "#2ca02c", "circle", 5.0);
        plot.marker(rep.numeric_branch_points->second, "#2ca02c", "circle", 5.0);
    }
    io::write_text_file(
        out_path(cfg, args, "resonance_" + std::to_string(rep.n) + ".svg"),
        plot.render());
}

int cmd_resonance(const CliArgs& args) {
    const ExperimentConfig cfg = load(args);
    json reports = json::array();
    json warnings = json::array();
    bool numerical_failure = false;

    for (int n : cfg.resonances) {
        ResonanceReport rep;
        try {
            rep = classify_resonance(cfg.potential, n, spectrum_options(cfg));
        } catch (const Error& e) {
            warnings.push_back({{"n", n}, {"error", e.what()}});
            numerical_failure = true;
            continue;
        }

        json entry = io::to_json(rep);
        if (rep.numeric_branch_points) {
            const double mismatch = std::max(
                std::abs(rep.numeric_branch_points->first -
                         rep.first_order_branch_points.first),
                std::abs(rep.numeric_branch_points->second -
                         rep.first_order_branch_points.second));
            entry["first_order_mismatch"] = mismatch;
            entry["first_order_warning"] = mismatch > cfg.first_order_warn_tol;
        }

        // trace the locus through this resonance for the picture: a start on
        // the real axis below the branch points (inside the adjacent band),
        // plus the transversal arc when there is one
        SpectralLocus locus;
        double real_start = rep.E0 - 0.03;
        if (rep.numeric_branch_points)
            real_start = std::min(rep.numeric_branch_points->first.real(),
                                  rep.numeric_branch_points->second.real()) -
                         0.03;
        try {
            locus = trace_locus(cfg.potential, cplx(real_start, 0.0), cfg.window,
                                trace_options(cfg));
            if (rep.product < 0.0) {
                const SpectralLocus arc_part =
                    trace_locus(cfg.potential, rep.first_order_branch_points.first,
                                cfg.window, trace_options(cfg));
                for (const auto& arc : arc_part.arcs) locus.arcs.push_back(arc);
            }
        } catch (const Error& e) {
            warnings.push_back({{"n", n}, {"warning", e.what()}});
        } catch (const std::invalid_argument& e) {
            warnings.push_back({{"n", n}, {"warning", e.what()}});
        }
        resonance_svg(cfg, args, rep, locus);
        reports.push_back(entry);
    }

    json out = result_header(cfg);
    out["reports"] = reports;
    out["warnings"] = warnings;
    io::write_text_file(out_path(cfg, args, "resonance.json"), out.dump(2) + "\n");
    return numerical_failure ? 1 : 0;
}

void divisor_svg(const ExperimentConfig& cfg, const CliArgs& args,
                 const DivisorEllipseReport& rep) {
    SvgPlot plot;
    char title[128];
    std::snprintf(title, sizeof(title), "divisor trajectory n=%d", rep.n);
    plot.title(title);
    std::vector<cplx> pts;
    pts.reserve(rep.trajectory.samples.size());
    for (const auto& s : rep.trajectory.samples) pts.push_back(s.gamma);
    plot.polyline(pts, "#1f77b4", 1.8);
    if (!rep.segment_case && !rep.unperturbed) {
        std::vector<cplx> ell;
        const cplx axis = std::polar(1.0, rep.fit.rotation);
        for (int i = 0; i <= 256; ++i) {
            const double t = period * i / 256;
            ell.push_back(rep.fit.center +
                          axis * cplx(rep.fit.semi_major * std::cos(t),
                                      rep.fit.semi_minor * std::sin(t)));
        }
        plot.polyline(ell, "#ff7f0e", 1.0);
        plot.marker(rep.fit.foci.first, "#ff7f0e", "cross", 5.0);
        plot.marker(rep.fit.foci.second, "#ff7f0e", "cross", 5.0);
    }
    for (const auto& bp : rep.branch_points.points)
        plot.marker(bp.E, "#2ca02c", "plus", 5.0);
    io::write_text_file(
        out_path(cfg, args, "divisor_" + std::to_string(rep.n) + ".svg"),
        plot.render());
}

int cmd_divisor(const CliArgs& args) {
    const ExperimentConfig cfg = load(args);
    json reports = json::array();
    bool numerical_failure = false;

    VerifyOptions opt;
    opt.divisor.ode_tol = std::min(cfg.integrator_tol, 1e-11);
    opt.spectrum = spectrum_options(cfg);
    opt.samples_per_period = cfg.divisor_samples;
    opt.scalings = cfg.epsilon_scalings;

    for (int n : cfg.resonances) {
        try {
            const DivisorEllipseReport rep =
                verify_divisor_ellipse(cfg.potential, n, opt);
            json entry = io::to_json(rep);
            if (!rep.unperturbed)
                entry["prediction"] = io::to_json(
                    ellipse_prediction(cfg.potential, n), cfg.parametrization_samples);
            io::write_text_file(
                out_path(cfg, args, "divisor_" + std::to_string(n) + ".csv"),
                io::divisor_csv(rep.trajectory));
            divisor_svg(cfg, args, rep);
            reports.push_back(entry);
        } catch (const ContinuationBreak& e) {
            json entry{{"n", n},
                       {"error", e.what()},
                       {"last_good_x", e.last_good_x}};
            io::write_text_file(
                out_path(cfg, args, "divisor_" + std::to_string(n) + ".csv"),
                io::divisor_csv(e.partial));
            reports.push_back(entry);
            numerical_failure = true;
        } catch (const Error& e) {
            reports.push_back({{"n", n}, {"error", e.what()}});
            numerical_failure = true;
        }
    }

    json out = result_header(cfg);
    out["reports"] = reports;
    io::write_text_file(out_path(cfg, args, "divisor.json"), out.dump(2) + "\n");
    return numerical_failure ? 1 : 0;
}

int cmd_dubrovin(const CliArgs& args) {
    const ExperimentConfig cfg = load(args);
    if (!cfg.dubrovin) {
        std::cerr << "config: missing key 'dubrovin'\n";
        return 2;
    }
    const DubrovinConfig& dc = *cfg.dubrovin;

    HyperellipticData data(dc.branch_points);
    DivisorState state;
    for (std::size_t k = 0; k < dc.initial_gamma.size(); ++k) {
        DivisorPoint p;
        p.gamma = dc.initial_gamma[k];
        if (k < dc.initial_w.size()) {
            p.w = dc.initial_w[k];
        } else {
            const int sheet = k < dc.sheets.size() ? dc.sheets[k] : 1;
            p.w = double(sheet) * std::sqrt(data.R(p.gamma));
        }
        state.push_back(p);
    }

    std::vector<double> grid(dc.samples + 1);
    for (int i = 0; i <= dc.samples; ++i)
        grid[i] = dc.x_begin + (dc.x_end - dc.x_begin) * i / dc.samples;

    const FlowPath path = integrate_flow(data, state, {dc.x_begin, dc.x_end},
                                         dc.tol, {}, grid);
    io::write_text_file(out_path(cfg, args, "dubrovin.csv"), io::flow_csv(path));

    SvgPlot plot;
    plot.title("divisor flow");
    const std::size_t g = state.size();
    const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                            "#d62728", "#9467bd", "#8c564b"};
    for (std::size_t k = 0; k < g; ++k) {
        std::vector<cplx> pts;
        pts.reserve(path.samples.size());
        for (const auto& s : path.samples) pts.push_back(s.state[k].gamma);
        plot.polyline(pts, colors[k % 6], 1.8);
    }
    for (const cplx& b : data.branch_points()) plot.marker(b, "#2ca02c", "plus", 5.0);
    io::write_text_file(out_path(cfg, args, "dubrovin.svg"), plot.render());
    return 0;
}

int cmd_locus(const CliArgs& args) {
    const ExperimentConfig cfg = load(args);
    SpectralLocus all;
    bool numerical_failure = false;
    for (const cplx& start : cfg.locus_starts) {
        try {
            SpectralLocus one =
                trace_locus(cfg.potential, start, cfg.window, trace_options(cfg));
            for (auto& arc : one.arcs) all.arcs.push_back(std::move(arc));
        } catch (const Error& e) {
            std::cerr << "locus: " << e.what() << "\n";
            numerical_failure = true;
        } catch (const std::invalid_argument& e) {
            std::cerr << "locus: " << e.what() << "\n";
            numerical_failure = true;
        }
    }
    io::write_text_file(out_path(cfg, args, "locus.csv"), io::locus_csv(all));

    SvgPlot plot;
    plot.title("spectral locus");
    for (const auto& arc : all.arcs) {
        std::vector<cplx> pts;
        pts.reserve(arc.samples.size());
        for (const auto& s : arc.samples) pts.push_back(s.E);
        plot.polyline(pts, "#1f77b4", 1.8);
    }
    io::write_text_file(out_path(cfg, args, "locus.svg"), plot.render());
    return numerical_failure ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bloch spectra, branch points and divisor trajectories of "
                 "PT-symmetric periodic Schrodinger operators"};
    app.require_subcommand(1);

    CliArgs args;
    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config_path, "experiment config (JSON)")
            ->required();
        cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
        cmd->add_option("--jobs", args.jobs, "max worker threads");
        cmd->add_option("--tol", args.tol, "integrator tolerance override");
    };

    auto* disc = app.add_subcommand("discriminant", "Delta(E) over an E-grid (CSV)");
    auto* reso = app.add_subcommand("resonance",
                                    "classify resonances, trace spectra (JSON+SVG)");
    auto* divi = app.add_subcommand("divisor",
                                    "divisor trajectories and ellipse fits (JSON+SVG)");
    auto* dubr = app.add_subcommand("dubrovin", "divisor flow on a given curve (CSV+SVG)");
    auto* locu = app.add_subcommand("locus", "trace the spectral locus (CSV+SVG)");
    for (auto* cmd : {disc, reso, divi, dubr, locu}) add_common(cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (disc->parsed()) return cmd_discriminant(args);
        if (reso->parsed()) return cmd_resonance(args);
        if (divi->parsed()) return cmd_divisor(args);
        if (dubr->parsed()) return cmd_dubrovin(args);
        if (locu->parsed()) return cmd_locus(args);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
