#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "ptbloch/common.hpp"
#include "ptbloch/io.hpp"
#include "ptbloch/potential.hpp"

namespace ptbloch {

/// Invalid experiment configuration; the CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct DubrovinConfig {
    std::vector<cplx> branch_points;
    std::vector<cplx> initial_gamma;
    std::vector<int> sheets;        // +-1 per point; w = sheet * principal sqrt(R)
    std::vector<cplx> initial_w;    // explicit alternative to `sheets`
    double x_begin = 0.0;
    double x_end = 10.0;
    int samples = 256;
    double tol = 1e-10;
};

/// Everything a CLI run needs; parsed from JSON, echoed into outputs so that
/// a result file pins down the run that produced it.
struct ExperimentConfig {
    PotentialSpec potential;
    Window window{-1.0, 5.0, -1.0, 1.0};
    std::vector<int> resonances;
    int grid_re = 201;
    int grid_im = 1;
    double integrator_tol = 1e-10;
    double newton_tol = 1e-11;
    double trace_tol = 1e-9;
    std::string output_dir = ".";
    std::vector<double> epsilon_scalings{1.0, 0.5, 0.25};
    int divisor_samples = 512;
    int parametrization_samples = 256;
    std::vector<cplx> locus_starts;
    double first_order_warn_tol = 0.02;
    std::optional<DubrovinConfig> dubrovin;
    unsigned jobs = 0;

    nlohmann::json raw; // the parsed input, echoed verbatim into outputs
};

namespace detail {

inline double positive_number(const nlohmann::json& j, const std::string& key,
                              double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number())
        throw ConfigError("config: '" + key + "' must be a number");
    const double v = j.at(key).get<double>();
    if (!(v > 0.0)) throw ConfigError("config: '" + key + "' must be positive");
    return v;
}

inline std::vector<cplx> complex_list(const nlohmann::json& j,
                                      const std::string& key) {
    std::vector<cplx> out;
    for (const auto& item : j.at(key)) out.push_back(io::complex_from_json(item));
    return out;
}

} // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.raw = j;

    if (!j.contains("potential"))
        throw ConfigError("config: missing key 'potential'");
    try {
        cfg.potential = io::potential_from_json(j.at("potential"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    if (j.contains("window")) {
        const auto& w = j.at("window");
        for (const char* key : {"re_min", "re_max", "im_min", "im_max"})
            if (!w.contains(key) || !w.at(key).is_number())
                throw ConfigError(std::string("config: window needs number '") +
                                  key + "'");
        cfg.window = Window{w.at("re_min").get<double>(), w.at("re_max").get<double>(),
                            w.at("im_min").get<double>(), w.at("im_max").get<double>()};
        if (cfg.window.empty()) throw ConfigError("config: window is empty");
    }

    if (j.contains("resonances")) {
        for (const auto& item : j.at("resonances")) {
            if (!item.is_number_integer() || item.get<int>() < 1)
                throw ConfigError("config: 'resonances' must be integers >= 1");
            cfg.resonances.push_back(item.get<int>());
        }
    }

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        cfg.grid_re = static_cast<int>(detail::positive_number(g, "re_points", cfg.grid_re));
        cfg.grid_im = static_cast<int>(detail::positive_number(g, "im_points", cfg.grid_im));
    }

    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        cfg.integrator_tol = detail::positive_number(t, "integrator", cfg.integrator_tol);
        cfg.newton_tol = detail::positive_number(t, "newton", cfg.newton_tol);
        cfg.trace_tol = detail::positive_number(t, "trace", cfg.trace_tol);
    }

    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();

    if (j.contains("epsilon_scalings")) {
        cfg.epsilon_scalings.clear();
        for (const auto& item : j.at("epsilon_scalings")) {
            const double s = item.get<double>();
            if (!(s > 0.0))
                throw ConfigError("config: 'epsilon_scalings' must be positive");
            cfg.epsilon_scalings.push_back(s);
        }
        if (cfg.epsilon_scalings.empty())
            throw ConfigError("config: 'epsilon_scalings' must be nonempty");
    }

    cfg.divisor_samples =
        static_cast<int>(detail::positive_number(j, "divisor_samples", cfg.divisor_samples));
    cfg.parametrization_samples = static_cast<int>(
        detail::positive_number(j, "parametrization_samples", cfg.parametrization_samples));
    if (j.contains("first_order_warn_tol"))
        cfg.first_order_warn_tol =
            detail::positive_number(j, "first_order_warn_tol", cfg.first_order_warn_tol);

    if (j.contains("locus_starts")) cfg.locus_starts = detail::complex_list(j, "locus_starts");
    if (j.contains("jobs")) {
        if (!j.at("jobs").is_number_integer() || j.at("jobs").get<int>() < 0)
            throw ConfigError("config: 'jobs' must be a nonnegative integer");
        cfg.jobs = j.at("jobs").get<unsigned>();
    }

    if (j.contains("dubrovin")) {
        const auto& d = j.at("dubrovin");
        DubrovinConfig dc;
        if (!d.contains("branch_points"))
            throw ConfigError("config: dubrovin needs 'branch_points'");
        dc.branch_points = detail::complex_list(d, "branch_points");
        if (!d.contains("initial_gamma"))
            throw ConfigError("config: dubrovin needs 'initial_gamma'");
        dc.initial_gamma = detail::complex_list(d, "initial_gamma");
        if (d.contains("initial_w")) dc.initial_w = detail::complex_list(d, "initial_w");
        if (d.contains("sheets"))
            for (const auto& s : d.at("sheets")) {
                const int v = s.get<int>();
                if (v != 1 && v != -1)
                    throw ConfigError("config: dubrovin 'sheets' entries must be +-1");
                dc.sheets.push_back(v);
            }
        if (d.contains("x_span")) {
            const auto& span = d.at("x_span");
            if (!span.is_array() || span.size() != 2)
                throw ConfigError("config: dubrovin 'x_span' must be [begin, end]");
            dc.x_begin = span[0].get<double>();
            dc.x_end = span[1].get<double>();
        }
        dc.samples = static_cast<int>(detail::positive_number(d, "samples", dc.samples));
        dc.tol = detail::positive_number(d, "tol", dc.tol);
        cfg.dubrovin = dc;
    }

    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    return parse_config(j);
}

} // namespace ptbloch
