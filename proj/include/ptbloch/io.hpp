#pragma once

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptbloch/common.hpp"
#include "ptbloch/divisor.hpp"
#include "ptbloch/dubrovin.hpp"
#include "ptbloch/perturbation.hpp"
#include "ptbloch/potential.hpp"
#include "ptbloch/spectrum.hpp"

namespace ptbloch::io {

using nlohmann::json;

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2)
        throw std::invalid_argument("expected complex as [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

/// Fixed-width float for CSV: locale-independent, round-trip exact.
inline std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline json to_json(const PotentialSpec& spec) {
    json coeffs = json::object();
    for (const auto& [l, c] : spec.coefficients())
        coeffs[std::to_string(l)] = c.real();
    return json{{"coefficients", coeffs}};
}

inline PotentialSpec potential_from_json(const json& j) {
    if (!j.contains("coefficients"))
        throw std::invalid_argument("potential: missing key 'coefficients'");
    std::map<int, double> coeffs;
    for (const auto& [key, value] : j.at("coefficients").items()) {
        std::size_t pos = 0;
        int l = 0;
        try {
            l = std::stoi(key, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("potential: bad coefficient index '" +
                                        key + "'");
        }
        if (pos != key.size())
            throw std::invalid_argument("potential: bad coefficient index '" +
                                        key + "'");
        if (!value.is_number())
            throw std::invalid_argument("potential: coefficient '" + key +
                                        "' must be a real number");
        coeffs[l] = value.get<double>();
    }
    return PotentialSpec(coeffs);
}

inline const char* verdict_name(ResonanceVerdict v) {
    switch (v) {
        case ResonanceVerdict::Gap: return "gap";
        case ResonanceVerdict::DoublePointAtFirstOrder:
            return "double-point-at-first-order";
        case ResonanceVerdict::TransversalBand: return "transversal-band";
    }
    return "unknown";
}

inline json to_json(const BranchPointSet& set) {
    json points = json::array();
    for (const auto& bp : set.points)
        points.push_back(
            {{"E", to_json(bp.E)},
             {"multiplicity", bp.multiplicity == Multiplicity::Simple
                                  ? "simple"
                                  : "double-within-tolerance"}});
    json failed = json::array();
    for (const cplx& s : set.failed_seeds) failed.push_back(to_json(s));
    return json{{"resonance_index", set.resonance_index},
                {"points", points},
                {"failed_seeds", failed}};
}

inline json to_json(const ResonanceReport& rep) {
    json j{{"n", rep.n},
           {"E0", rep.E0},
           {"product", rep.product},
           {"first_order_branch_points",
            json::array({to_json(rep.first_order_branch_points.first),
                         to_json(rep.first_order_branch_points.second)})},
           {"verdict", verdict_name(rep.verdict)},
           {"inconclusive", rep.inconclusive}};
    if (rep.numeric_branch_points)
        j["numeric_branch_points"] =
            json::array({to_json(rep.numeric_branch_points->first),
                         to_json(rep.numeric_branch_points->second)});
    else
        j["numeric_branch_points"] = nullptr;
    return j;
}

inline json to_json(const EllipsePrediction& pred, int parametrization_samples = 256) {
    json samples = json::array();
    for (int i = 0; i < parametrization_samples; ++i) {
        const double x = period / pred.n * i / parametrization_samples;
        samples.push_back(to_json(pred.parametrization(x)));
    }
    return json{{"n", pred.n},
                {"c_n", pred.c_n},
                {"c_minus_n", pred.c_minus_n},
                {"center", to_json(pred.center)},
                {"semi_axis_real", pred.semi_axis_real},
                {"semi_axis_imag", pred.semi_axis_imag},
                {"foci", json::array({to_json(pred.foci.first),
                                      to_json(pred.foci.second)})},
                {"degenerate_segment", pred.degenerate_segment},
                {"parametrization", samples}};
}

inline json to_json(const EllipseFit& fit) {
    return json{{"center", to_json(fit.center)},
                {"semi_major", fit.semi_major},
                {"semi_minor", fit.semi_minor},
                {"rotation", fit.rotation},
                {"foci", json::array({to_json(fit.foci.first),
                                      to_json(fit.foci.second)})},
                {"rms_residual", fit.rms_residual}};
}

inline json to_json(const DivisorEllipseReport& rep) {
    json table = json::array();
    for (const auto& row : rep.scaling_table)
        table.push_back({{"scale", row.scale},
                         {"focal_mismatch", row.focal_mismatch},
                         {"max_deviation", row.max_deviation},
                         {"rms_residual", row.rms_residual},
                         {"segment", row.segment}});
    json j{{"n", rep.n},
           {"unperturbed", rep.unperturbed},
           {"segment_case", rep.segment_case},
           {"focal_mismatch", rep.focal_mismatch},
           {"gamma0_imag_defect", rep.gamma0_imag_defect},
           {"scaling_table", table},
           {"deviation_slope", rep.deviation_slope},
           {"branch_points", to_json(rep.branch_points)}};
    if (rep.segment_case)
        j["segment_endpoints"] =
            json::array({to_json(rep.segment_endpoints.first),
                         to_json(rep.segment_endpoints.second)});
    if (!rep.segment_case && !rep.unperturbed) j["fit"] = to_json(rep.fit);
    return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
}

/// Locus CSV: columns re(E), im(E), re(Delta), theta; arcs separated by a
/// blank line (gnuplot block convention).
inline std::string locus_csv(const SpectralLocus& locus) {
    std::string out = "re_E,im_E,re_delta,theta\n";
    bool first = true;
    for (const auto& arc : locus.arcs) {
        if (!first) out += "\n";
        first = false;
        for (const auto& s : arc.samples) {
            out += csv_number(s.E.real()) + "," + csv_number(s.E.imag()) + "," +
                   csv_number(2.0 * std::cos(s.theta)) + "," +
                   csv_number(s.theta) + "\n";
        }
    }
    return out;
}

inline std::string divisor_csv(const DivisorTrajectory& traj) {
    std::string out = "x,re_gamma,im_gamma\n";
    for (const auto& s : traj.samples)
        out += csv_number(s.x) + "," + csv_number(s.gamma.real()) + "," +
               csv_number(s.gamma.imag()) + "\n";
    return out;
}

inline std::string flow_csv(const FlowPath& path) {
    std::string out = "x";
    const std::size_t g = path.samples.empty() ? 0 : path.samples[0].state.size();
    for (std::size_t k = 1; k <= g; ++k) {
        const std::string i = std::to_string(k);
        out += ",re_gamma_" + i + ",im_gamma_" + i + ",re_w_" + i + ",im_w_" + i;
    }
    out += "\n";
    for (const auto& s : path.samples) {
        out += csv_number(s.x);
        for (const auto& p : s.state)
            out += "," + csv_number(p.gamma.real()) + "," +
                   csv_number(p.gamma.imag()) + "," + csv_number(p.w.real()) +
                   "," + csv_number(p.w.imag());
        out += "\n";
    }
    return out;
}

} // namespace ptbloch::io
