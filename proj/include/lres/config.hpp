#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lres/model.hpp"
#include "lres/perturbation.hpp"

namespace lres {

struct OmegaSpec {
    double modulus = 0.0;
    double arg = 0.0;

    Complex value() const { return std::polar(modulus, arg); }
};

struct RunConfig {
    Case kase = Case::A;
    std::string preset;
    PresetParams preset_params;
    std::optional<Mat> matrix;

    nlohmann::json potential_json;
    double rho = 1.0;
    int box = 0;

    std::optional<int> threshold_id;
    std::optional<Complex> threshold_value;
    std::optional<Side> threshold_side;

    std::vector<OmegaSpec> omegas;
    std::optional<double> eps0;

    // "omega": search |k| < max(eps0, radius_factor * max|center| / |omega|) * |omega|; "absolute": |k| < radius.
    std::string search_scale = "omega";
    std::optional<double> search_radius;
    double radius_factor = 1.5;
    double puncture = 1e-4;
    double tol = 1e-10;
    std::uint64_t seed = 20240611;
    int probe_box = 4;

    double cluster_C = 4.0;
    double sector_theta = 0.3;
    double eps_floor = 0.125;

    int crosscheck_box = 60;
    double crosscheck_tol = 1e-6;
    bool debug_flip_branch = false;

    std::string csv_path = "resonances.csv";
    std::string report_path = "report.json";
    std::string plot_dir;

    nlohmann::json source;
};

Mat parse_matrix(const nlohmann::json& j, int dim);
Complex parse_complex(const nlohmann::json& j);

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

ChannelMatrix build_channel_matrix(const RunConfig& c);
PotentialSpec build_potential(const RunConfig& c, int dim);

}  // namespace lres
