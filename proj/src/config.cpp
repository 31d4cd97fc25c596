#include "lres/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lres/errors.hpp"

namespace lres {

using nlohmann::json;

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback)
{
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return j.at(key).get<T>();
}

double positive(const json& j, const char* key, double fallback)
{
    const double v = get_or<double>(j, key, fallback);
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("'") + key + "' must be positive");
    return v;
}

}  // namespace

Complex parse_complex(const json& j)
{
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw ConfigError("complex numbers are written as [re, im] or a plain real number");
}

Mat parse_matrix(const json& j, int dim)
{
    if (j.is_string()) {
        if (j.get<std::string>() == "identity") return Mat::Identity(dim, dim);
        if (j.get<std::string>() == "zero") return Mat::Zero(dim, dim);
        throw ConfigError("unknown matrix shortcut '" + j.get<std::string>() + "'");
    }
    if (j.is_array()) {
        const int rows = static_cast<int>(j.size());
        if (rows == 0) throw ConfigError("empty matrix");
        const int cols = static_cast<int>(j[0].size());
        Mat m(rows, cols);
        for (int r = 0; r < rows; ++r) {
            if (static_cast<int>(j[r].size()) != cols) throw ConfigError("ragged matrix rows");
            for (int c = 0; c < cols; ++c) m(r, c) = parse_complex(j[r][c]);
        }
        if (dim > 0 && (rows != dim || cols != dim)) throw ConfigError("matrix does not match the channel dimension");
        return m;
    }
    if (!j.is_object()) throw ConfigError("matrix must be an array of rows, a shortcut string or an object");
    if (dim <= 0) throw ConfigError("matrix shortcuts need a known dimension");
    const Complex scale = j.contains("scale") ? parse_complex(j.at("scale")) : Complex(1.0);
    Mat m = Mat::Zero(dim, dim);
    if (j.contains("diagonal")) {
        const auto& d = j.at("diagonal");
        if (static_cast<int>(d.size()) > dim) throw ConfigError("diagonal longer than the dimension");
        for (size_t i = 0; i < d.size(); ++i) m(i, i) = parse_complex(d[i]);
    } else if (j.contains("diagonal_power")) {
        const double p = j.at("diagonal_power").get<double>();
        for (int i = 0; i < dim; ++i) m(i, i) = std::pow(i + 1.0, -p);
    } else if (j.contains("unit")) {
        const auto& u = j.at("unit");
        const int r = u.at(0).get<int>();
        const int c = u.at(1).get<int>();
        if (r < 0 || c < 0 || r >= dim || c >= dim) throw ConfigError("unit index out of range");
        m(r, c) = 1.0;
    } else if (j.contains("identity_plus_ones")) {
        const double c = j.at("identity_plus_ones").get<double>();
        m = Mat::Identity(dim, dim) + Mat::Constant(dim, dim, c / dim);
    } else if (j.contains("rows")) {
        m = parse_matrix(j.at("rows"), dim);
    } else {
        throw ConfigError("unrecognised matrix object");
    }
    return scale * m;
}

RunConfig parse_config(const json& j)
{
    RunConfig c;
    c.source = j;
    const std::string kase = get_or<std::string>(j, "case", "A");
    if (kase == "A")
        c.kase = Case::A;
    else if (kase == "B")
        c.kase = Case::B;
    else
        throw ConfigError("case must be \"A\" or \"B\"");

    if (!j.contains("model")) throw ConfigError("missing 'model'");
    const auto& m = j.at("model");
    if (m.contains("preset")) {
        c.preset = m.at("preset").get<std::string>();
        c.preset_params.N = get_or<int>(m, "N", 2);
        c.preset_params.m = get_or<int>(m, "m", 4);
        c.preset_params.J = get_or<int>(m, "J", 0);
        c.preset_params.g = get_or<double>(m, "g", 0.0);
        c.preset_params.kappa = get_or<double>(m, "kappa", 1.0);
        c.preset_params.gamma = get_or<double>(m, "gamma", 0.0);
    } else if (m.contains("matrix")) {
        c.matrix = parse_matrix(m.at("matrix"), get_or<int>(m, "dim", 0));
    } else {
        throw ConfigError("model needs 'preset' or 'matrix'");
    }

    c.potential_json = j.value("potential", json::object());
    c.rho = positive(c.potential_json, "rho", 1.0);
    c.box = get_or<int>(j, "box", 0);
    if (c.box < 0) throw ConfigError("box must be non-negative");

    if (j.contains("threshold")) {
        const auto& t = j.at("threshold");
        if (t.contains("id")) c.threshold_id = t.at("id").get<int>();
        if (t.contains("value")) c.threshold_value = parse_complex(t.at("value"));
        if (t.contains("side")) {
            const auto s = t.at("side").get<std::string>();
            if (s == "left")
                c.threshold_side = Side::Left;
            else if (s == "right")
                c.threshold_side = Side::Right;
            else
                throw ConfigError("threshold side must be left or right");
        }
    }

    if (j.contains("omega")) {
        for (const auto& o : j.at("omega")) {
            OmegaSpec w;
            w.modulus = o.at("modulus").get<double>();
            w.arg = get_or<double>(o, "arg", 0.0);
            if (!(w.modulus >= 0.0)) throw ConfigError("omega modulus must be non-negative");
            c.omegas.push_back(w);
        }
    }
    if (j.contains("omega_sweep")) {
        const auto& s = j.at("omega_sweep");
        const double from = positive(s, "from", 1.0);
        const double to = positive(s, "to", 1.0);
        const int n = get_or<int>(s, "points", 2);
        const double arg = get_or<double>(s, "arg", 0.0);
        if (n < 2) throw ConfigError("omega_sweep needs at least two points");
        for (int i = 0; i < n; ++i)
            c.omegas.push_back({from * std::pow(to / from, static_cast<double>(i) / (n - 1)), arg});
    }
    if (j.contains("eps0")) c.eps0 = positive(j, "eps0", 0.3);

    const json search = j.value("search", json::object());
    c.search_scale = get_or<std::string>(search, "scale", "omega");
    if (c.search_scale != "omega" && c.search_scale != "absolute")
        throw ConfigError("search.scale must be omega or absolute");
    if (search.contains("radius")) c.search_radius = positive(search, "radius", 0.1);
    c.radius_factor = positive(search, "radius_factor", 1.5);
    c.puncture = positive(search, "puncture", 1e-4);
    c.tol = positive(search, "tol", 1e-10);
    c.seed = get_or<std::uint64_t>(search, "seed", c.seed);
    c.probe_box = get_or<int>(search, "probe_box", 4);
    if (c.puncture >= 1.0) throw ConfigError("search.puncture must be below 1");

    const json clusters = j.value("clusters", json::object());
    c.cluster_C = positive(clusters, "C", 4.0);
    const json acc = j.value("accumulation", json::object());
    c.sector_theta = positive(acc, "theta", 0.3);
    c.eps_floor = positive(acc, "eps_floor", 0.125);
    const json cc = j.value("crosscheck", json::object());
    c.crosscheck_box = get_or<int>(cc, "box", 60);
    c.crosscheck_tol = positive(cc, "tol", 1e-6);
    c.debug_flip_branch = get_or<bool>(cc, "debug_flip_branch", false);

    const json out = j.value("output", json::object());
    c.csv_path = get_or<std::string>(out, "csv", c.csv_path);
    c.report_path = get_or<std::string>(out, "report", c.report_path);
    c.plot_dir = get_or<std::string>(out, "plot_dir", "");
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

ChannelMatrix build_channel_matrix(const RunConfig& c)
{
    if (c.matrix) {
        ChannelMatrix m;
        m.entries = *c.matrix;
        return m;
    }
    return preset(c.preset, c.preset_params);
}

PotentialSpec build_potential(const RunConfig& c, int dim)
{
    const json& j = c.potential_json;
    PotentialSpec p;
    p.kind = c.kase;
    p.dim = dim;
    p.rho = c.rho;
    if (j.contains("decay_constant")) p.decay_constant = positive(j, "decay_constant", 1.0);
    p.sign = get_or<int>(j, "sign", 1);
    if (p.sign != 1 && p.sign != -1) throw ConfigError("potential sign must be 1 or -1");

    if (j.contains("terms")) {
        for (const auto& t : j.at("terms"))
            p.add(t.at("n").get<int>(), t.at("m").get<int>(), parse_matrix(t.at("block"), dim));
    }
    if (j.contains("profile")) {
        const auto& pr = j.at("profile");
        const int radius = get_or<int>(pr, "radius", 0);
        const double rate = get_or<double>(pr, "rate", c.rho);
        const Complex scale = pr.contains("scale") ? parse_complex(pr.at("scale")) : Complex(1.0);
        const Mat block = parse_matrix(pr.at("block"), dim);
        for (int n = -radius; n <= radius; ++n)
            for (int m = -radius; m <= radius; ++m)
                p.add(n, m, (scale * std::exp(-rate * (std::abs(n) + std::abs(m)))) * block);
    }
    if (c.kase == Case::B) {
        p.K = j.contains("K") ? parse_matrix(j.at("K"), dim) : Mat::Identity(dim, dim);
    }
    return p;
}

}  // namespace lres
