#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lres/errors.hpp"
#include "lres/runner.hpp"

using nlohmann::json;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> csv, report;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> plot_dir;
    std::optional<int> threshold_id, box;
    std::optional<double> eps0, tol, rho;
    std::vector<double> omega;  // modulus, arg pairs
};

void add_flags(CLI::App* sub, Overrides& o)
{
    sub->add_option("-c,--config", o.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--csv", o.csv, "records CSV path");
    sub->add_option("--report", o.report, "JSON report path");
    sub->add_option("--seed", o.seed, "seed for subdivision retries");
    sub->add_option("--emit-plot-data", o.plot_dir, "directory for per-figure CSVs");
    sub->add_option("--threshold-id", o.threshold_id, "threshold id from the spectrum catalog");
    sub->add_option("--box", o.box, "weight box half-width");
    sub->add_option("--eps0", o.eps0, "continuation radius override");
    sub->add_option("--tol", o.tol, "search tolerance");
    sub->add_option("--rho", o.rho, "weight exponent");
    sub->add_option("--omega", o.omega, "coupling as MODULUS ARG, repeatable")->expected(2)->allow_extra_args(false);
}

json with_overrides(json j, const Overrides& o)
{
    if (o.seed) j["search"]["seed"] = *o.seed;
    if (o.tol) j["search"]["tol"] = *o.tol;
    if (o.threshold_id) j["threshold"] = {{"id", *o.threshold_id}};
    if (o.box) j["box"] = *o.box;
    if (o.eps0) j["eps0"] = *o.eps0;
    if (o.rho) j["potential"]["rho"] = *o.rho;
    if (!o.omega.empty()) {
        json list = json::array();
        for (size_t i = 0; i + 1 < o.omega.size(); i += 2) list.push_back({{"modulus", o.omega[i]}, {"arg", o.omega[i + 1]}});
        j["omega"] = list;
        j.erase("omega_sweep");
    }
    if (o.csv) j["output"]["csv"] = *o.csv;
    if (o.report) j["output"]["report"] = *o.report;
    if (o.plot_dir) j["output"]["plot_dir"] = *o.plot_dir;
    return j;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Resonances of multichannel lattice operators near thresholds"};
    app.require_subcommand(1);
    Overrides o;
    for (const char* name : {"spectrum", "resonances", "clusters", "accumulate", "crosscheck"}) add_flags(app.add_subcommand(name), o);
    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        std::ifstream in(o.config);
        const json raw = json::parse(in);
        const lres::RunConfig c = lres::parse_config(with_overrides(raw, o));
        const lres::RunOutput out = lres::run_command(command, c);
        lres::write_outputs(out, c, o.plot_dir.has_value());
        const bool pass = out.report.value("pass", false);
        std::cout << command << ": " << (pass ? "pass" : "FAIL");
        if (out.has_records) std::cout << ", " << out.records.size() << " records";
        std::cout << "\n";
        return out.exit_code;
    } catch (const lres::NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const lres::NonDiagonalizable& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
