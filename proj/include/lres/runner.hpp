#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <json.hpp>

#include "lres/accumulation.hpp"
#include "lres/clusters.hpp"
#include "lres/config.hpp"
#include "lres/resonances.hpp"

namespace lres {

// Threshold-local problem. Right thresholds are mapped to left thresholds of the reflected family.
struct PreparedThreshold {
    ChannelSpectralData spectral;
    ThresholdCatalog catalog;
    ThresholdEntry entry;
    ChannelSpectralData local_spectral;
    ThresholdEntry local_entry;
    PotentialSpec potential;
    PotentialSpec local_potential;
    bool reflected = false;

    Complex energy(Complex z_local) const { return reflected ? 4.0 - z_local : z_local; }
};

PreparedThreshold prepare_threshold(const RunConfig& c, bool default_to_zero = false);

struct RunOutput {
    int exit_code = 0;
    nlohmann::json report;
    std::vector<ResonanceRecord> records;
    bool has_records = false;
    std::map<std::string, std::string> plot_files;
};

RunOutput run_spectrum(const RunConfig& c);
RunOutput run_resonances(const RunConfig& c);
RunOutput run_clusters(const RunConfig& c);
RunOutput run_accumulate(const RunConfig& c);
RunOutput run_crosscheck(const RunConfig& c);
RunOutput run_command(const std::string& command, const RunConfig& c);

std::string records_csv(const std::vector<ResonanceRecord>& records);
void write_outputs(const RunOutput& out, const RunConfig& c, bool emit_plot_data);

// Worker count from LRES_WORKERS (default 1).
int worker_count();

// Box operators used by the cross-checks: Dirichlet truncation of Delta (x) I + I (x) M + omega V on [-L, L].
Eigen::SparseMatrix<Complex> box_hamiltonian(const ChannelSpectralData& s, const PotentialSpec& p, Complex omega,
                                             int L);

// W_{-rho} (H_0 - z)^{-1} W_{-rho} on sites [-P, P], from a large Dirichlet box.
Mat box_sandwiched_resolvent(const ChannelSpectralData& s, const WeightScheme& w, Complex z, int P, int L_big);

}  // namespace lres
