#pragma once

#include <optional>
#include <vector>

#include "lres/charval.hpp"
#include "lres/freeres.hpp"
#include "lres/model.hpp"
#include "lres/perturbation.hpp"

namespace lres {

struct ResonanceRecord {
    Complex omega;
    Complex k;
    Complex z;
    int mult_index = 0;
    int mult_residue = 0;
    bool first_sheet = false;
    std::optional<int> cluster_id;
    int threshold_id = 0;
    // Contour used for both multiplicity computations.
    double contour_radius = 0.0;
    Complex index_raw = 0.0;
};

struct ResonanceSearch {
    double r_inner = 0.0;
    double r_outer = 0.0;
    SearchOptions search;
    int probe_box = 4;
    bool residue = true;
};

// Birman-Schwinger family of a single threshold, compressed through V_rho = A B^*:
// det(I + omega V_rho R(k)) = det(I_r + omega B^* R(k)|_S A).
class ResonanceProblem {
public:
    ResonanceProblem(const ChannelSpectralData& s, const ThresholdEntry& entry, const PotentialSpec& p,
                     const WeightScheme& w, ResolventOptions opts = {});

    const ContinuedResolvent& resolvent() const { return resolvent_; }
    const SupportOperator& vrho() const { return vrho_; }
    int rank() const { return static_cast<int>(a_.cols()); }

    MatrixFamily family(Complex omega) const;
    void reduced(Complex omega, Complex k, Mat& f, Mat* df) const;

    // R_omega(k) = R(k) (I + omega V_rho R(k))^{-1} on the given sites, via the Woodbury identity.
    Mat perturbed_resolvent(Complex omega, Complex k, const std::vector<int>& sites) const;
    std::vector<int> probe_sites(int half_width) const;

    std::vector<ResonanceRecord> find(Complex omega, const ResonanceSearch& opts, SearchResult* raw = nullptr) const;

private:
    ContinuedResolvent resolvent_;
    SupportOperator vrho_;
    Mat a_;
    Mat bh_;
    int max_distance_ = 0;
    // coeff_[j][d] = B^* (D_d (x) pi_j) A with D_d the weighted distance-d pattern on the support.
    std::vector<std::vector<Mat>> coeff_;
};

Mat perturbed_resolvent(const ContinuedResolvent& r, const SupportOperator& vrho, Complex omega, Complex k);

}  // namespace lres
