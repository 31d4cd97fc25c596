#pragma once

#include <vector>

#include "lres/freeres.hpp"
#include "lres/model.hpp"
#include "lres/perturbation.hpp"
#include "lres/resonances.hpp"

namespace lres {

// Pi_q = |w><w| (x) pi_q, or Pi_{q,p} = |w><w| (x) pi_q + |w~><w~| (x) pi_p with w~(n) = (-1)^n w(n).
Mat build_projector(const ChannelSpectralData& s, const ThresholdEntry& entry, const WeightScheme& w);

struct EffectiveMatrix {
    Mat matrix;
    bool degenerate = false;
    int channel = 0;
    int partner = -1;
    int nu = 0;
};

// Matrix of E_q (or E_{q,p}) in the basis w (x) Q_q (and w~ (x) Q_p), Q orthonormal bases of Ran pi.
EffectiveMatrix build_effective_matrix(const ChannelSpectralData& s, const ThresholdEntry& entry,
                                       const PotentialSpec& p, const WeightScheme& w);

struct EigenCluster {
    Complex value;
    int multiplicity;
};

inline constexpr double kAlphaClusterTol = 1e-7;

std::vector<EigenCluster> cluster_eigenvalues(const Mat& e, double rel_tol = kAlphaClusterTol);

struct ClusterPrediction {
    int threshold_id = 0;
    bool degenerate = false;
    Complex omega;
    double C = 4.0;
    std::vector<EigenCluster> eigen;
    std::vector<Complex> centers;
    std::vector<double> radii;

    int total() const;
};

ClusterPrediction predict_clusters(const EffectiveMatrix& e, int threshold_id, Complex omega, double C = 4.0);

struct ClusterCheck {
    int id = 0;
    Complex center;
    double radius = 0.0;
    int expected = 0;
    int found = 0;
    double max_distance = 0.0;
    bool contained = true;
};

struct ClusterReport {
    std::vector<ClusterCheck> clusters;
    int total_found = 0;
    int total_expected = 0;
    int outside = 0;
    bool exact_required = false;
    bool pass = true;
};

// Assigns cluster ids to the records (nearest center) and checks containment and counts.
ClusterReport verify_clusters(std::vector<ResonanceRecord>& records, const ClusterPrediction& pred,
                              bool selfadjoint);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace lres
