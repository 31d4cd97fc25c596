#pragma once

#include <optional>
#include <vector>

#include "lres/freeres.hpp"
#include "lres/model.hpp"
#include "lres/perturbation.hpp"
#include "lres/resonances.hpp"

namespace lres {

// Eigenvalue counting n_[a,b](T) for a Hermitian matrix T.
class CountingFunction {
public:
    CountingFunction() = default;
    explicit CountingFunction(const Mat& hermitian);

    int count(double a, double b) const;
    const RealVec& eigenvalues() const { return ev_; }
    double max() const;
    // Smallest eigenvalue above rel_floor * max.
    double min_positive(double rel_floor = 1e-12) const;
    int rank(double rel_floor = 1e-12) const;

private:
    RealVec ev_;
};

struct QE0 {
    Mat Q0;
    Mat E0;
    Mat G;
    int sign = 1;
    int rank_Q0 = 0;
    int rank_E0 = 0;
    // Counting is done on sign * E0, which is nonnegative.
    CountingFunction counting;
    CountingFunction counting_Q0;
};

// Q0 = (1/2) G G^*, G = Lt (w (x) F) with F an orthonormal basis of Ran pi_0; E0 = Pi_0 V_rho Pi_0 on Ran Pi_0.
QE0 build_Q0_E0(const ChannelSpectralData& s, const PotentialSpec& p, const WeightScheme& w);

struct SectorReport {
    double max_signed_im = 0.0;
    double max_relative_re = 0.0;
    double theta = 0.3;
    int records = 0;
    bool pass = true;
};

SectorReport verify_sector(const std::vector<ResonanceRecord>& records, Complex omega, int sign, double theta = 0.3);

struct AnnulusCount {
    double eps = 0.0;
    int found = 0;
    int expected = 0;
    int deviation = 0;
};

struct CountingReport {
    std::vector<AnnulusCount> rows;
    bool monotone = true;
    bool pass = true;
    int saturation = 0;
};

// Geometric eps_j = max / 2^j, skipping values whose 2 eps_j is within 10% of an eigenvalue of sign * E0.
std::vector<double> epsilon_sequence(const CountingFunction& e0, double floor_factor = 0.125);

CountingReport verify_counting(const std::vector<ResonanceRecord>& records, const CountingFunction& e0,
                               const std::vector<double>& eps, Complex omega, double eps0);

enum class SheetExpectation { First, Second, Undetermined };

struct SheetTag {
    bool first_sheet = false;
    SheetExpectation expected = SheetExpectation::Undetermined;
    bool matches = true;
};

SheetTag classify_sheet(const ResonanceRecord& rec, Complex omega, int sign);

// Predicted direction of accumulation in the z-plane: 2 Arg(omega) - pi.
double accumulation_axis(Complex omega);

}  // namespace lres
