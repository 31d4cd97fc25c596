#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "lres/freeres.hpp"
#include "lres/types.hpp"

namespace lres {

// Site-pair sparse kernel. Case A stores V(n,m); case B stores U(n,m) with V = (1 (x) K^*) U (1 (x) K).
struct PotentialSpec {
    Case kind = Case::A;
    int dim = 0;
    double rho = 1.0;
    std::optional<double> decay_constant;
    std::map<std::pair<int, int>, Mat> terms;
    Mat K;
    int sign = 1;

    static constexpr double kDropBelow = 1e-14;

    void add(int n, int m, const Mat& block);
    std::vector<int> support() const;
    Mat kernel(int n, int m) const;
    bool empty() const { return terms.empty(); }
};

struct PairMargin {
    int n;
    int m;
    double norm;
    double bound;
};

struct DecayReport {
    bool ok = true;
    double constant = 0.0;
    bool constant_inferred = false;
    double worst_ratio = 0.0;
    std::vector<PairMargin> pairs;
};

DecayReport validate_decay(const PotentialSpec& p);

// Dense operator living on a finite set of sites (site-major, channel inner).
struct SupportOperator {
    std::vector<int> sites;
    int dim = 0;
    Mat matrix;

    Mat embed(int box) const;
};

// V_rho = W_rho V W_rho restricted to the support of V.
SupportOperator assemble_Vrho(const PotentialSpec& p, const WeightScheme& w);

// omega V_rho R(k) restricted to support rows and columns; the remaining rows of the full operator vanish,
// so det(I + P) and its characteristic values are carried by this block.
Mat assemble_P(const SupportOperator& vrho, Complex omega, const ContinuedResolvent& r, Complex k);
Mat assemble_P(const PotentialSpec& p, Complex omega, const ContinuedResolvent& r, Complex k);
Mat assemble_P_box(const SupportOperator& vrho, Complex omega, const ContinuedResolvent& r, Complex k);

// Case B factor Lt = |W_rho U W_rho|^{1/2} (1 (x) K) on the support, with V_rho = sign * Lt^* Lt.
struct CaseBFactor {
    std::vector<int> sites;
    int dim = 0;
    int sign = 1;
    Mat Lt;
};

CaseBFactor case_b_factor(const PotentialSpec& p, const WeightScheme& w);

// X = sign * omega * Lt R(k) Lt^*.
Mat assemble_X(const CaseBFactor& f, Complex omega, const ContinuedResolvent& r, Complex k);
Mat assemble_X(const PotentialSpec& p, Complex omega, const ContinuedResolvent& r, Complex k);

// J V J-type reflection of the kernel: V'(n,m) = -(-1)^{n+m} V(n,m).
PotentialSpec reflect_potential(const PotentialSpec& p);

}  // namespace lres
