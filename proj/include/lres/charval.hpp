#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lres/types.hpp"

namespace lres {

// Analytic matrix family k -> F(k) together with F'(k).
struct MatrixFamily {
    int dim = 0;
    std::function<void(Complex k, Mat& f, Mat& df)> eval;
};

struct ContourSpec {
    Complex center = 0.0;
    double radius = 1.0;
    int nodes = 16;
};

struct IndexResult {
    int index = 0;
    Complex raw = 0.0;
    int nodes = 0;
};

inline constexpr double kIndexStepTol = 1e-8;
inline constexpr double kIntegerTol = 1e-6;
inline constexpr double kSingularGuard = 1e-10;

// Tr(F^{-1} F') at k; throws SingularOnContour when F is numerically singular.
Complex log_det_derivative(const MatrixFamily& f, Complex k);

// (1/2 pi i) Tr \oint F' F^{-1} dk on a positively oriented circle, trapezoidal with node doubling.
IndexResult index_on_contour(const MatrixFamily& f, const ContourSpec& c);

struct SearchRegion {
    Complex center = 0.0;
    double r_inner = 1e-6;
    double r_outer = 1.0;
};

struct SearchOptions {
    // Cells are refined until their diameter drops below tol * r_outer.
    double tol = 1e-10;
    std::uint64_t seed = 20240611;
    int max_retries = 5;
    double angle_offset = 0.3;
    int max_panels = 2048;
};

struct CharacteristicValue {
    Complex k;
    int multiplicity;
};

struct SearchResult {
    std::vector<CharacteristicValue> values;
    int total_index = 0;
    int cells = 0;
    int retries = 0;
    SearchRegion region;
};

SearchResult locate_characteristic_values(const MatrixFamily& f, const SearchRegion& region,
                                          const SearchOptions& opts = {});

struct ResidueInfo {
    RealVec singular_values;
    int nodes = 0;
    double cutoff = 0.0;
};

inline constexpr double kRankCutoff = 1e-8;

// rank of (1/2 pi i) \oint R(k) dk.
int residue_rank(const std::function<Mat(Complex)>& r, const ContourSpec& c, ResidueInfo* info = nullptr);

// Sort key used for every list of points in k.
bool k_order(Complex a, Complex b);

}  // namespace lres
