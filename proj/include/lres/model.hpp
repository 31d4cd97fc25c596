#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lres/types.hpp"

namespace lres {

struct ChannelMatrix {
    Mat entries;
    std::optional<int> rank_hint;

    int dim() const { return static_cast<int>(entries.rows()); }
};

struct ChannelSpectralData {
    std::vector<Complex> eigenvalues;
    std::vector<Mat> projections;
    std::vector<int> multiplicities;
    bool diagonalizable = true;
    double condition = 1.0;
    // Index of the zero group playing the role of lambda_0 in case B, or -1.
    int zero_channel = -1;
    Case kase = Case::A;

    int dim() const { return projections.empty() ? 0 : static_cast<int>(projections.front().rows()); }
    int size() const { return static_cast<int>(eigenvalues.size()); }
};

// Eigenvalue grouping tolerance (relative to max(1, ||M||)).
inline constexpr double kEigenClusterTol = 1e-9;
inline constexpr double kMaxEigenvectorCondition = 1e10;

ChannelSpectralData diagonalize_channel(const ChannelMatrix& m, Case kase = Case::A);

// Largest entrywise deviation from idempotence, mutual orthogonality and completeness.
double projection_defect(const ChannelSpectralData& s);

enum class Side { Left, Right };

struct ThresholdEntry {
    int id = 0;
    Complex value;
    Side side = Side::Left;
    int channel = 0;
    std::optional<int> degenerate_partner;
    Case kase = Case::A;

    bool degenerate() const { return degenerate_partner.has_value(); }
};

struct ThresholdCatalog {
    std::vector<ThresholdEntry> entries;

    const ThresholdEntry& at(int id) const;
    // Left entries are preferred when a value is both a left and a right edge.
    const ThresholdEntry& find(Complex value, std::optional<Side> side = std::nullopt) const;
};

inline constexpr double kThresholdEqualityTol = 1e-12;

ThresholdCatalog classify_thresholds(const ChannelSpectralData& s, Case kase);

struct PresetParams {
    int N = 2;
    int m = 4;
    int J = 0;
    double g = 0.0;
    double kappa = 1.0;
    double gamma = 0.0;
};

ChannelMatrix preset(const std::string& name, const PresetParams& params);

// Closed-form spectra of the presets, used for consistency checks.
std::vector<Complex> preset_closed_form(const std::string& name, const PresetParams& params);

// Reflection by J = diag((-1)^n): J (Delta (x) I + I (x) M + w V) J = 4 - (Delta (x) I + I (x) (-M) + w (-J V J)).
// A right threshold lambda_p + 4 of the original problem becomes the left threshold -lambda_p.
struct ReflectedData {
    ChannelSpectralData spectral;
    // Sign attached to the potential kernel V'(n,m) = potential_sign(n,m) * V(n,m).
    static double potential_sign(int n, int m) { return ((n + m) % 2 == 0) ? -1.0 : 1.0; }
    static Complex energy_back(Complex z_reflected) { return 4.0 - z_reflected; }
};

ReflectedData reflect_model(const ChannelSpectralData& s);
Complex reflect_threshold(Complex tau);

}  // namespace lres
