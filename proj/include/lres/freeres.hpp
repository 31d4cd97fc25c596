#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "lres/model.hpp"
#include "lres/types.hpp"

namespace lres {

// W_{-rho}(n) = e^{-rho|n|/2} / ||e^{-rho|.|/2}||, W_rho = 1 / W_{-rho}; the norm is taken over all of Z.
class WeightScheme {
public:
    explicit WeightScheme(double rho, int box = 0);

    double rho() const { return rho_; }
    int box() const { return box_; }
    int sites() const { return 2 * box_ + 1; }
    double norm() const { return norm_; }
    double minus(int n) const;
    double plus(int n) const;
    RealVec minus_vector() const;

    // Smallest L with e^{-rho L / 2} < 1e-10.
    static int default_box(double rho);

private:
    double rho_;
    int box_;
    double norm_;
};

inline constexpr double kSpectrumGuard = 1e-14;

double distance_to_band(Complex z);

// Unique theta with 2 - 2 cos(theta) = z, Im(theta) < 0, Re(theta) in (-pi, pi].
Complex theta(Complex z);

// Kernel of (Delta - z)^{-1} on l^2(Z).
Complex free_kernel(Complex z, int n, int m);

enum class Branch { Zero, Four, Interior, Exterior };

Branch classify_branch(Complex z0);

// Largest |k| for which the continued branch around z0 stays analytic (infinite for Zero/Four within |k| < 2).
double branch_radius(Complex z0);

// Analytic continuation of theta(z0 + k^2) from the first quadrant of k.
Complex theta_continued(Complex z0, Complex k, double eps0 = 0.3);
Complex theta_continued_dk(Complex z0, Complex k, double eps0 = 0.3);

struct ChannelBranch {
    Complex shift;
    Branch branch;
    bool singular;
};

struct ResolventOptions {
    std::optional<double> eps0;
    // Negative control only: evaluates the threshold channel on the wrong side of its cut.
    bool flip_branch = false;
};

// Weighted free resolvent W_{-rho} (H_0 - tau - k^2)^{-1} W_{-rho} continued in k around the threshold tau.
class ContinuedResolvent {
public:
    ContinuedResolvent(const ChannelSpectralData& s, const ThresholdEntry& entry, const WeightScheme& w,
                       ResolventOptions opts = {});

    Complex threshold() const { return tau_; }
    const ThresholdEntry& entry() const { return entry_; }
    double eps0() const { return eps0_; }
    const std::vector<ChannelBranch>& branches() const { return branches_; }
    const ChannelSpectralData& spectral() const { return spectral_; }
    const WeightScheme& weights() const { return weights_; }
    int dim() const { return spectral_.dim(); }

    Complex z_of_k(Complex k) const { return tau_ + k * k; }
    bool physical(Complex k) const;

    // Unweighted kernel of channel j at lattice distance d and its k-derivative.
    Complex kernel(int j, Complex k, int d) const;
    Complex kernel_dk(int j, Complex k, int d) const;

    // Matrices indexed by (site, channel), site-major.
    Mat evaluate(Complex k) const;
    Mat derivative(Complex k) const;
    Mat block(Complex k, const std::vector<int>& row_sites, const std::vector<int>& col_sites,
              bool derivative = false) const;

    Mat pole_residue() const;
    Mat pole_residue_block(const std::vector<int>& row_sites, const std::vector<int>& col_sites) const;

    std::vector<int> box_sites() const;

private:
    // Kernel of channel j at distance d (or its k-derivative).
    Complex channel_kernel(int j, Complex k, int d, bool derivative) const;
    void channel_kernels(int j, Complex k, int max_d, bool derivative, std::vector<Complex>& out) const;
    void check_k(Complex k) const;

    ChannelSpectralData spectral_;
    ThresholdEntry entry_;
    WeightScheme weights_;
    ResolventOptions opts_;
    Complex tau_;
    int main_channel_;
    double eps0_;
    std::vector<ChannelBranch> branches_;
};

struct SingularSplit {
    Mat residue;
    std::function<Mat(Complex)> holomorphic;
};

SingularSplit singular_split(const ContinuedResolvent& r);

}  // namespace lres
