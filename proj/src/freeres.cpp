#include "lres/freeres.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "lres/errors.hpp"

namespace lres {

WeightScheme::WeightScheme(double rho, int box) : rho_(rho), box_(box)
{
    if (!(rho > 0.0) || !std::isfinite(rho)) throw BadParams("rho must be positive");
    if (box_ < 0) throw BadParams("box must be non-negative");
    if (box_ == 0) box_ = default_box(rho);
    norm_ = std::sqrt(1.0 / std::tanh(rho / 2.0));
}

double WeightScheme::minus(int n) const { return std::exp(-rho_ * std::abs(n) / 2.0) / norm_; }

double WeightScheme::plus(int n) const { return norm_ * std::exp(rho_ * std::abs(n) / 2.0); }

RealVec WeightScheme::minus_vector() const
{
    RealVec v(sites());
    for (int n = -box_; n <= box_; ++n) v(n + box_) = minus(n);
    return v;
}

int WeightScheme::default_box(double rho) { return static_cast<int>(std::ceil(2.0 * std::log(1e10) / rho)); }

double distance_to_band(Complex z)
{
    if (z.real() >= 0.0 && z.real() <= 4.0) return std::abs(z.imag());
    return std::min(std::abs(z), std::abs(z - 4.0));
}

Complex theta(Complex z)
{
    if (distance_to_band(z) < kSpectrumGuard) throw OnSpectrum("z lies on the spectrum [0,4] of Delta");
    Complex t = 2.0 * std::asin(std::sqrt(z) / 2.0);
    if (t.imag() > 0.0) t = -t;
    if (t.real() <= -kPi) t += 2.0 * kPi;
    return t;
}

Complex free_kernel(Complex z, int n, int m)
{
    const Complex th = theta(z);
    return std::exp(-kI * th * static_cast<double>(std::abs(n - m))) / (2.0 * kI * std::sin(th));
}

Branch classify_branch(Complex z0)
{
    const double tol = 1e-12 * std::max(1.0, std::abs(z0));
    if (std::abs(z0) <= tol) return Branch::Zero;
    if (std::abs(z0 - 4.0) <= tol) return Branch::Four;
    if (std::abs(z0.imag()) <= tol && z0.real() > 0.0 && z0.real() < 4.0) return Branch::Interior;
    return Branch::Exterior;
}

double branch_radius(Complex z0)
{
    switch (classify_branch(z0)) {
        case Branch::Zero:
        case Branch::Four:
            return 2.0;
        case Branch::Interior:
            return std::sqrt(std::min(z0.real(), 4.0 - z0.real()));
        case Branch::Exterior:
            return std::sqrt(distance_to_band(z0));
    }
    return 0.0;
}

namespace {

Complex theta_branch(Branch b, Complex z0, Complex k)
{
    switch (b) {
        case Branch::Zero:
            return -2.0 * std::asin(k / 2.0);
        case Branch::Four:
            return kPi - 2.0 * std::asin(kI * k / 2.0);
        case Branch::Interior:
            return -std::acos((2.0 - z0 - k * k) / 2.0);
        case Branch::Exterior:
            return theta(z0 + k * k);
    }
    return 0.0;
}

Complex theta_branch_dk(Branch b, Complex z0, Complex k)
{
    switch (b) {
        case Branch::Zero:
            return -1.0 / std::sqrt(1.0 - k * k / 4.0);
        case Branch::Four:
            return -kI / std::sqrt(1.0 + k * k / 4.0);
        case Branch::Interior:
        case Branch::Exterior:
            return k / std::sin(theta_branch(b, z0, k));
    }
    return 0.0;
}

void check_disk(Complex z0, Complex k, double eps0)
{
    const double r = std::abs(k);
    if (!(r < eps0 * (1.0 + 1e-12)) || !(r < branch_radius(z0))) {
        std::ostringstream msg;
        msg << "|k| = " << r << " is outside the continuation disk (eps0 = " << eps0 << ")";
        throw OutsideDisk(msg.str());
    }
}

Complex kernel_from_theta(Complex th, int d)
{
    const Complex s = std::sin(th);
    if (s == 0.0) throw OnSpectrum("kernel evaluated at a threshold point");
    return std::exp(-kI * th * static_cast<double>(d)) / (2.0 * kI * s);
}

Complex kernel_theta_derivative(Complex th, int d)
{
    const Complex s = std::sin(th);
    const Complex c = std::cos(th);
    const double dd = static_cast<double>(d);
    return std::exp(-kI * th * dd) * (-kI * dd * s - c) / (2.0 * kI * s * s);
}

// Four-branch channels carry phi = pi - theta, which keeps full relative accuracy as k -> 0.
struct Phase {
    Complex t;
    Complex dt;
    bool from_pi;
};

Phase phase_branch(Branch b, Complex z0, Complex k)
{
    if (b == Branch::Four) return {2.0 * std::asin(kI * k / 2.0), kI / std::sqrt(1.0 + k * k / 4.0), true};
    return {theta_branch(b, z0, k), theta_branch_dk(b, z0, k), false};
}

Complex kernel_from_phase(const Phase& p, int d)
{
    if (!p.from_pi) return kernel_from_theta(p.t, d);
    const Complex s = std::sin(p.t);
    if (s == 0.0) throw OnSpectrum("kernel evaluated at a threshold point");
    const double sign = (d % 2 == 0) ? 1.0 : -1.0;
    return sign * std::exp(kI * p.t * static_cast<double>(d)) / (2.0 * kI * s);
}

Complex kernel_phase_dk(const Phase& p, int d)
{
    if (!p.from_pi) return kernel_theta_derivative(p.t, d) * p.dt;
    const Complex s = std::sin(p.t);
    const Complex c = std::cos(p.t);
    const double dd = static_cast<double>(d);
    const double sign = (d % 2 == 0) ? 1.0 : -1.0;
    return sign * std::exp(kI * p.t * dd) * (kI * dd * s - c) / (2.0 * kI * s * s) * p.dt;
}

}  // namespace

Complex theta_continued(Complex z0, Complex k, double eps0)
{
    check_disk(z0, k, eps0);
    return theta_branch(classify_branch(z0), z0, k);
}

Complex theta_continued_dk(Complex z0, Complex k, double eps0)
{
    check_disk(z0, k, eps0);
    return theta_branch_dk(classify_branch(z0), z0, k);
}

ContinuedResolvent::ContinuedResolvent(const ChannelSpectralData& s, const ThresholdEntry& entry,
                                       const WeightScheme& w, ResolventOptions opts)
    : spectral_(s), entry_(entry), weights_(w), opts_(opts), tau_(entry.value), main_channel_(entry.channel)
{
    const int d = s.size();
    if (main_channel_ < 0 || main_channel_ >= d) throw BadParams("threshold channel out of range");

    const Branch main_branch = entry.side == Side::Left ? Branch::Zero : Branch::Four;
    const Branch partner_branch = entry.side == Side::Left ? Branch::Four : Branch::Zero;

    double min_radius = std::numeric_limits<double>::infinity();
    for (int j = 0; j < d; ++j) {
        ChannelBranch cb{tau_ - s.eigenvalues[j], Branch::Exterior, false};
        if (j == main_channel_) {
            cb.branch = main_branch;
            cb.shift = main_branch == Branch::Zero ? 0.0 : 4.0;
            cb.singular = true;
        } else if (entry.degenerate_partner && *entry.degenerate_partner == j) {
            cb.branch = partner_branch;
            cb.shift = partner_branch == Branch::Zero ? 0.0 : 4.0;
            cb.singular = true;
        } else {
            cb.branch = classify_branch(cb.shift);
            if (cb.branch == Branch::Zero || cb.branch == Branch::Four) {
                std::ostringstream msg;
                msg << "channel " << j << " has shift " << cb.shift.real() << "+" << cb.shift.imag()
                    << "i on a threshold of Delta without a declared degeneracy";
                throw ChannelOnThresholdCollision(msg.str());
            }
            min_radius = std::min(min_radius, branch_radius(cb.shift));
        }
        branches_.push_back(cb);
    }

    const double allowed = std::isfinite(min_radius) ? min_radius : 2.0;
    eps0_ = std::min(0.3, 0.5 * allowed);
    if (opts_.eps0) {
        if (!(*opts_.eps0 > 0.0) || !(*opts_.eps0 < allowed))
            throw BadParams("eps0 override exceeds the analyticity radius of the channel branches");
        eps0_ = *opts_.eps0;
    }

    // Runtime check that every regular branch agrees with the physical value from the first quadrant.
    const Complex probe = 0.5 * eps0_ * std::exp(kI * (kPi / 4.0));
    for (int j = 0; j < d; ++j) {
        const auto& cb = branches_[j];
        if (cb.singular) continue;
        const Complex a = theta_branch(cb.branch, cb.shift, probe);
        const Complex b = theta(cb.shift + probe * probe);
        const Complex diff = a - b;
        const double wrapped = std::remainder(diff.real(), 2.0 * kPi);
        if (std::abs(wrapped) > 1e-9 || std::abs(diff.imag()) > 1e-9)
            throw std::logic_error("continued branch disagrees with the physical sheet");
    }
}

bool ContinuedResolvent::physical(Complex k) const
{
    return entry_.side == Side::Right ? k.real() > 0.0 : k.imag() > 0.0;
}

void ContinuedResolvent::check_k(Complex k) const
{
    if (!(std::abs(k) < eps0_ * (1.0 + 1e-12))) {
        std::ostringstream msg;
        msg << "|k| = " << std::abs(k) << " exceeds eps0 = " << eps0_;
        throw OutsideDisk(msg.str());
    }
    if (k == 0.0) throw OnSpectrum("k = 0 is the threshold itself");
}

void ContinuedResolvent::channel_kernels(int j, Complex k, int max_d, bool derivative, std::vector<Complex>& out) const
{
    const auto& cb = branches_[j];
    Phase p = phase_branch(cb.branch, cb.shift, k);
    if (opts_.flip_branch && j == main_channel_) {
        p.t = -p.t;
        p.dt = -p.dt;
    }
    out.assign(max_d + 1, 0.0);
    for (int d = 0; d <= max_d; ++d) out[d] = derivative ? kernel_phase_dk(p, d) : kernel_from_phase(p, d);
}

Complex ContinuedResolvent::channel_kernel(int j, Complex k, int d, bool derivative) const
{
    const auto& cb = branches_[j];
    Phase p = phase_branch(cb.branch, cb.shift, k);
    if (opts_.flip_branch && j == main_channel_) {
        p.t = -p.t;
        p.dt = -p.dt;
    }
    return derivative ? kernel_phase_dk(p, d) : kernel_from_phase(p, d);
}

Complex ContinuedResolvent::kernel(int j, Complex k, int d) const
{
    check_k(k);
    return channel_kernel(j, k, std::abs(d), false);
}

Complex ContinuedResolvent::kernel_dk(int j, Complex k, int d) const
{
    check_k(k);
    return channel_kernel(j, k, std::abs(d), true);
}

std::vector<int> ContinuedResolvent::box_sites() const
{
    std::vector<int> s;
    for (int n = -weights_.box(); n <= weights_.box(); ++n) s.push_back(n);
    return s;
}

Mat ContinuedResolvent::block(Complex k, const std::vector<int>& rows, const std::vector<int>& cols,
                              bool derivative) const
{
    check_k(k);
    const int dim = spectral_.dim();
    const int nch = spectral_.size();
    int max_d = 0;
    for (int n : rows)
        for (int m : cols) max_d = std::max(max_d, std::abs(n - m));

    // g[j](d) for every channel and distance.
    std::vector<std::vector<Complex>> g(nch, std::vector<Complex>(max_d + 1));
    for (int j = 0; j < nch; ++j) channel_kernels(j, k, max_d, derivative, g[j]);

    std::vector<Mat> per_distance(max_d + 1, Mat::Zero(dim, dim));
    for (int d = 0; d <= max_d; ++d)
        for (int j = 0; j < nch; ++j) per_distance[d] += g[j][d] * spectral_.projections[j];

    Mat out(rows.size() * dim, cols.size() * dim);
    for (size_t a = 0; a < rows.size(); ++a) {
        const double wa = weights_.minus(rows[a]);
        for (size_t b = 0; b < cols.size(); ++b) {
            const double wb = weights_.minus(cols[b]);
            out.block(a * dim, b * dim, dim, dim) = (wa * wb) * per_distance[std::abs(rows[a] - cols[b])];
        }
    }
    return out;
}

Mat ContinuedResolvent::evaluate(Complex k) const
{
    const auto s = box_sites();
    return block(k, s, s, false);
}

Mat ContinuedResolvent::derivative(Complex k) const
{
    const auto s = box_sites();
    return block(k, s, s, true);
}

Mat ContinuedResolvent::pole_residue_block(const std::vector<int>& rows, const std::vector<int>& cols) const
{
    const int dim = spectral_.dim();
    Mat out = Mat::Zero(rows.size() * dim, cols.size() * dim);
    for (int j = 0; j < spectral_.size(); ++j) {
        const auto& cb = branches_[j];
        if (!cb.singular) continue;
        for (size_t a = 0; a < rows.size(); ++a)
            for (size_t b = 0; b < cols.size(); ++b) {
                const double ww = weights_.minus(rows[a]) * weights_.minus(cols[b]);
                Complex c;
                if (cb.branch == Branch::Zero) {
                    c = 0.5 * kI * ww;
                } else {
                    const bool even = ((rows[a] + cols[b]) % 2) == 0;
                    c = (even ? -0.5 : 0.5) * ww;
                }
                out.block(a * dim, b * dim, dim, dim) += c * spectral_.projections[j];
            }
    }
    return out;
}

Mat ContinuedResolvent::pole_residue() const
{
    const auto s = box_sites();
    return pole_residue_block(s, s);
}

SingularSplit singular_split(const ContinuedResolvent& r)
{
    SingularSplit out;
    out.residue = r.pole_residue();
    const Mat res = out.residue;
    const ContinuedResolvent* rp = &r;
    out.holomorphic = [rp, res](Complex k) -> Mat { return rp->evaluate(k) - res / k; };
    return out;
}

}  // namespace lres
