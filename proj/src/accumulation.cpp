#include "lres/accumulation.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "lres/errors.hpp"

namespace lres {

CountingFunction::CountingFunction(const Mat& h)
{
    if (h.rows() == 0) return;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
    ev_ = es.eigenvalues();
}

int CountingFunction::count(double a, double b) const
{
    int c = 0;
    for (int i = 0; i < ev_.size(); ++i)
        if (ev_(i) >= a && ev_(i) <= b) ++c;
    return c;
}

double CountingFunction::max() const { return ev_.size() ? ev_.maxCoeff() : 0.0; }

double CountingFunction::min_positive(double rel_floor) const
{
    const double cut = rel_floor * std::max(max(), 0.0);
    double best = INFINITY;
    for (int i = 0; i < ev_.size(); ++i)
        if (ev_(i) > cut) best = std::min(best, ev_(i));
    return best;
}

int CountingFunction::rank(double rel_floor) const
{
    const double cut = rel_floor * std::max(ev_.size() ? ev_.cwiseAbs().maxCoeff() : 0.0, 0.0);
    int r = 0;
    for (int i = 0; i < ev_.size(); ++i)
        if (std::abs(ev_(i)) > cut) ++r;
    return r;
}

QE0 build_Q0_E0(const ChannelSpectralData& s, const PotentialSpec& p, const WeightScheme& w)
{
    if (p.kind != Case::B || s.kase != Case::B || s.zero_channel < 0)
        throw NotCaseB("Q0 and E0 are defined for case B at the threshold 0");
    const Mat& pi0 = s.projections[s.zero_channel];
    if ((pi0 - pi0.adjoint()).norm() > 1e-10 * std::max(1.0, pi0.norm()))
        throw BadParams("Q0 needs an orthogonal projection onto Ker M (selfadjoint M)");
    const int nu0 = s.multiplicities[s.zero_channel];
    Eigen::ColPivHouseholderQR<Mat> qr(pi0);
    const Mat f = qr.householderQ() * Mat::Identity(pi0.rows(), nu0);

    QE0 out;
    out.sign = p.sign;
    const CaseBFactor fac = case_b_factor(p, w);
    const int dim = p.dim;
    Mat wf = Mat::Zero(fac.sites.size() * dim, nu0);
    for (size_t a = 0; a < fac.sites.size(); ++a) wf.middleRows(a * dim, dim) = w.minus(fac.sites[a]) * f;
    out.G = fac.Lt * wf;
    out.Q0 = 0.5 * out.G * out.G.adjoint();

    const SupportOperator vrho = assemble_Vrho(p, w);
    Mat vhat = Mat::Zero(dim, dim);
    for (size_t a = 0; a < vrho.sites.size(); ++a)
        for (size_t b = 0; b < vrho.sites.size(); ++b)
            vhat += (w.minus(vrho.sites[a]) * w.minus(vrho.sites[b])) * vrho.matrix.block(a * dim, b * dim, dim, dim);
    out.E0 = f.adjoint() * vhat * f;

    out.counting = CountingFunction(static_cast<double>(p.sign) * out.E0);
    out.counting_Q0 = CountingFunction(out.Q0);
    out.rank_E0 = out.counting.rank(1e-10);
    out.rank_Q0 = out.counting_Q0.rank(1e-10);
    return out;
}

SectorReport verify_sector(const std::vector<ResonanceRecord>& records, Complex omega, int sign, double theta)
{
    SectorReport rep;
    rep.theta = theta;
    rep.max_signed_im = -INFINITY;
    for (const auto& r : records) {
        const Complex q = r.k / omega;
        rep.max_signed_im = std::max(rep.max_signed_im, sign * q.imag());
        rep.max_relative_re = std::max(rep.max_relative_re, std::abs(q.real()) / std::abs(q));
        ++rep.records;
    }
    if (records.empty()) rep.max_signed_im = 0.0;
    rep.pass = rep.max_signed_im <= 1e-8 && rep.max_relative_re <= theta;
    return rep;
}

std::vector<double> epsilon_sequence(const CountingFunction& e0, double floor_factor)
{
    std::vector<double> out;
    const double top = e0.max();
    if (!(top > 0.0)) return out;
    const double bottom = floor_factor * e0.min_positive();
    const auto& ev = e0.eigenvalues();
    for (double eps = top; eps >= bottom; eps /= 2.0) {
        bool clear = true;
        for (int i = 0; i < ev.size(); ++i)
            if (ev(i) > 0 && std::abs(2.0 * eps - ev(i)) < 0.1 * ev(i)) clear = false;
        if (clear) out.push_back(eps);
    }
    return out;
}

CountingReport verify_counting(const std::vector<ResonanceRecord>& records, const CountingFunction& e0,
                               const std::vector<double>& eps, Complex omega, double eps0)
{
    CountingReport rep;
    const double aw = std::abs(omega);
    const auto& ev = e0.eigenvalues();
    int previous = -1;
    for (double e : eps) {
        for (int i = 0; i < ev.size(); ++i)
            if (ev(i) > 0 && std::abs(2.0 * e - ev(i)) < 0.1 * ev(i))
                throw EpsilonOnSpectrum("2 eps lies within 10% of an eigenvalue of E0");
        AnnulusCount row;
        row.eps = e;
        for (const auto& r : records) {
            const double ak = std::abs(r.k);
            if (ak > e * aw && ak < eps0 * aw) row.found += r.mult_index;
        }
        row.expected = e0.count(2.0 * e, 2.0 * eps0);
        row.deviation = row.found - row.expected;
        if (std::abs(row.deviation) > 1) rep.pass = false;
        if (row.found < previous) rep.monotone = false;
        previous = row.found;
        rep.rows.push_back(row);
    }
    if (!rep.monotone) rep.pass = false;
    rep.saturation = e0.rank(1e-10);
    return rep;
}

SheetTag classify_sheet(const ResonanceRecord& rec, Complex omega, int sign)
{
    SheetTag t;
    t.first_sheet = rec.k.imag() > 0.0;
    // Leading order k = -i sign omega mu with mu > 0, so Im k has the sign of -sign * Re(omega).
    const double lead = -sign * omega.real();
    if (std::abs(omega.real()) > 1e-12 * std::abs(omega))
        t.expected = lead > 0 ? SheetExpectation::First : SheetExpectation::Second;
    if (t.expected != SheetExpectation::Undetermined)
        t.matches = t.first_sheet == (t.expected == SheetExpectation::First);
    return t;
}

double accumulation_axis(Complex omega)
{
    return std::remainder(2.0 * std::arg(omega) - kPi, 2.0 * kPi);
}

}  // namespace lres
