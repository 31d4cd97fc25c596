#include "lres/clusters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "lres/errors.hpp"

namespace lres {

namespace {

struct Pairing {
    int q;
    int p;
};

Pairing resolve(const ThresholdEntry& entry)
{
    if (entry.side == Side::Left) return {entry.channel, entry.degenerate_partner.value_or(-1)};
    if (entry.degenerate()) return {*entry.degenerate_partner, entry.channel};
    throw BadParams("right thresholds are handled through the reflected problem");
}

Mat range_basis(const Mat& pi, int nu)
{
    Eigen::ColPivHouseholderQR<Mat> qr(pi);
    Mat q = qr.householderQ() * Mat::Identity(pi.rows(), nu);
    return q;
}

double alternating(int n) { return (n % 2 == 0) ? 1.0 : -1.0; }

// sum_{a,b} x(s_a) W_rho V W_rho (a,b) y(s_b) with x, y in {w, w~}; W_rho(n) w(n) = 1.
Mat contraction(const SupportOperator& vrho, const WeightScheme& w, bool x_alt, bool y_alt)
{
    const int dim = vrho.dim;
    Mat out = Mat::Zero(dim, dim);
    for (size_t a = 0; a < vrho.sites.size(); ++a)
        for (size_t b = 0; b < vrho.sites.size(); ++b) {
            const int n = vrho.sites[a];
            const int m = vrho.sites[b];
            const double xa = w.minus(n) * (x_alt ? alternating(n) : 1.0);
            const double yb = w.minus(m) * (y_alt ? alternating(m) : 1.0);
            out += (xa * yb) * vrho.matrix.block(a * dim, b * dim, dim, dim);
        }
    return out;
}

}  // namespace

Mat build_projector(const ChannelSpectralData& s, const ThresholdEntry& entry, const WeightScheme& w)
{
    const auto pr = resolve(entry);
    const RealVec wv = w.minus_vector();
    RealVec alt = wv;
    for (int n = -w.box(); n <= w.box(); ++n) alt(n + w.box()) *= alternating(n);
    Mat out = kron((wv * wv.transpose()).cast<Complex>(), s.projections[pr.q]);
    if (pr.p >= 0) out += kron((alt * alt.transpose()).cast<Complex>(), s.projections[pr.p]);
    return out;
}

EffectiveMatrix build_effective_matrix(const ChannelSpectralData& s, const ThresholdEntry& entry,
                                       const PotentialSpec& p, const WeightScheme& w)
{
    const auto pr = resolve(entry);
    const SupportOperator vrho = assemble_Vrho(p, w);
    EffectiveMatrix out;
    out.channel = pr.q;
    out.partner = pr.p;
    out.degenerate = pr.p >= 0;

    const int nq = s.multiplicities[pr.q];
    const Mat& piq = s.projections[pr.q];
    const Mat qq = range_basis(piq, nq);
    if (vrho.sites.empty()) {
        const int nu = nq + (out.degenerate ? s.multiplicities[pr.p] : 0);
        out.matrix = Mat::Zero(nu, nu);
        out.nu = nu;
        return out;
    }
    const Mat vww = contraction(vrho, w, false, false);
    if (!out.degenerate) {
        out.matrix = qq.adjoint() * piq * vww * qq;
        out.nu = nq;
        return out;
    }

    const int np = s.multiplicities[pr.p];
    const Mat& pip = s.projections[pr.p];
    const Mat qp = range_basis(pip, np);
    const Mat vwa = contraction(vrho, w, false, true);
    const Mat vaw = contraction(vrho, w, true, false);
    const Mat vaa = contraction(vrho, w, true, true);
    // <w, w~> over Z equals tanh(rho/2)^2.
    const double t = std::tanh(w.rho() / 2.0);
    const double overlap = t * t;

    out.nu = nq + np;
    out.matrix = Mat::Zero(out.nu, out.nu);
    for (int j = 0; j < out.nu; ++j) {
        const bool first = j < nq;
        const Vec c = first ? Vec(qq.col(j)) : Vec(qp.col(j - nq));
        const double with_w = first ? 1.0 : overlap;
        const double with_alt = first ? overlap : 1.0;
        const Vec aq = (0.5 * kI * with_w) * (piq * c);
        const Vec bp = (-0.5 * with_alt) * (pip * c);
        const Vec u = vww * aq + vwa * bp;
        const Vec v = vaw * aq + vaa * bp;
        out.matrix.block(0, j, nq, 1) = qq.adjoint() * piq * u;
        out.matrix.block(nq, j, np, 1) = qp.adjoint() * pip * v;
    }
    return out;
}

std::vector<EigenCluster> cluster_eigenvalues(const Mat& e, double rel_tol)
{
    std::vector<EigenCluster> out;
    if (e.rows() == 0) return out;
    Eigen::ComplexEigenSolver<Mat> es(e, false);
    const Vec ev = es.eigenvalues();
    const int n = static_cast<int>(ev.size());
    const double tol = rel_tol * std::max(1.0, ev.cwiseAbs().maxCoeff());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(ev(i) - ev(j)) <= tol) parent[find(i)] = find(j);
    std::map<int, std::vector<int>> groups;
    for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);
    for (const auto& [root, members] : groups) {
        Complex sum = 0.0;
        for (int i : members) sum += ev(i);
        out.push_back({sum / static_cast<double>(members.size()), static_cast<int>(members.size())});
    }
    std::sort(out.begin(), out.end(), [&](const EigenCluster& a, const EigenCluster& b) {
        if (std::abs(a.value.real() - b.value.real()) > tol) return a.value.real() < b.value.real();
        return a.value.imag() < b.value.imag();
    });
    return out;
}

int ClusterPrediction::total() const
{
    int t = 0;
    for (const auto& e : eigen) t += e.multiplicity;
    return t;
}

ClusterPrediction predict_clusters(const EffectiveMatrix& e, int threshold_id, Complex omega, double C)
{
    if (omega == 0.0) throw BadParams("cluster prediction needs a nonzero coupling");
    if (!(C > 0.0)) throw BadParams("cluster radius constant must be positive");
    ClusterPrediction pred;
    pred.threshold_id = threshold_id;
    pred.degenerate = e.degenerate;
    pred.omega = omega;
    pred.C = C;
    pred.eigen = cluster_eigenvalues(e.matrix);
    const double aw = std::abs(omega);
    for (const auto& ev : pred.eigen) {
        pred.centers.push_back(e.degenerate ? -ev.value * omega : -0.5 * kI * ev.value * omega);
        pred.radii.push_back(C * std::pow(aw, 1.0 + 1.0 / ev.multiplicity));
    }
    for (size_t i = 0; i < pred.centers.size(); ++i)
        for (size_t j = i + 1; j < pred.centers.size(); ++j)
            if (std::abs(pred.centers[i] - pred.centers[j]) <= pred.radii[i] + pred.radii[j]) {
                std::ostringstream msg;
                msg << "cluster disks " << i << " and " << j << " overlap at |omega| = " << aw;
                throw OmegaTooLarge(msg.str());
            }
    return pred;
}

ClusterReport verify_clusters(std::vector<ResonanceRecord>& records, const ClusterPrediction& pred,
                              bool selfadjoint)
{
    ClusterReport rep;
    rep.exact_required = selfadjoint && !pred.degenerate;
    for (size_t c = 0; c < pred.centers.size(); ++c) {
        ClusterCheck chk;
        chk.id = static_cast<int>(c);
        chk.center = pred.centers[c];
        chk.radius = pred.radii[c];
        chk.expected = pred.eigen[c].multiplicity;
        rep.clusters.push_back(chk);
    }
    for (auto& rec : records) {
        int best = -1;
        double dist = std::numeric_limits<double>::infinity();
        for (size_t c = 0; c < pred.centers.size(); ++c) {
            const double d = std::abs(rec.k - pred.centers[c]);
            if (d < dist) {
                dist = d;
                best = static_cast<int>(c);
            }
        }
        if (best < 0) {
            ++rep.outside;
            continue;
        }
        auto& chk = rep.clusters[best];
        rec.cluster_id = best;
        chk.found += rec.mult_index;
        chk.max_distance = std::max(chk.max_distance, dist);
        if (dist > chk.radius) {
            chk.contained = false;
            ++rep.outside;
        }
        rep.total_found += rec.mult_index;
    }
    rep.total_expected = pred.total();
    for (const auto& chk : rep.clusters) {
        if (!chk.contained) rep.pass = false;
        if (pred.degenerate) continue;
        if (chk.found < 1 || chk.found > chk.expected) rep.pass = false;
        if (rep.exact_required && chk.found != chk.expected) rep.pass = false;
    }
    if (rep.exact_required && rep.total_found != rep.total_expected) rep.pass = false;
    return rep;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw BadParams("slope needs at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace lres
