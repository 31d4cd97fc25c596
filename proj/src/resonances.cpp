#include "lres/resonances.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "lres/errors.hpp"

namespace lres {

ResonanceProblem::ResonanceProblem(const ChannelSpectralData& s, const ThresholdEntry& entry, const PotentialSpec& p,
                                   const WeightScheme& w, ResolventOptions opts)
    : resolvent_(s, entry, w, opts), vrho_(assemble_Vrho(p, w))
{
    if (p.dim != s.dim()) throw BadParams("potential and channel matrix dimensions differ");
    const int n = static_cast<int>(vrho_.matrix.rows());
    if (n == 0) {
        a_ = Mat(0, 0);
        bh_ = Mat(0, 0);
        return;
    }
    Eigen::JacobiSVD<Mat> svd(vrho_.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVec sv = svd.singularValues();
    int r = 0;
    while (r < sv.size() && sv(r) > 1e-13 * sv(0)) ++r;
    a_ = svd.matrixU().leftCols(r) * sv.head(r).cast<Complex>().asDiagonal();
    bh_ = svd.matrixV().leftCols(r).adjoint();

    const auto& sites = vrho_.sites;
    const int dim = vrho_.dim;
    for (int x : sites)
        for (int y : sites) max_distance_ = std::max(max_distance_, std::abs(x - y));
    coeff_.assign(s.size(), std::vector<Mat>(max_distance_ + 1, Mat::Zero(r, r)));
    for (int j = 0; j < s.size(); ++j)
        for (size_t b = 0; b < sites.size(); ++b) {
            const Mat y = s.projections[j] * a_.middleRows(b * dim, dim);
            for (size_t a = 0; a < sites.size(); ++a) {
                const double ww = w.minus(sites[a]) * w.minus(sites[b]);
                coeff_[j][std::abs(sites[a] - sites[b])] += ww * bh_.middleCols(a * dim, dim) * y;
            }
        }
}

void ResonanceProblem::reduced(Complex omega, Complex k, Mat& f, Mat* df) const
{
    const int r = rank();
    f = Mat::Identity(r, r);
    if (df) *df = Mat::Zero(r, r);
    for (size_t j = 0; j < coeff_.size(); ++j)
        for (int d = 0; d <= max_distance_; ++d) {
            f += (omega * resolvent_.kernel(static_cast<int>(j), k, d)) * coeff_[j][d];
            if (df) *df += (omega * resolvent_.kernel_dk(static_cast<int>(j), k, d)) * coeff_[j][d];
        }
}

MatrixFamily ResonanceProblem::family(Complex omega) const
{
    MatrixFamily fam;
    fam.dim = rank();
    fam.eval = [this, omega](Complex k, Mat& f, Mat& df) { reduced(omega, k, f, &df); };
    return fam;
}

std::vector<int> ResonanceProblem::probe_sites(int half_width) const
{
    std::set<int> s(vrho_.sites.begin(), vrho_.sites.end());
    for (int n = -half_width; n <= half_width; ++n) s.insert(n);
    return {s.begin(), s.end()};
}

Mat ResonanceProblem::perturbed_resolvent(Complex omega, Complex k, const std::vector<int>& sites) const
{
    Mat r0 = resolvent_.block(k, sites, sites);
    if (rank() == 0 || omega == 0.0) return r0;
    Mat f;
    reduced(omega, k, f, nullptr);
    Eigen::PartialPivLU<Mat> lu(f);
    if (!(lu.rcond() > 1e-12)) throw AtPole("I + P is not invertible at this k");
    const Mat rts = resolvent_.block(k, sites, vrho_.sites);
    const Mat rst = resolvent_.block(k, vrho_.sites, sites);
    r0 -= omega * (rts * a_) * lu.solve(bh_ * rst);
    return r0;
}

std::vector<ResonanceRecord> ResonanceProblem::find(Complex omega, const ResonanceSearch& opts,
                                                    SearchResult* raw) const
{
    std::vector<ResonanceRecord> out;
    if (omega == 0.0 || rank() == 0) return out;

    SearchRegion region;
    region.r_inner = opts.r_inner;
    region.r_outer = opts.r_outer;
    if (!(opts.r_outer <= resolvent_.eps0() * (1.0 + 1e-12)))
        throw BadParams("search radius exceeds the continuation disk");
    const MatrixFamily fam = family(omega);
    SearchResult res = locate_characteristic_values(fam, region, opts.search);

    const auto probe = probe_sites(opts.probe_box);
    for (size_t i = 0; i < res.values.size(); ++i) {
        const Complex k = res.values[i].k;
        double gap = std::min(std::abs(k), resolvent_.eps0() - std::abs(k));
        for (size_t j = 0; j < res.values.size(); ++j)
            if (j != i) gap = std::min(gap, std::abs(k - res.values[j].k));
        ContourSpec c{k, 0.3 * gap, 32};

        ResonanceRecord rec;
        rec.omega = omega;
        rec.k = k;
        rec.z = resolvent_.z_of_k(k);
        rec.first_sheet = resolvent_.physical(k);
        rec.threshold_id = resolvent_.entry().id;
        rec.contour_radius = c.radius;
        const IndexResult ir = index_on_contour(fam, c);
        rec.mult_index = ir.index;
        rec.index_raw = ir.raw;
        if (opts.residue) {
            rec.mult_residue =
                residue_rank([&](Complex kk) { return perturbed_resolvent(omega, kk, probe); }, c);
        } else {
            rec.mult_residue = rec.mult_index;
        }
        out.push_back(rec);
    }
    if (raw) *raw = res;
    return out;
}

Mat perturbed_resolvent(const ContinuedResolvent& r, const SupportOperator& vrho, Complex omega, Complex k)
{
    const Mat r0 = r.evaluate(k);
    if (omega == 0.0 || vrho.sites.empty()) return r0;
    const Mat p = assemble_P_box(vrho, omega, r, k);
    const Mat a = Mat::Identity(p.rows(), p.cols()) + p;
    Eigen::PartialPivLU<Mat> lu(a.transpose());
    if (!(lu.rcond() > 1e-12)) throw AtPole("I + P is not invertible at this k");
    // R (I + P)^{-1} = ((I + P)^{-T} R^T)^T
    return lu.solve(r0.transpose()).transpose();
}

}  // namespace lres
