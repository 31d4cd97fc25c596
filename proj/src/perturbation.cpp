#include "lres/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "lres/errors.hpp"
#include "lres/model.hpp"

namespace lres {

namespace {

double op_norm(const Mat& a)
{
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues()(0);
}

Mat full_matrix(const PotentialSpec& p, const std::vector<int>& sites, const WeightScheme* w, bool kernel_form)
{
    const int dim = p.dim;
    Mat out = Mat::Zero(sites.size() * dim, sites.size() * dim);
    std::map<int, int> index;
    for (size_t i = 0; i < sites.size(); ++i) index[sites[i]] = static_cast<int>(i);
    for (const auto& [nm, block] : p.terms) {
        const int a = index.at(nm.first);
        const int b = index.at(nm.second);
        const double scale = w ? w->plus(nm.first) * w->plus(nm.second) : 1.0;
        out.block(a * dim, b * dim, dim, dim) = scale * (kernel_form ? p.kernel(nm.first, nm.second) : block);
    }
    return out;
}

}  // namespace

void PotentialSpec::add(int n, int m, const Mat& block)
{
    if (block.rows() != dim || block.cols() != dim) throw BadParams("potential block has the wrong dimension");
    if (block.cwiseAbs().maxCoeff() < kDropBelow) return;
    auto it = terms.find({n, m});
    if (it == terms.end())
        terms.emplace(std::make_pair(n, m), block);
    else
        it->second += block;
}

std::vector<int> PotentialSpec::support() const
{
    std::set<int> s;
    for (const auto& [nm, block] : terms) {
        s.insert(nm.first);
        s.insert(nm.second);
    }
    return {s.begin(), s.end()};
}

Mat PotentialSpec::kernel(int n, int m) const
{
    auto it = terms.find({n, m});
    if (it == terms.end()) return Mat::Zero(dim, dim);
    if (kind == Case::A) return it->second;
    return K.adjoint() * it->second * K;
}

DecayReport validate_decay(const PotentialSpec& p)
{
    DecayReport rep;
    double inferred = 0.0;
    for (const auto& [nm, block] : p.terms) {
        const double nrm = op_norm(block);
        inferred = std::max(inferred, nrm * std::exp(p.rho * (std::abs(nm.first) + std::abs(nm.second))));
        rep.pairs.push_back({nm.first, nm.second, nrm, 0.0});
    }
    rep.constant_inferred = !p.decay_constant.has_value();
    rep.constant = p.decay_constant.value_or(inferred);
    for (auto& pm : rep.pairs) {
        pm.bound = rep.constant * std::exp(-p.rho * (std::abs(pm.n) + std::abs(pm.m)));
        const double ratio = pm.bound > 0 ? pm.norm / pm.bound : INFINITY;
        rep.worst_ratio = std::max(rep.worst_ratio, ratio);
        if (pm.norm > pm.bound * (1.0 + 1e-12)) rep.ok = false;
    }
    return rep;
}

Mat SupportOperator::embed(int box) const
{
    const int n = 2 * box + 1;
    Mat out = Mat::Zero(n * dim, n * dim);
    for (size_t a = 0; a < sites.size(); ++a)
        for (size_t b = 0; b < sites.size(); ++b) {
            if (std::abs(sites[a]) > box || std::abs(sites[b]) > box)
                throw BadParams("potential support exceeds the lattice box");
            out.block((sites[a] + box) * dim, (sites[b] + box) * dim, dim, dim) =
                matrix.block(a * dim, b * dim, dim, dim);
        }
    return out;
}

SupportOperator assemble_Vrho(const PotentialSpec& p, const WeightScheme& w)
{
    if (std::abs(p.rho - w.rho()) > 1e-12 * p.rho)
        throw BadParams("weight scheme and potential use different decay rates");
    const auto rep = validate_decay(p);
    if (!rep.ok) {
        std::ostringstream msg;
        msg << "potential violates the decay bound (worst ratio " << rep.worst_ratio << ")";
        throw DecayViolation(msg.str());
    }
    SupportOperator out;
    out.sites = p.support();
    out.dim = p.dim;
    out.matrix = full_matrix(p, out.sites, &w, true);
    return out;
}

Mat assemble_P(const SupportOperator& vrho, Complex omega, const ContinuedResolvent& r, Complex k)
{
    if (vrho.sites.empty()) return Mat(0, 0);
    return omega * vrho.matrix * r.block(k, vrho.sites, vrho.sites);
}

Mat assemble_P(const PotentialSpec& p, Complex omega, const ContinuedResolvent& r, Complex k)
{
    return assemble_P(assemble_Vrho(p, r.weights()), omega, r, k);
}

Mat assemble_P_box(const SupportOperator& vrho, Complex omega, const ContinuedResolvent& r, Complex k)
{
    const int box = r.weights().box();
    return omega * vrho.embed(box) * r.evaluate(k);
}

CaseBFactor case_b_factor(const PotentialSpec& p, const WeightScheme& w)
{
    if (p.kind != Case::B) throw NotCaseB("factorized form needs a case B potential");
    if (p.sign != 1 && p.sign != -1) throw BadParams("case B sign must be +1 or -1");
    if (p.K.rows() != p.dim || p.K.cols() != p.dim) throw BadParams("K has the wrong dimension");
    const auto rep = validate_decay(p);
    if (!rep.ok) throw DecayViolation("case B factor U violates the decay bound");

    CaseBFactor f;
    f.sites = p.support();
    f.dim = p.dim;
    f.sign = p.sign;
    const Mat u = full_matrix(p, f.sites, &w, false);
    const double scale = std::max(1.0, u.norm());
    if ((u - u.adjoint()).norm() > 1e-10 * scale) throw NotSignDefinite("case B requires a Hermitian U");
    Eigen::SelfAdjointEigenSolver<Mat> es(static_cast<double>(p.sign) * u);
    const RealVec ev = es.eigenvalues();
    if (ev.size() > 0 && ev.minCoeff() < -1e-10 * scale) {
        std::ostringstream msg;
        msg << "sign * U has eigenvalue " << ev.minCoeff() << " < 0";
        throw NotSignDefinite(msg.str());
    }
    const RealVec root = ev.cwiseMax(0.0).cwiseSqrt();
    const Mat half = es.eigenvectors() * root.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
    Mat kk = Mat::Zero(f.sites.size() * p.dim, f.sites.size() * p.dim);
    for (size_t a = 0; a < f.sites.size(); ++a) kk.block(a * p.dim, a * p.dim, p.dim, p.dim) = p.K;
    f.Lt = half * kk;
    return f;
}

Mat assemble_X(const CaseBFactor& f, Complex omega, const ContinuedResolvent& r, Complex k)
{
    if (f.sites.empty()) return Mat(0, 0);
    return (static_cast<double>(f.sign) * omega) * f.Lt * r.block(k, f.sites, f.sites) * f.Lt.adjoint();
}

Mat assemble_X(const PotentialSpec& p, Complex omega, const ContinuedResolvent& r, Complex k)
{
    return assemble_X(case_b_factor(p, r.weights()), omega, r, k);
}

PotentialSpec reflect_potential(const PotentialSpec& p)
{
    PotentialSpec out = p;
    for (auto& [nm, block] : out.terms) block *= ReflectedData::potential_sign(nm.first, nm.second);
    // -J U J flips the definiteness of U.
    if (out.kind == Case::B) out.sign = -p.sign;
    return out;
}

}  // namespace lres
