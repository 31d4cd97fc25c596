#include "lres/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "lres/errors.hpp"

namespace lres {

namespace {

struct Group {
    Complex value;
    std::vector<int> members;
};

bool less_complex(Complex a, Complex b, double tol)
{
    if (std::abs(a.real() - b.real()) > tol) return a.real() < b.real();
    if (std::abs(a.imag() - b.imag()) > tol) return a.imag() < b.imag();
    return false;
}

std::vector<Group> group_eigenvalues(const Vec& lambda, double tol)
{
    const int n = static_cast<int>(lambda.size());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(lambda(i) - lambda(j)) <= tol) parent[find(i)] = find(j);

    std::map<int, Group> by_root;
    for (int i = 0; i < n; ++i) by_root[find(i)].members.push_back(i);

    std::vector<Group> groups;
    for (auto& [root, g] : by_root) {
        Complex sum = 0.0;
        for (int i : g.members) sum += lambda(i);
        g.value = sum / static_cast<double>(g.members.size());
        groups.push_back(std::move(g));
    }
    std::sort(groups.begin(), groups.end(),
              [&](const Group& a, const Group& b) { return less_complex(a.value, b.value, tol); });
    return groups;
}

}  // namespace

ChannelSpectralData diagonalize_channel(const ChannelMatrix& m, Case kase)
{
    const Mat& a = m.entries;
    if (a.rows() == 0 || a.rows() != a.cols())
        throw BadParams("channel matrix must be square and non-empty");
    if (!a.allFinite()) throw BadParams("channel matrix has non-finite entries");

    const int n = static_cast<int>(a.rows());
    const double scale = std::max(1.0, a.norm());
    const double tol = kEigenClusterTol * scale;

    ChannelSpectralData out;
    out.kase = kase;

    Vec lambda;
    Mat x;
    Mat xinv;
    const bool hermitian = (a - a.adjoint()).norm() <= 1e-14 * scale;
    if (hermitian) {
        Eigen::SelfAdjointEigenSolver<Mat> es(a);
        lambda = es.eigenvalues().cast<Complex>();
        x = es.eigenvectors();
        xinv = x.adjoint();
        out.condition = 1.0;
    } else {
        Eigen::ComplexEigenSolver<Mat> es(a);
        if (es.info() != Eigen::Success) throw NonDiagonalizable("eigen-decomposition failed");
        lambda = es.eigenvalues();
        x = es.eigenvectors();
        for (int j = 0; j < n; ++j) x.col(j).normalize();

        Eigen::JacobiSVD<Mat> svd(x);
        const auto& sv = svd.singularValues();
        out.condition = sv(n - 1) > 0 ? sv(0) / sv(n - 1) : INFINITY;
        if (!(out.condition <= kMaxEigenvectorCondition)) {
            out.diagonalizable = false;
            std::ostringstream msg;
            msg << "eigenvector matrix condition " << out.condition << " exceeds " << kMaxEigenvectorCondition;
            throw NonDiagonalizable(msg.str());
        }
        // A numerically split Jordan block shows up as a pair of almost parallel eigenvectors.
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (std::abs(lambda(i) - lambda(j)) < 1e-6 * scale &&
                    std::abs(x.col(i).dot(x.col(j))) > 1.0 - 1e-8) {
                    out.diagonalizable = false;
                    throw NonDiagonalizable("nearly parallel eigenvectors for coalescing eigenvalues");
                }
        xinv = x.fullPivLu().inverse();
    }

    auto groups = group_eigenvalues(lambda, tol);
    for (const auto& g : groups) {
        const int nu = static_cast<int>(g.members.size());
        Mat xs(n, nu), ys(nu, n);
        for (int c = 0; c < nu; ++c) {
            xs.col(c) = x.col(g.members[c]);
            ys.row(c) = xinv.row(g.members[c]);
        }
        Mat pi = xs * ys;
        Complex value = hermitian ? Complex(g.value.real(), 0.0) : g.value;
        const double residual = (a * pi - value * pi).norm();
        if (residual > 1e-7 * scale * std::max(1.0, pi.norm())) {
            out.diagonalizable = false;
            throw NonDiagonalizable("spectral projection residual too large");
        }
        out.eigenvalues.push_back(value);
        out.projections.push_back(std::move(pi));
        out.multiplicities.push_back(nu);
    }

    if (kase == Case::B) {
        for (int q = 0; q < out.size(); ++q)
            if (std::abs(out.eigenvalues[q]) <= tol) {
                out.zero_channel = q;
                out.eigenvalues[q] = 0.0;
            }
        if (out.zero_channel < 0)
            throw BadParams("case B needs a channel matrix with nontrivial kernel (finite rank M)");
    }
    return out;
}

double projection_defect(const ChannelSpectralData& s)
{
    const int n = s.dim();
    double worst = 0.0;
    Mat sum = Mat::Zero(n, n);
    for (int q = 0; q < s.size(); ++q) {
        const Mat& p = s.projections[q];
        worst = std::max(worst, (p * p - p).cwiseAbs().maxCoeff());
        for (int r = 0; r < s.size(); ++r)
            if (r != q) worst = std::max(worst, (p * s.projections[r]).cwiseAbs().maxCoeff());
        sum += p;
    }
    worst = std::max(worst, (sum - Mat::Identity(n, n)).cwiseAbs().maxCoeff());
    return worst;
}

const ThresholdEntry& ThresholdCatalog::at(int id) const
{
    for (const auto& e : entries)
        if (e.id == id) return e;
    throw BadParams("no threshold with id " + std::to_string(id));
}

const ThresholdEntry& ThresholdCatalog::find(Complex value, std::optional<Side> side) const
{
    const ThresholdEntry* best = nullptr;
    for (const auto& e : entries) {
        if (std::abs(e.value - value) > 1e-9 * std::max(1.0, std::abs(value))) continue;
        if (side && e.side != *side) continue;
        if (!best || (best->side == Side::Right && e.side == Side::Left)) best = &e;
    }
    if (!best) throw BadParams("requested threshold is not in the catalog");
    return *best;
}

ThresholdCatalog classify_thresholds(const ChannelSpectralData& s, Case kase)
{
    ThresholdCatalog cat;
    const int d = s.size();
    for (int q = 0; q < d; ++q) {
        ThresholdEntry left;
        left.value = s.eigenvalues[q];
        left.side = Side::Left;
        left.channel = q;
        left.kase = kase;
        ThresholdEntry right = left;
        right.value = s.eigenvalues[q] + 4.0;
        right.side = Side::Right;
        cat.entries.push_back(left);
        cat.entries.push_back(right);
    }

    auto is_regular = [&](int q) { return !(kase == Case::B && q == s.zero_channel); };
    for (int q = 0; q < d; ++q) {
        if (!is_regular(q)) continue;
        std::vector<int> partners;
        for (int p = 0; p < d; ++p) {
            if (p == q || !is_regular(p)) continue;
            const Complex lq = s.eigenvalues[q];
            if (std::abs(lq - (s.eigenvalues[p] + 4.0)) <= kThresholdEqualityTol * std::max(1.0, std::abs(lq)))
                partners.push_back(p);
        }
        if (partners.size() > 1)
            throw ThresholdCoincidence("three or more thresholds coincide; degeneracy is undefined there");
        if (partners.empty()) continue;
        const int p = partners.front();
        for (auto& e : cat.entries) {
            if (e.side == Side::Left && e.channel == q) e.degenerate_partner = p;
            if (e.side == Side::Right && e.channel == p) e.degenerate_partner = q;
        }
    }

    std::stable_sort(cat.entries.begin(), cat.entries.end(), [](const ThresholdEntry& a, const ThresholdEntry& b) {
        if (less_complex(a.value, b.value, kThresholdEqualityTol)) return true;
        if (less_complex(b.value, a.value, kThresholdEqualityTol)) return false;
        return a.side == Side::Left && b.side == Side::Right;
    });
    for (size_t i = 0; i < cat.entries.size(); ++i) cat.entries[i].id = static_cast<int>(i);
    return cat;
}

ChannelMatrix preset(const std::string& name, const PresetParams& p)
{
    ChannelMatrix out;
    if (name == "strip") {
        if (p.N < 1) throw BadParams("strip needs N >= 1");
        Mat a = Mat::Zero(p.N, p.N);
        for (int i = 0; i < p.N; ++i) {
            a(i, i) = 2.0;
            if (i + 1 < p.N) a(i, i + 1) = a(i + 1, i) = -1.0;
        }
        out.entries = a;
    } else if (name == "semistrip") {
        if (p.N < 1 || p.J < p.N) throw BadParams("semistrip needs 1 <= N <= J");
        Mat a = Mat::Zero(p.J, p.J);
        a.topLeftCorner(p.N, p.N) = preset("strip", p).entries;
        out.entries = a;
        out.rank_hint = p.N;
    } else if (name == "ring") {
        if (p.m < 2) throw BadParams("ring needs m >= 2");
        Mat a = Mat::Zero(p.m, p.m);
        for (int k = 0; k < p.m; ++k) {
            a((k - 1 + p.m) % p.m, k) += std::exp(p.g);
            a((k + 1) % p.m, k) += std::exp(-p.g);
        }
        out.entries = a;
    } else if (name == "pt2") {
        if (p.kappa < 0 || p.gamma < 0) throw BadParams("pt2 needs kappa, gamma >= 0");
        Mat a(2, 2);
        a << Complex(0, p.gamma), p.kappa, p.kappa, Complex(0, -p.gamma);
        out.entries = a;
    } else {
        throw BadParams("unknown preset '" + name + "'");
    }
    return out;
}

std::vector<Complex> preset_closed_form(const std::string& name, const PresetParams& p)
{
    std::vector<Complex> out;
    if (name == "strip" || name == "semistrip") {
        for (int j = 1; j <= p.N; ++j) {
            const double s = std::sin(kPi * j / (2.0 * (p.N + 1)));
            out.emplace_back(4.0 * s * s, 0.0);
        }
        if (name == "semistrip")
            for (int j = p.N; j < p.J; ++j) out.emplace_back(0.0, 0.0);
    } else if (name == "ring") {
        for (int j = 0; j < p.m; ++j) {
            const double t = 2.0 * kPi * j / p.m;
            out.emplace_back(2.0 * std::cosh(p.g) * std::cos(t), 2.0 * std::sinh(p.g) * std::sin(t));
        }
    } else if (name == "pt2") {
        const Complex r = std::sqrt(Complex(p.kappa * p.kappa - p.gamma * p.gamma, 0.0));
        out = {r, -r};
    } else {
        throw BadParams("unknown preset '" + name + "'");
    }
    return out;
}

ReflectedData reflect_model(const ChannelSpectralData& s)
{
    ReflectedData r;
    r.spectral = s;
    for (auto& l : r.spectral.eigenvalues) l = -l;
    return r;
}

Complex reflect_threshold(Complex tau) { return 4.0 - tau; }

}  // namespace lres
