#include "lres/charval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "lres/errors.hpp"

namespace lres {

namespace {

constexpr int kGaussPoints = 16;

struct GaussRule {
    std::array<double, kGaussPoints> x{};
    std::array<double, kGaussPoints> w{};
};

// Golub-Welsch on the Legendre Jacobi matrix.
const GaussRule& gauss_rule()
{
    static const GaussRule rule = [] {
        GaussRule g;
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(kGaussPoints, kGaussPoints);
        for (int i = 1; i < kGaussPoints; ++i) {
            const double b = i / std::sqrt(4.0 * i * i - 1.0);
            j(i, i - 1) = j(i - 1, i) = b;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
        for (int i = 0; i < kGaussPoints; ++i) {
            g.x[i] = es.eigenvalues()(i);
            const double v = es.eigenvectors()(0, i);
            g.w[i] = 2.0 * v * v;
        }
        return g;
    }();
    return rule;
}

bool near_integer(Complex raw, int& rounded)
{
    rounded = static_cast<int>(std::lround(raw.real()));
    return std::abs(raw - Complex(rounded, 0.0)) < kIntegerTol;
}

struct Moments {
    Complex m0 = 0.0;
    Complex m1 = 0.0;

    Moments operator+(const Moments& o) const { return {m0 + o.m0, m1 + o.m1}; }
    Moments operator-() const { return {-m0, -m1}; }
};

enum EdgeKind { Radial = 0, Arc = 1 };

class CellIntegrator {
public:
    CellIntegrator(const MatrixFamily& f, Complex center, int max_panels)
        : f_(f), center_(center), max_panels_(max_panels)
    {
    }

    // Radial edges run in s = log r at fixed angle; arcs run in the angle at fixed radius.
    Moments edge(EdgeKind kind, double fixed, double from, double to)
    {
        if (from == to) return {};
        const bool flip = from > to;
        const double a = flip ? to : from;
        const double b = flip ? from : to;
        const auto key = std::make_tuple(static_cast<int>(kind), fixed, a, b);
        auto it = cache_.find(key);
        Moments m;
        if (it != cache_.end()) {
            m = it->second;
        } else {
            m = integrate(kind, fixed, a, b);
            cache_.emplace(key, m);
        }
        return flip ? -m : m;
    }

    int evaluations() const { return evals_; }

private:
    Moments composite(EdgeKind kind, double fixed, double a, double b, int panels)
    {
        const auto& g = gauss_rule();
        const double h = (b - a) / panels;
        Moments m;
        double kscale = 0.0;
        for (int p = 0; p < panels; ++p) {
            const double mid = a + (p + 0.5) * h;
            for (int i = 0; i < kGaussPoints; ++i) {
                const double t = mid + 0.5 * h * g.x[i];
                Complex k, dk;
                if (kind == Radial) {
                    const Complex e = std::exp(Complex(t, fixed));
                    k = center_ + e;
                    dk = e;
                } else {
                    const Complex e = fixed * std::exp(Complex(0.0, t));
                    k = center_ + e;
                    dk = kI * e;
                }
                ++evals_;
                const Complex val = log_det_derivative(f_, k) * dk * (0.5 * h * g.w[i]);
                m.m0 += val;
                m.m1 += k * val;
                kscale = std::max(kscale, std::abs(k));
            }
        }
        const Complex norm = 1.0 / (2.0 * kPi * kI);
        m.m0 *= norm;
        m.m1 *= norm;
        last_scale_ = kscale;
        return m;
    }

    Moments integrate(EdgeKind kind, double fixed, double a, double b)
    {
        Moments prev = composite(kind, fixed, a, b, 1);
        for (int panels = 2; panels <= max_panels_; panels *= 2) {
            Moments cur = composite(kind, fixed, a, b, panels);
            if (std::abs(cur.m0 - prev.m0) < 1e-10 &&
                std::abs(cur.m1 - prev.m1) < 1e-10 * std::max(last_scale_, 1e-300))
                return cur;
            prev = cur;
        }
        throw BoundaryZero("edge quadrature did not converge; a characteristic value is close to the edge");
    }

    const MatrixFamily& f_;
    Complex center_;
    int max_panels_;
    int evals_ = 0;
    double last_scale_ = 0.0;
    std::map<std::tuple<int, double, double, double>, Moments> cache_;
};

struct Cell {
    double s0, s1;
    double p0, p1;
    Moments m;
    int index = 0;
    int depth = 0;
};

Moments cell_moments(CellIntegrator& in, double s0, double s1, double p0, double p1)
{
    const double r0 = std::exp(s0);
    const double r1 = std::exp(s1);
    return in.edge(Radial, p0, s0, s1) + in.edge(Arc, r1, p0, p1) + in.edge(Radial, p1, s1, s0) +
           in.edge(Arc, r0, p1, p0);
}

int checked_index(const Moments& m)
{
    int n = 0;
    if (!near_integer(m.m0, n)) {
        std::ostringstream msg;
        msg << "cell index " << m.m0 << " is not an integer";
        throw BoundaryZero(msg.str());
    }
    if (n < 0) throw BoundaryZero("negative cell index");
    return n;
}

class Searcher {
public:
    Searcher(const MatrixFamily& f, const SearchRegion& region, const SearchOptions& opts)
        : f_(f), region_(region), opts_(opts), rng_(opts.seed), integ_(f, region.center, opts.max_panels)
    {
    }

    SearchResult run()
    {
        SearchResult res;
        SearchRegion reg = region_;
        double offset = opts_.angle_offset;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int attempt = 0;; ++attempt) {
            try {
                found_.clear();
                std::vector<Cell> top;
                const double s0 = std::log(reg.r_inner);
                const double s1 = std::log(reg.r_outer);
                for (int j = 0; j < 4; ++j) {
                    Cell c{s0, s1, offset + j * kPi / 2.0, offset + (j + 1) * kPi / 2.0, {}, 0, 0};
                    c.m = cell_moments(integ_, c.s0, c.s1, c.p0, c.p1);
                    c.index = checked_index(c.m);
                    top.push_back(c);
                }
                int total = 0;
                for (auto& c : top) {
                    total += c.index;
                    process(c);
                }
                res.total_index = total;
                break;
            } catch (const BoundaryZero&) {
                if (attempt >= opts_.max_retries) throw NotConverged("search region boundary passes through a zero");
            } catch (const SingularOnContour&) {
                if (attempt >= opts_.max_retries) throw NotConverged("search region boundary passes through a zero");
            }
            ++retries_;
            reg.r_inner = region_.r_inner * (1.0 + 0.05 * u(rng_));
            reg.r_outer = region_.r_outer * (1.0 - 0.02 * u(rng_));
            offset = opts_.angle_offset + 0.2 * (u(rng_) - 0.5);
        }
        res.values = found_;
        std::sort(res.values.begin(), res.values.end(),
                  [](const CharacteristicValue& a, const CharacteristicValue& b) { return k_order(a.k, b.k); });
        int sum = 0;
        for (const auto& v : res.values) sum += v.multiplicity;
        if (sum != res.total_index) throw NotConverged("multiplicities do not add up to the region index");
        res.cells = cells_;
        res.retries = retries_;
        res.region = reg;
        return res;
    }

private:
    double diameter(const Cell& c) const
    {
        const double r0 = std::exp(c.s0);
        const double r1 = std::exp(c.s1);
        return std::max(r1 - r0, r1 * (c.p1 - c.p0));
    }

    bool inside(const Cell& c, Complex k) const
    {
        const Complex d = k - region_.center;
        const double r = std::abs(d);
        const double s = std::log(r);
        double phi = std::arg(d);
        while (phi < c.p0) phi += 2.0 * kPi;
        while (phi >= c.p0 + 2.0 * kPi) phi -= 2.0 * kPi;
        const double ds = 1e-12 * std::max(1.0, std::abs(c.s1));
        return s >= c.s0 - ds && s <= c.s1 + ds && phi <= c.p1 + 1e-12;
    }

    bool newton(const Cell& c, Complex& k)
    {
        k = c.m.m1;
        double prev_step = INFINITY;
        for (int it = 0; it < 60; ++it) {
            Complex t;
            try {
                t = log_det_derivative(f_, k);
            } catch (const SingularOnContour&) {
                return inside(c, k);
            }
            for (const auto& z : found_) t -= static_cast<double>(z.multiplicity) / (k - z.k);
            if (!std::isfinite(t.real()) || !std::isfinite(t.imag()) || t == 0.0) return inside(c, k);
            const Complex step = 1.0 / t;
            k -= step;
            if (!inside(c, k) && it > 3) return false;
            const double scale = std::abs(k - region_.center);
            if (std::abs(step) <= 1e-14 * scale + 1e-300) return inside(c, k);
            // Rounding floor reached: the step no longer contracts.
            if (std::abs(step) <= 1e-11 * scale && std::abs(step) > 0.5 * prev_step) return inside(c, k);
            prev_step = std::abs(step);
        }
        return false;
    }

    // Distance from k to the boundary of the cell, measured in the k-plane.
    double boundary_distance(const Cell& c, Complex k) const
    {
        const Complex d = k - region_.center;
        const double r = std::abs(d);
        double phi = std::arg(d);
        while (phi < c.p0) phi += 2.0 * kPi;
        const double dr = std::min(r - std::exp(c.s0), std::exp(c.s1) - r);
        const double dphi = std::min(phi - c.p0, c.p1 - phi);
        return std::min(dr, dphi >= kPi / 2.0 ? r : r * std::sin(dphi));
    }

    // Modified Newton for a zero of multiplicity c.index, confirmed by a contour index around it.
    bool multiple_zero(const Cell& c, Complex& k)
    {
        const double p = static_cast<double>(c.index);
        k = c.m.m1 / p;
        bool converged = false;
        for (int it = 0; it < 40 && !converged; ++it) {
            Complex t;
            try {
                t = log_det_derivative(f_, k);
            } catch (const SingularOnContour&) {
                converged = true;
                break;
            }
            for (const auto& z : found_) t -= static_cast<double>(z.multiplicity) / (k - z.k);
            if (!std::isfinite(t.real()) || !std::isfinite(t.imag()) || t == 0.0) return false;
            const Complex step = p / t;
            k -= step;
            if (!inside(c, k)) return false;
            converged = std::abs(step) <= 1e-13 * std::abs(k - region_.center);
        }
        if (!converged) return false;
        const double rad = 0.5 * boundary_distance(c, k);
        if (!(rad > 1e-3 * diameter(c))) return false;
        try {
            return index_on_contour(f_, ContourSpec{k, rad, 32}).index == c.index;
        } catch (const NumericalFailure&) {
            return false;
        }
    }

    std::vector<Cell> split(const Cell& c)
    {
        std::uniform_real_distribution<double> u(-0.15, 0.15);
        for (int attempt = 0; attempt <= opts_.max_retries; ++attempt) {
            double sm = 0.5 * (c.s0 + c.s1);
            double pm = 0.5 * (c.p0 + c.p1);
            if (attempt > 0) {
                ++retries_;
                sm += u(rng_) * (c.s1 - c.s0);
                pm += u(rng_) * (c.p1 - c.p0);
            }
            try {
                std::vector<Cell> kids = {
                    {c.s0, sm, c.p0, pm, {}, 0, c.depth + 1},
                    {sm, c.s1, c.p0, pm, {}, 0, c.depth + 1},
                    {c.s0, sm, pm, c.p1, {}, 0, c.depth + 1},
                    {sm, c.s1, pm, c.p1, {}, 0, c.depth + 1},
                };
                int sum = 0;
                for (auto& kc : kids) {
                    kc.m = cell_moments(integ_, kc.s0, kc.s1, kc.p0, kc.p1);
                    kc.index = checked_index(kc.m);
                    sum += kc.index;
                }
                if (sum != c.index) throw BoundaryZero("child indices do not add up");
                return kids;
            } catch (const BoundaryZero&) {
            } catch (const SingularOnContour&) {
            }
        }
        throw NotConverged("cell subdivision failed after repeated perturbation");
    }

    void process(const Cell& c)
    {
        ++cells_;
        if (c.index == 0) return;
        if (c.depth > 400) throw NotConverged("subdivision depth exceeded");
        const bool small = diameter(c) < opts_.tol * region_.r_outer;
        if (c.index == 1) {
            Complex k;
            if (newton(c, k)) {
                found_.push_back({k, 1});
                return;
            }
            if (small) {
                found_.push_back({c.m.m1, 1});
                return;
            }
        } else if (small) {
            found_.push_back({c.m.m1 / static_cast<double>(c.index), c.index});
            return;
        } else {
            Complex k;
            if (multiple_zero(c, k)) {
                found_.push_back({k, c.index});
                return;
            }
        }
        for (const auto& kid : split(c)) process(kid);
    }

    const MatrixFamily& f_;
    SearchRegion region_;
    SearchOptions opts_;
    std::mt19937_64 rng_;
    CellIntegrator integ_;
    std::vector<CharacteristicValue> found_;
    int cells_ = 0;
    int retries_ = 0;
};

}  // namespace

bool k_order(Complex a, Complex b)
{
    const double ra = std::abs(a);
    const double rb = std::abs(b);
    if (ra != rb) return ra < rb;
    return std::arg(a) < std::arg(b);
}

Complex log_det_derivative(const MatrixFamily& f, Complex k)
{
    if (f.dim == 0) return 0.0;
    Mat a, da;
    f.eval(k, a, da);
    Eigen::PartialPivLU<Mat> lu(a);
    if (!(lu.rcond() > kSingularGuard)) {
        Eigen::JacobiSVD<Mat> svd(a);
        const auto& sv = svd.singularValues();
        if (!(sv(sv.size() - 1) > kSingularGuard * sv(0)))
            throw SingularOnContour("matrix family is numerically singular on the contour");
    }
    return lu.solve(da).trace();
}

IndexResult index_on_contour(const MatrixFamily& f, const ContourSpec& c)
{
    if (!(c.radius > 0.0)) throw BadParams("contour radius must be positive");
    int n = std::max(4, c.nodes);
    auto node = [&](int j, int total) { return c.radius * std::exp(Complex(0.0, 2.0 * kPi * j / total)); };

    Complex sum = 0.0;
    for (int j = 0; j < n; ++j) {
        const Complex e = node(j, n);
        sum += log_det_derivative(f, c.center + e) * e;
    }
    Complex prev = sum / static_cast<double>(n);
    for (; n <= (1 << 16); n *= 2) {
        for (int j = 1; j < 2 * n; j += 2) {
            const Complex e = node(j, 2 * n);
            sum += log_det_derivative(f, c.center + e) * e;
        }
        const Complex cur = sum / static_cast<double>(2 * n);
        if (std::abs(cur - prev) < kIndexStepTol) {
            IndexResult r;
            r.raw = cur;
            r.nodes = 2 * n;
            if (!near_integer(cur, r.index)) {
                std::ostringstream msg;
                msg << "contour index " << cur << " is not within " << kIntegerTol << " of an integer";
                throw NotConverged(msg.str());
            }
            return r;
        }
        prev = cur;
    }
    throw NotConverged("contour index quadrature did not converge");
}

SearchResult locate_characteristic_values(const MatrixFamily& f, const SearchRegion& region,
                                          const SearchOptions& opts)
{
    if (!(region.r_inner > 0.0) || !(region.r_outer > region.r_inner))
        throw BadParams("search annulus needs 0 < r_inner < r_outer");
    if (f.dim == 0) {
        SearchResult r;
        r.region = region;
        return r;
    }
    Searcher s(f, region, opts);
    return s.run();
}

int residue_rank(const std::function<Mat(Complex)>& r, const ContourSpec& c, ResidueInfo* info)
{
    if (!(c.radius > 0.0)) throw BadParams("contour radius must be positive");
    int n = std::max(8, c.nodes);
    auto node = [&](int j, int total) { return c.radius * std::exp(Complex(0.0, 2.0 * kPi * j / total)); };

    double scale = 0.0;
    Mat sum;
    auto add = [&](int j, int total) {
        const Complex e = node(j, total);
        Mat v = r(c.center + e);
        scale = std::max(scale, v.norm() * c.radius);
        if (sum.size() == 0)
            sum = v * e;
        else
            sum += v * e;
    };
    for (int j = 0; j < n; ++j) add(j, n);
    Mat prev = sum / static_cast<double>(n);
    Mat res;
    bool converged = false;
    for (; n <= (1 << 14); n *= 2) {
        for (int j = 1; j < 2 * n; j += 2) add(j, 2 * n);
        res = sum / static_cast<double>(2 * n);
        if ((res - prev).norm() <= 1e-11 * std::max(scale, 1e-300)) {
            converged = true;
            n *= 2;
            break;
        }
        prev = res;
    }
    if (!converged) throw NotConverged("residue quadrature did not converge");

    Eigen::JacobiSVD<Mat> svd(res);
    const RealVec sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    int rank = 0;
    double cutoff = kRankCutoff * smax;
    if (smax <= 1e-12 * scale) {
        cutoff = INFINITY;
    } else {
        for (int i = 0; i < sv.size(); ++i) {
            if (sv(i) > cutoff / 10.0 && sv(i) < cutoff * 10.0) {
                std::ostringstream msg;
                msg << "residue singular value " << sv(i) << " is within a factor 10 of the cutoff " << cutoff;
                throw RankAmbiguous(msg.str());
            }
            if (sv(i) > cutoff) ++rank;
        }
    }
    if (info) {
        info->singular_values = sv;
        info->nodes = n;
        info->cutoff = cutoff;
    }
    return rank;
}

}  // namespace lres
