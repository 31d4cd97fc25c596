#include <random>

#include "fixtures.hpp"

using namespace lres;

TEST_CASE("theta values")
{
    const double a = std::acosh(1.5);
    CHECK(std::abs(theta(-1.0) - Complex(0, -a)) < 1e-12);
    CHECK(std::abs(theta(5.0) - Complex(kPi, -a)) < 1e-12);
    CHECK(std::abs(theta(2.0 - 2.0 * std::cos(Complex(0, -0.3))) - Complex(0, -0.3)) < 1e-12);
    CHECK(std::abs(2.0 - 2.0 * std::cos(theta(Complex(1.0, 0.5))) - Complex(1.0, 0.5)) < 1e-12);
    CHECK_THROWS_AS(theta(2.0), OnSpectrum);
}

TEST_CASE("free kernel against the quadratic root and a truncated inverse")
{
    CHECK(std::abs(free_kernel(-1.0, 0, 0) - 1.0 / std::sqrt(5.0)) < 1e-12);
    CHECK(std::abs(free_kernel(5.0, 0, 0) + 1.0 / std::sqrt(5.0)) < 1e-12);
    CHECK(free_kernel(-1.0, 0, 1) == free_kernel(-1.0, 1, 0));

    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> re(-2.0, 6.0), im(-2.0, 2.0);
    for (int t = 0; t < 10; ++t) {
        Complex z(re(gen), im(gen));
        if (distance_to_band(z) < 0.2) continue;
        for (int d = 0; d < 4; ++d) CHECK(std::abs(free_kernel(z, 0, d) - oracle::kernel_by_root(z, d)) < 1e-12);
    }
    const auto inv = oracle::dense_truncated_inverse(Complex(-0.5, 0.3), 200);
    CHECK(std::abs(free_kernel(Complex(-0.5, 0.3), 3, 5) - inv(203, 205)) < 1e-10);
}

TEST_CASE("continued theta near 0 and 2")
{
    const double t = 0.05;
    const Complex th = theta_continued(0.0, Complex(0, t));
    CHECK(std::abs(th - Complex(0, -2.0 * std::asinh(t / 2))) < 1e-13);
    CHECK(std::abs(th - theta(-t * t)) < 1e-13);

    const double k = 0.1;
    const Complex g = 1.0 / (2.0 * kI * std::sin(theta_continued(0.0, k)));
    CHECK(std::abs(g - kI / (k * std::sqrt(4 - k * k))) < 1e-12);

    const Complex mid = theta_continued(2.0, 0.0);
    CHECK(std::abs(2.0 - 2.0 * std::cos(mid) - 2.0) < 1e-13);

    const Complex k1(0.03, 0.02);
    const double h = 1e-6;
    const Complex fd = (theta_continued(0.0, k1 + h) - theta_continued(0.0, k1 - h)) / (2 * h);
    CHECK(std::abs(theta_continued_dk(0.0, k1) - fd) < 1e-8);
    CHECK_THROWS_AS(theta_continued(0.0, 3.0), OutsideDisk);
}

TEST_CASE("scalar continued resolvent matches the closed form")
{
    const auto s = fx::spectral(Mat::Zero(1, 1));
    const auto cat = classify_thresholds(s, Case::A);
    const WeightScheme w(1.0);
    const ContinuedResolvent r(s, cat.find(0.0, Side::Left), w);
    const Complex k(0.04, -0.07);
    const Mat ev = r.evaluate(k);
    const int L = w.box();
    for (int n : {-3, 0, 2})
        for (int m : {-1, 0, 4}) {
            const Complex want = w.minus(n) * w.minus(m) * kI *
                                 std::exp(kI * (std::abs(n - m) * 2.0 * std::asin(k / 2.0))) /
                                 (k * std::sqrt(4.0 - k * k));
            CHECK(std::abs(ev(n + L, m + L) - want) < 1e-12 * std::abs(want));
        }
}

TEST_CASE("weight scheme")
{
    const WeightScheme w(1.0);
    CHECK(std::abs(w.minus(0) * w.minus(0) - std::tanh(0.5)) < 1e-14);
    CHECK(std::abs(w.plus(3) * w.minus(3) - 1.0) < 1e-14);
}

TEST_CASE("first-quadrant continuation agrees with a dense solve")
{
    fx::RankOneStrip m;
    const ContinuedResolvent r(m.s, m.entry, m.w);
    const int P = 3;
    std::vector<int> sites;
    for (int n = -P; n <= P; ++n) sites.push_back(n);
    const Complex k = 0.05 * std::exp(kI * 0.7);
    const Mat lib = r.block(k, sites, sites);
    const Mat ref = oracle::sandwiched_resolvent(preset("strip", {}).entries, 1.0, r.z_of_k(k), P, 2000);
    CHECK(fx::rel(lib, ref) < 1e-8);

    const double h = 1e-5 * std::abs(k);
    const Mat fd = oracle::central_difference([&](Complex kk) { return Mat(r.block(kk, sites, sites)); }, k, h);
    CHECK(fx::rel(r.block(k, sites, sites, true), fd) < 1e-6);
}

TEST_CASE("pole residues")
{
    const auto s = fx::spectral(Mat::Zero(1, 1));
    const auto cat = classify_thresholds(s, Case::A);
    const WeightScheme w(1.0);
    const int L = w.box();

    const ContinuedResolvent left(s, cat.find(0.0, Side::Left), w);
    CHECK(std::abs(left.pole_residue()(L, L) - Complex(0, 0.5 * std::tanh(0.5))) < 1e-12);
    CHECK(std::abs(Complex(0, 0.5 * std::tanh(0.5)) - Complex(0, 0.2310585786)) < 1e-9);

    const ContinuedResolvent right(s, cat.find(4.0, Side::Right), w);
    CHECK(std::abs(right.pole_residue()(L, L + 1) - 0.5 * w.minus(0) * w.minus(1)) < 1e-12);

    fx::RankOneStrip m;
    const ContinuedResolvent r(m.s, m.entry, m.w);
    const Mat a = r.pole_residue();
    auto defect = [&](double t) {
        const Complex k = t * std::exp(kI * 0.4);
        return (k * r.evaluate(k) - a).norm();
    };
    const double ratio = defect(1e-3) / defect(1e-5);
    CHECK(ratio <= 100.0 * 1.05);
    CHECK(ratio >= 100.0 * 0.95);

    const auto split = singular_split(r);
    const Complex k(0.01, 0.02);
    CHECK(fx::rel(split.residue / k + split.holomorphic(k), r.evaluate(k)) < 1e-12);
}

TEST_CASE("continuation guards")
{
    fx::RankOneStrip m;
    const ContinuedResolvent r(m.s, m.entry, m.w);
    CHECK(r.eps0() > 0.0);
    CHECK(r.eps0() <= 0.3);
    CHECK_THROWS_AS(r.evaluate(0.0), OnSpectrum);
    CHECK_THROWS_AS(r.evaluate(2.0 * r.eps0()), OutsideDisk);
    CHECK(r.physical(Complex(0.0, 0.01)));
    CHECK_FALSE(r.physical(Complex(0.0, -0.01)));

    const auto s = fx::spectral(fx::diag({0.0, 4.0, 1.0}));
    const auto cat = classify_thresholds(s, Case::A);
    CHECK_NOTHROW(ContinuedResolvent(s, cat.find(4.0, Side::Right), WeightScheme(1.0)));

    // In case B the reservoir channel is never a degeneracy partner, so its band edge blocks the continuation.
    const auto b = fx::spectral(fx::diag({0.0, 0.0, 4.0}), Case::B);
    const auto bcat = classify_thresholds(b, Case::B);
    CHECK_THROWS_AS(ContinuedResolvent(b, bcat.find(4.0, Side::Left), WeightScheme(1.0)), ChannelOnThresholdCollision);
}
