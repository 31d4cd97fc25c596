#include "fixtures.hpp"

using namespace lres;

TEST_CASE("strip N=2 spectrum")
{
    const auto s = diagonalize_channel(preset("strip", {}));
    REQUIRE(s.size() == 2);
    CHECK(std::abs(s.eigenvalues[0] - 1.0) < 1e-12);
    CHECK(std::abs(s.eigenvalues[1] - 3.0) < 1e-12);
    CHECK(s.multiplicities == std::vector<int>{1, 1});
    CHECK(projection_defect(s) < 1e-12);
}

TEST_CASE("strip N=3 closed form")
{
    PresetParams p;
    p.N = 3;
    const auto s = diagonalize_channel(preset("strip", p));
    const double a = 4 * std::pow(std::sin(kPi / 8), 2), b = 4 * std::pow(std::sin(3 * kPi / 8), 2);
    REQUIRE(s.size() == 3);
    CHECK(std::abs(s.eigenvalues[0] - a) < 1e-12);
    CHECK(std::abs(s.eigenvalues[1] - 2.0) < 1e-12);
    CHECK(std::abs(s.eigenvalues[2] - b) < 1e-12);
}

TEST_CASE("non-hermitian two-level preset has oblique projections")
{
    PresetParams p;
    p.kappa = 2.0;
    p.gamma = 1.0;
    const auto s = diagonalize_channel(preset("pt2", p));
    REQUIRE(s.size() == 2);
    CHECK(std::abs(s.eigenvalues[0] + std::sqrt(3.0)) < 1e-12);
    CHECK(std::abs(s.eigenvalues[1] - std::sqrt(3.0)) < 1e-12);
    CHECK((s.projections[0] - s.projections[0].adjoint()).norm() > 1e-3);
    CHECK(projection_defect(s) < 1e-10);
}

TEST_CASE("ring spectra")
{
    PresetParams p;
    p.m = 4;
    auto s = diagonalize_channel(preset("ring", p));
    REQUIRE(s.size() == 3);
    CHECK(std::abs(s.eigenvalues[0] + 2.0) < 1e-12);
    CHECK(std::abs(s.eigenvalues[1]) < 1e-12);
    CHECK(s.multiplicities[1] == 2);

    p.m = 3;
    p.g = 0.5;
    s = diagonalize_channel(preset("ring", p));
    for (int j = 0; j < 3; ++j) {
        const double t = 2 * kPi * j / 3;
        const Complex l(2 * std::cosh(0.5) * std::cos(t), 2 * std::sinh(0.5) * std::sin(t));
        double best = 1e9;
        for (const auto& e : s.eigenvalues) best = std::min(best, std::abs(e - l));
        CHECK(best < 1e-10);
    }
}

TEST_CASE("semistrip in a truncated reservoir")
{
    PresetParams p;
    p.N = 2;
    p.J = 20;
    const auto s = diagonalize_channel(preset("semistrip", p), Case::B);
    REQUIRE(s.zero_channel >= 0);
    CHECK(s.multiplicities[s.zero_channel] == 18);
    CHECK(s.eigenvalues[s.zero_channel] == Complex(0.0));
    CHECK(s.size() == 3);
}

TEST_CASE("jordan block is rejected")
{
    Mat m = Mat::Zero(2, 2);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(fx::spectral(m), NonDiagonalizable);
}

TEST_CASE("threshold catalog")
{
    const auto strip = classify_thresholds(diagonalize_channel(preset("strip", {})), Case::A);
    REQUIRE(strip.entries.size() == 4);
    const double want[] = {1, 3, 5, 7};
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(strip.entries[i].value - want[i]) < 1e-12);
        CHECK_FALSE(strip.entries[i].degenerate());
    }

    const auto s = fx::spectral(fx::diag({0.0, 4.0}));
    const auto cat = classify_thresholds(s, Case::A);
    const auto& right = cat.find(4.0, Side::Right);
    REQUIRE(right.degenerate());
    CHECK(s.eigenvalues[*right.degenerate_partner] == Complex(4.0));
    CHECK(s.eigenvalues[right.channel] == Complex(0.0));
}

TEST_CASE("case B: the zero channel does not pair with lambda + 4")
{
    const auto s = fx::spectral(fx::diag({0.0, 0.0, 2.0}), Case::B);
    const auto cat = classify_thresholds(s, Case::B);
    REQUIRE(cat.entries.size() == 4);
    const double want[] = {0, 2, 4, 6};
    for (int i = 0; i < 4; ++i) CHECK(std::abs(cat.entries[i].value - want[i]) < 1e-12);
    CHECK_FALSE(cat.find(4.0, Side::Right).degenerate());
}

TEST_CASE("chained degeneracies")
{
    const auto cat = classify_thresholds(fx::spectral(fx::diag({0.0, 4.0, 8.0})), Case::A);
    CHECK(cat.find(4.0, Side::Right).degenerate());
    CHECK(cat.find(8.0, Side::Right).degenerate());
    CHECK_FALSE(cat.find(12.0, Side::Right).degenerate());
}

TEST_CASE("reflection")
{
    const int L = 5, n = 2 * L + 1;
    Mat lap = Mat::Zero(n, n), j = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        lap(i, i) = 2.0;
        if (i + 1 < n) lap(i, i + 1) = lap(i + 1, i) = -1.0;
        j(i, i) = ((i - L) % 2 == 0) ? 1.0 : -1.0;
    }
    CHECK((j * lap * j - (4.0 * Mat::Identity(n, n) - lap)).norm() < 1e-14);

    CHECK(reflect_threshold(4.0) == Complex(0.0));
    const auto s = diagonalize_channel(preset("strip", {}));
    const auto r = reflect_model(s).spectral;
    CHECK(std::abs(r.eigenvalues[0] + s.eigenvalues[0]) < 1e-12);
    CHECK(std::abs(r.eigenvalues[1] + s.eigenvalues[1]) < 1e-12);
}
