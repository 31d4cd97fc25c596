#include "fixtures.hpp"

using namespace lres;

TEST_CASE("decay validation")
{
    PotentialSpec single;
    single.dim = 2;
    single.rho = 3.0;
    single.add(0, 0, fx::unit(2, 0, 1) * 2.0);
    const auto ok = validate_decay(single);
    CHECK(ok.ok);
    CHECK(std::abs(ok.constant - 2.0) < 1e-12);

    PotentialSpec slow;
    slow.dim = 1;
    slow.rho = 2.0;
    slow.decay_constant = 1.0;
    for (int n = -3; n <= 3; ++n)
        for (int m = -3; m <= 3; ++m) slow.add(n, m, Mat::Constant(1, 1, std::exp(-(std::abs(n) + std::abs(m)))));
    CHECK_FALSE(validate_decay(slow).ok);
    CHECK_THROWS_AS(assemble_Vrho(slow, WeightScheme(2.0)), DecayViolation);

    const int J = 5;
    PotentialSpec b;
    b.kind = Case::B;
    b.dim = J;
    b.rho = 1.0;
    b.K = Mat::Identity(J, J);
    b.decay_constant = 3.0;
    Mat u(J, J);
    for (int j = 0; j < J; ++j)
        for (int k = 0; k < J; ++k) u(j, k) = std::pow(1.0 + j * j + k * k, -1.5);
    for (int n = -2; n <= 2; ++n)
        for (int m = -2; m <= 2; ++m) b.add(n, m, std::exp(-(std::abs(n) + std::abs(m))) * u);
    CHECK(validate_decay(b).ok);
}

TEST_CASE("weighted potential")
{
    fx::RankOneStrip m;
    const auto v = assemble_Vrho(m.p, m.w);
    REQUIRE(v.sites == std::vector<int>{0});
    CHECK(std::abs(v.matrix(0, 0) - m.w.plus(0) * m.w.plus(0)) < 1e-12);
    CHECK(std::abs(v.matrix(1, 1)) < 1e-15);

    fx::CaseBModel b;
    const auto vb = assemble_Vrho(b.p, b.w);
    CHECK((vb.matrix - vb.matrix.adjoint()).norm() < 1e-12 * vb.matrix.norm());
}

TEST_CASE("Birman-Schwinger operator")
{
    fx::RankOneStrip m;
    const ContinuedResolvent r(m.s, m.entry, m.w);
    const Complex k = 0.05 * std::exp(kI * 1.0);
    CHECK(assemble_P(m.p, 0.0, r, k).norm() == 0.0);
    CHECK(fx::rel(assemble_P(m.p, 0.02, r, k), 2.0 * assemble_P(m.p, 0.01, r, k)) < 1e-14);

    PotentialSpec p;
    p.dim = 2;
    p.rho = 1.0;
    p.add(0, 0, fx::unit(2, 0, 0));
    p.add(1, -1, 0.3 * fx::unit(2, 1, 0));
    p.add(-1, 1, 0.3 * fx::unit(2, 0, 1));
    const auto v = assemble_Vrho(p, m.w);
    const int P = 2;
    const Mat ref = oracle::sandwiched_resolvent(preset("strip", {}).entries, 1.0, r.z_of_k(k), P, 2000);
    // Support sites -1, 0, 1 sit at offsets 1..3 of the [-2, 2] block.
    const Mat refS = ref.block(2, 2, 6, 6);
    const Complex omega(0.07, 0.01);
    CHECK(fx::rel(assemble_P(v, omega, r, k), omega * v.matrix * refS) < 1e-8);
}

TEST_CASE("case B factorisation")
{
    fx::CaseBModel b;
    const ContinuedResolvent r(b.s, b.entry, b.w);
    CHECK(assemble_X(b.p, 0.0, r, Complex(0.01, 0.02)).norm() == 0.0);
    for (const Complex k : {Complex(0.05, 0.03), Complex(-0.02, -0.01), Complex(0.0, 0.1)}) {
        const Complex omega(0.3, 0.2);
        const Mat x = assemble_X(b.p, omega, r, k);
        const Mat pp = assemble_P(b.p, omega, r, k);
        const Complex dx = (Mat::Identity(x.rows(), x.cols()) + x).determinant();
        const Complex dp = (Mat::Identity(pp.rows(), pp.cols()) + pp).determinant();
        CHECK(std::abs(dx - dp) < 1e-10 * std::abs(dp));
    }
    // Below the threshold on the physical sheet the resolvent is selfadjoint.
    const Mat x = assemble_X(b.p, 0.4, r, Complex(0.0, 0.1));
    CHECK((x - x.adjoint()).norm() < 1e-12 * x.norm());

    PotentialSpec bad = b.p;
    bad.add(0, 0, -10.0 * Mat::Identity(b.p.dim, b.p.dim));
    CHECK_THROWS_AS(case_b_factor(bad, b.w), NotSignDefinite);
}

TEST_CASE("potential reflection")
{
    fx::RankOneStrip m;
    m.p.add(1, 0, fx::unit(2, 1, 1));
    const auto r = reflect_potential(m.p);
    CHECK(std::abs(r.kernel(0, 0)(0, 0) + 1.0) < 1e-15);
    CHECK(std::abs(r.kernel(1, 0)(1, 1) - 1.0) < 1e-15);

    fx::CaseBModel b;
    CHECK(reflect_potential(b.p).sign == -b.p.sign);
}
