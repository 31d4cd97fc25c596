#include "fixtures.hpp"

using namespace lres;

namespace {

struct TwoFold {
    ChannelSpectralData s = fx::spectral(fx::diag({1.0, 1.0, 3.0}));
    ThresholdCatalog cat = classify_thresholds(s, Case::A);
    ThresholdEntry entry = cat.find(1.0, Side::Left);
    WeightScheme w{1.0};
    PotentialSpec p;

    TwoFold()
    {
        Mat v(3, 3);
        v << 1.0, 0.5, 0.2, 0.5, 2.0, 0.3, 0.2, 0.3, 1.0;
        p.dim = 3;
        p.rho = 1.0;
        p.add(0, 0, v);
    }
};

std::vector<ResonanceRecord> search(const ResonanceProblem& prob, Complex omega, double radius)
{
    ResonanceSearch o;
    o.r_outer = radius;
    o.r_inner = 1e-4 * radius;
    return prob.find(omega, o);
}

}  // namespace

TEST_CASE("threshold projectors")
{
    fx::RankOneStrip m;
    const Mat pi = build_projector(m.s, m.entry, m.w);
    CHECK((pi * pi - pi).norm() < 1e-10);
    CHECK(Eigen::JacobiSVD<Mat>(pi).rank() == 1);

    TwoFold t;
    const Mat p2 = build_projector(t.s, t.entry, t.w);
    CHECK(Eigen::JacobiSVD<Mat>(p2).rank() == 2);

    const auto s = fx::spectral(fx::diag({0.0, 4.0}));
    const auto cat = classify_thresholds(s, Case::A);
    const Mat pd = build_projector(s, cat.find(4.0, Side::Right), WeightScheme(1.0));
    Eigen::JacobiSVD<Mat> svd(pd);
    svd.setThreshold(1e-10);
    CHECK(svd.rank() == 2);
    CHECK((pd * pd - pd).norm() < 1e-10);
}

TEST_CASE("effective matrices")
{
    fx::RankOneStrip m;
    const auto e = build_effective_matrix(m.s, m.entry, m.p, m.w);
    REQUIRE(e.matrix.rows() == 1);
    CHECK(std::abs(e.matrix(0, 0) - 0.5) < 1e-12);

    TwoFold t;
    const auto e2 = build_effective_matrix(t.s, t.entry, t.p, t.w);
    REQUIRE(e2.matrix.rows() == 2);
    CHECK((e2.matrix - e2.matrix.adjoint()).norm() < 1e-12);
    const auto ev = cluster_eigenvalues(e2.matrix);
    REQUIRE(ev.size() == 2);
    CHECK(std::abs(ev[0].value.real() - (1.5 - std::sqrt(0.5))) < 1e-12);
    CHECK(std::abs(ev[1].value.real() - (1.5 + std::sqrt(0.5))) < 1e-12);
}

TEST_CASE("cluster prediction")
{
    fx::RankOneStrip m;
    const auto e = build_effective_matrix(m.s, m.entry, m.p, m.w);
    const auto pred = predict_clusters(e, 0, 0.01, 4.0);
    REQUIRE(pred.centers.size() == 1);
    CHECK(std::abs(pred.centers[0] - Complex(0, -0.0025)) < 1e-14);
    CHECK(std::abs(pred.radii[0] - 4.0 * 1e-4) < 1e-16);
    CHECK_THROWS_AS(predict_clusters(e, 0, 0.0), BadParams);

    EffectiveMatrix sym;
    sym.matrix = fx::diag({-1.0, 1.0});
    sym.nu = 2;
    const auto ps = predict_clusters(sym, 0, 0.01, 1.0);
    REQUIRE(ps.centers.size() == 2);
    CHECK(std::abs(ps.centers[0] + ps.centers[1]) < 1e-16);
    CHECK_THROWS_AS(predict_clusters(sym, 0, 0.5, 4.0), OmegaTooLarge);
}

TEST_CASE("end-to-end cluster counts")
{
    fx::RankOneStrip m;
    const ResonanceProblem prob(m.s, m.entry, m.p, m.w);
    const auto e = build_effective_matrix(m.s, m.entry, m.p, m.w);
    auto recs = search(prob, 0.01, 0.01 * 0.3);
    const auto rep = verify_clusters(recs, predict_clusters(e, 0, 0.01), true);
    CHECK(rep.pass);
    CHECK(rep.total_found == 1);
    CHECK(rep.total_expected == 1);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].cluster_id == 0);

    // Halving omega shrinks the cluster error by about 2^2.
    auto recs2 = search(prob, 0.005, 0.005 * 0.3);
    const auto rep2 = verify_clusters(recs2, predict_clusters(e, 0, 0.005), true);
    CHECK(rep.clusters[0].max_distance / rep2.clusters[0].max_distance >= 4.0 * 0.75);

    TwoFold t;
    const ResonanceProblem p2(t.s, t.entry, t.p, t.w);
    const auto e2 = build_effective_matrix(t.s, t.entry, t.p, t.w);
    for (double omega : {0.02, 0.01}) {
        auto r = search(p2, omega, 1.5 * 0.5 * 2.3 * omega);
        const auto report = verify_clusters(r, predict_clusters(e2, 0, omega), true);
        CHECK(report.pass);
        CHECK(report.total_found == 2);
        REQUIRE(report.clusters.size() == 2);
        CHECK(report.clusters[0].found == 1);
        CHECK(report.clusters[1].found == 1);
    }
}

TEST_CASE("log-log slope")
{
    const std::vector<double> x{1e-3, 1e-2, 1e-1}, y{2e-6, 2e-4, 2e-2};
    CHECK(std::abs(loglog_slope(x, y) - 2.0) < 1e-12);
}
