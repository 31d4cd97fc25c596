#pragma once

#include <doctest.h>

#include "lres/clusters.hpp"
#include "lres/errors.hpp"
#include "lres/model.hpp"
#include "lres/perturbation.hpp"
#include "lres/resonances.hpp"
#include "oracles/oracles.hpp"

namespace fx {

using namespace lres;

inline ChannelSpectralData spectral(const Mat& m, Case kase = Case::A)
{
    ChannelMatrix cm;
    cm.entries = m;
    return diagonalize_channel(cm, kase);
}

inline Mat diag(std::initializer_list<double> d)
{
    Mat m = Mat::Zero(d.size(), d.size());
    int i = 0;
    for (double x : d) m(i, i) = x, ++i;
    return m;
}

inline Mat unit(int dim, int r, int c)
{
    Mat m = Mat::Zero(dim, dim);
    m(r, c) = 1.0;
    return m;
}

// Strip N = 2 with V = delta_0 (x) e1 e1^T, threshold 1 (left edge of the lower band).
struct RankOneStrip {
    ChannelSpectralData s = diagonalize_channel(preset("strip", PresetParams{}));
    ThresholdCatalog cat = classify_thresholds(s, Case::A);
    ThresholdEntry entry = cat.find(1.0, Side::Left);
    WeightScheme w{1.0};
    PotentialSpec p;

    RankOneStrip()
    {
        p.dim = 2;
        p.rho = 1.0;
        p.add(0, 0, unit(2, 0, 0));
    }
};

inline double rel(const Mat& a, const Mat& b) { return (a - b).norm() / b.norm(); }

}  // namespace fx

namespace fx {

// Case B: M = 2 |e_1><e_1| on C^J, K = diag(j^{-2}), U(n,m) = sign e^{-(|n|+|m|)} (I + c 11^T / J) for |n|,|m| <= 2.
struct CaseBModel {
    ChannelSpectralData s;
    ThresholdCatalog cat;
    ThresholdEntry entry;
    WeightScheme w{1.0};
    PotentialSpec p;

    explicit CaseBModel(int J = 6, int sign = 1, double c = 0.5)
    {
        Mat m = Mat::Zero(J, J);
        m(0, 0) = 2.0;
        s = spectral(m, Case::B);
        cat = classify_thresholds(s, Case::B);
        entry = cat.find(0.0, Side::Left);
        p.kind = Case::B;
        p.dim = J;
        p.rho = 1.0;
        p.sign = sign;
        p.K = Mat::Zero(J, J);
        for (int j = 0; j < J; ++j) p.K(j, j) = 1.0 / ((j + 1.0) * (j + 1.0));
        const Mat block = Mat::Identity(J, J) + (c / J) * Mat::Ones(J, J);
        for (int n = -2; n <= 2; ++n)
            for (int k = -2; k <= 2; ++k) p.add(n, k, (sign * std::exp(-(std::abs(n) + std::abs(k)))) * block);
    }
};

}  // namespace fx
