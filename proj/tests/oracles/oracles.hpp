#pragma once

// Reference computations for the tests. Nothing here calls into the library.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace oracle {

using C = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

// Kernel of (Delta - z)^{-1} from the root zeta of zeta^2 - (2 - z) zeta + 1 = 0 inside the unit disk.
inline C kernel_by_root(C z, int d)
{
    const C b = 2.0 - z;
    const C s = std::sqrt(b * b - 4.0);
    C zeta = 0.5 * (b - s);
    if (std::abs(zeta) > 1.0) zeta = 0.5 * (b + s);
    return std::pow(zeta, std::abs(d)) / (1.0 / zeta - zeta);
}

inline CMat dense_truncated_laplacian(C z, int L)
{
    const int n = 2 * L + 1;
    CMat a = CMat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, i) = 2.0 - z;
        if (i > 0) a(i, i - 1) = -1.0;
        if (i + 1 < n) a(i, i + 1) = -1.0;
    }
    return a;
}

// Dense inverse of (Delta - z) on [-L, L] with Dirichlet ends.
inline CMat dense_truncated_inverse(C z, int L) { return dense_truncated_laplacian(z, L).partialPivLu().inverse(); }

// Columns m (sites in [-L, L]) of the same inverse, from one dense LU.
inline CMat dense_truncated_columns(C z, int L, const std::vector<int>& sites)
{
    CMat rhs = CMat::Zero(2 * L + 1, sites.size());
    for (size_t j = 0; j < sites.size(); ++j) rhs(sites[j] + L, j) = 1.0;
    return dense_truncated_laplacian(z, L).partialPivLu().solve(rhs);
}

inline double weight(double rho, int n)
{
    // sum_n e^{-rho |n|} = coth(rho / 2)
    return std::exp(-rho * std::abs(n) / 2.0) / std::sqrt(1.0 / std::tanh(rho / 2.0));
}

// Sparse operator Delta (x) I + I (x) M + omega V on [-L, L]; V given as site pairs with blocks.
struct Term {
    int n, m;
    CMat block;
};

inline Eigen::SparseMatrix<C> box_operator(const CMat& M, const std::vector<Term>& V, C omega, int L)
{
    const int dim = static_cast<int>(M.rows());
    const int n = (2 * L + 1) * dim;
    std::vector<Eigen::Triplet<C>> t;
    auto at = [&](int site, int a) { return (site + L) * dim + a; };
    for (int s = -L; s <= L; ++s)
        for (int a = 0; a < dim; ++a) {
            t.emplace_back(at(s, a), at(s, a), 2.0);
            if (s > -L) t.emplace_back(at(s, a), at(s - 1, a), -1.0);
            if (s < L) t.emplace_back(at(s, a), at(s + 1, a), -1.0);
            for (int b = 0; b < dim; ++b)
                if (M(a, b) != 0.0) t.emplace_back(at(s, a), at(s, b), M(a, b));
        }
    for (const auto& v : V)
        for (int a = 0; a < dim; ++a)
            for (int b = 0; b < dim; ++b)
                if (v.block(a, b) != 0.0) t.emplace_back(at(v.n, a), at(v.m, b), omega * v.block(a, b));
    Eigen::SparseMatrix<C> h(n, n);
    h.setFromTriplets(t.begin(), t.end());
    return h;
}

// w(n) w(m) (H_omega - z)^{-1}(n, m) for sites in [-P, P], solved on a box of half-width L.
inline CMat sandwiched_resolvent(const CMat& M, const std::vector<Term>& V, C omega, double rho, C z, int P, int L)
{
    const int dim = static_cast<int>(M.rows());
    Eigen::SparseMatrix<C> a = box_operator(M, V, omega, L);
    Eigen::SparseMatrix<C> shift(a.rows(), a.cols());
    shift.setIdentity();
    a -= z * shift;
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<C>> lu(a);
    const int cols = (2 * P + 1) * dim;
    CMat rhs = CMat::Zero(a.rows(), cols);
    for (int c = 0; c < cols; ++c) rhs((L - P) * dim + c, c) = 1.0;
    CMat x = lu.solve(rhs);
    CMat out = x.middleRows((L - P) * dim, cols);
    for (int r = 0; r < cols; ++r)
        for (int c = 0; c < cols; ++c) out(r, c) *= weight(rho, r / dim - P) * weight(rho, c / dim - P);
    return out;
}

inline CMat sandwiched_resolvent(const CMat& M, double rho, C z, int P, int L)
{
    return sandwiched_resolvent(M, {}, 0.0, rho, z, P, L);
}

// Eigenvalues of a Hermitian box operator, ascending.
inline Eigen::VectorXd box_eigenvalues(const CMat& M, const std::vector<Term>& V, double omega, int L)
{
    const CMat h = CMat(box_operator(M, V, omega, L));
    return Eigen::SelfAdjointEigenSolver<CMat>(h, Eigen::EigenvaluesOnly).eigenvalues();
}

// Central difference with step h.
template <class F>
CMat central_difference(F&& f, C k, double h)
{
    return (f(k + h) - f(k - h)) / (2.0 * h);
}

}  // namespace oracle
