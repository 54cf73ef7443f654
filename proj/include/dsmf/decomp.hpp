#pragma once

#include "dsmf/core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <vector>

namespace dsmf {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

/// Thresholds behind every rank and unit-circle decision.
struct Tolerances {
    double rank = 1e-9;         // relative to the largest singular value
    double unit_circle = 1e-7;  // on | |lambda| - 1 |
};

/// Numerical rank with the singular values on either side of the cut.
struct RankInfo {
    Index rank = 0;
    double smallest_kept = 0.0;     // 0 when rank == 0
    double largest_dropped = 0.0;   // 0 when nothing was dropped
};

/// Rank counting singular values above tol * scale; scale <= 0 means the largest
/// singular value of m itself (or 1 when m is zero).
template <class Derived>
RankInfo rank_info(const Eigen::MatrixBase<Derived>& m, double tol, double scale = 0.0)
{
    RankInfo out;
    if (m.size() == 0) {
        return out;
    }
    using Plain = typename Derived::PlainObject;
    const Eigen::JacobiSVD<Plain> svd(m.eval());
    const auto& s = svd.singularValues();
    const double cut = tol * (scale > 0.0 ? scale : (s(0) > 0.0 ? s(0) : 1.0));
    for (Index k = 0; k < s.size(); ++k) {
        if (s(k) > cut) {
            out.rank = k + 1;
            out.smallest_kept = s(k);
        } else {
            out.largest_dropped = s(k);
            break;
        }
    }
    return out;
}

/// Number of singular values above tol * sigma_max (above tol when m is zero),
/// or above tol * scale when a positive scale is given.
template <class Derived>
Index matrix_rank(const Eigen::MatrixBase<Derived>& m, double tol = Tolerances{}.rank, double scale = 0.0)
{
    return rank_info(m, tol, scale).rank;
}

/// Scale for rank decisions on shifted matrices M - lambda I: the shift can cancel
/// M almost exactly, so the cut is taken relative to M rather than to the difference.
inline double shift_scale(const Matrix& m) { return std::max(1.0, detail::max_abs(m) * std::sqrt(double(m.rows()))); }

/// col(C, C A, ..., C A^{steps-1}).
inline Matrix observability_matrix(const Matrix& a, const Matrix& c, Index steps)
{
    Matrix out(c.rows() * steps, a.cols());
    Matrix block = c;
    for (Index k = 0; k < steps; ++k) {
        out.middleRows(k * c.rows(), c.rows()) = block;
        block = block * a;
    }
    return out;
}

/// Least nu with rank col(Co, ..., Co Ao^{nu-1}) = n_o. Throws if (Ao, Co) is not observable.
inline int observability_index(const Matrix& ao, const Matrix& co, double tol = Tolerances{}.rank)
{
    detail::require(ao.rows() == ao.cols(), ErrorCode::dim_mismatch, "observability_index: Ao must be square");
    detail::require_dims(co.cols(), ao.rows(), "observability_index: Co columns");
    const Index n = ao.rows();
    for (Index nu = 0; nu <= n; ++nu) {
        if (matrix_rank(observability_matrix(ao, co, nu), tol) == n) {
            return static_cast<int>(nu);
        }
    }
    throw Error(ErrorCode::precondition, "observability_index: pair is not observable");
}

/// Orthogonal change of basis z = P x separating observable and unobservable parts:
///   P A P' = [Ao 0; A21 Aobar],  P B = [Bo; Bobar],  C P' = [Co 0].
struct ObservabilityDecomposition {
    Matrix P;
    Matrix Ao;
    Matrix A21;
    Matrix Aobar;
    Matrix Bo;
    Matrix Bobar;
    Matrix Co;
    Index n_o = 0;
    int nu = 0;
    RankInfo observability_rank;

    Index n_obar() const { return P.rows() - n_o; }
    Matrix P_o() const { return P.topRows(n_o); }
    Matrix P_obar() const { return P.bottomRows(n_obar()); }
};

inline ObservabilityDecomposition observability_decomposition(const Matrix& a, const Matrix& b, const Matrix& c,
                                                              double tol = Tolerances{}.rank)
{
    detail::require(a.rows() == a.cols(), ErrorCode::dim_mismatch, "observability_decomposition: A must be square");
    detail::require_dims(b.rows(), a.rows(), "observability_decomposition: B rows");
    detail::require_dims(c.cols(), a.rows(), "observability_decomposition: C columns");
    const Index n = a.rows();
    ObservabilityDecomposition d;
    const Matrix obs = observability_matrix(a, c, n);
    d.observability_rank = rank_info(obs, tol);
    d.n_o = d.observability_rank.rank;
    if (obs.rows() == 0) {
        d.P = Matrix::Identity(n, n);
    } else {
        const Eigen::JacobiSVD<Matrix> svd(obs, Eigen::ComputeFullV);
        d.P = svd.matrixV().transpose();
    }
    const Index no = d.n_o;
    const Index nb = n - no;
    const Matrix pap = d.P * a * d.P.transpose();
    d.Ao = pap.topLeftCorner(no, no);
    d.A21 = pap.bottomLeftCorner(nb, no);
    d.Aobar = pap.bottomRightCorner(nb, nb);
    const Matrix pb = d.P * b;
    d.Bo = pb.topRows(no);
    d.Bobar = pb.bottomRows(nb);
    d.Co = (c * d.P.transpose()).leftCols(no);
    d.nu = observability_index(d.Ao, d.Co, tol);
    return d;
}

inline ObservabilityDecomposition observability_decomposition(const Matrix& a, const Matrix& c,
                                                              double tol = Tolerances{}.rank)
{
    return observability_decomposition(a, Matrix(a.rows(), 0), c, tol);
}

/// One distinct unit-circle eigenvalue with its multiplicities.
struct UnitEigenvalue {
    Complex lambda;
    Index algebraic = 0;
    Index geometric = 0;
    bool semisimple = false;
};

struct SpectralReport {
    std::vector<Complex> eigenvalues;
    std::vector<UnitEigenvalue> unit_circle;
    double spectral_radius = 0.0;

    /// Nothing outside the closed unit disk and every unit-circle eigenvalue semisimple.
    bool marginally_stable(double unit_tol) const
    {
        if (spectral_radius > 1.0 + unit_tol) {
            return false;
        }
        for (const auto& u : unit_circle) {
            if (!u.semisimple) {
                return false;
            }
        }
        return true;
    }
};

namespace detail {

/// Groups nearby eigenvalues; each group is represented by its mean, which is far
/// more accurate than the individual members of a split defective cluster.
inline std::vector<std::pair<Complex, Index>> cluster_eigenvalues(const std::vector<Complex>& eigs, double radius)
{
    std::vector<std::pair<Complex, Index>> groups;
    std::vector<bool> used(eigs.size(), false);
    for (std::size_t a = 0; a < eigs.size(); ++a) {
        if (used[a]) {
            continue;
        }
        Complex sum = eigs[a];
        Index count = 1;
        used[a] = true;
        for (std::size_t b = a + 1; b < eigs.size(); ++b) {
            if (!used[b] && std::abs(eigs[b] - eigs[a]) <= radius) {
                used[b] = true;
                sum += eigs[b];
                ++count;
            }
        }
        groups.emplace_back(sum / static_cast<double>(count), count);
    }
    return groups;
}

inline ComplexMatrix shifted(const Matrix& m, Complex lambda)
{
    ComplexMatrix out = m.cast<Complex>();
    out.diagonal().array() -= lambda;
    return out;
}

inline std::vector<Complex> eigenvalues_of(const Matrix& m)
{
    std::vector<Complex> out;
    if (m.rows() == 0) {
        return out;
    }
    const Eigen::EigenSolver<Matrix> solver(m, false);
    detail::require(solver.info() == Eigen::Success, ErrorCode::no_convergence, "eigensolver did not converge");
    for (Index k = 0; k < m.rows(); ++k) {
        out.push_back(solver.eigenvalues()(k));
    }
    return out;
}

// Eigenvalues closer than this are treated as one repeated eigenvalue.
inline constexpr double kClusterRadius = 1e-5;

} // namespace detail

inline SpectralReport spectrum(const Matrix& m, const Tolerances& tol = {})
{
    detail::require(m.rows() == m.cols(), ErrorCode::dim_mismatch, "spectrum: matrix must be square");
    SpectralReport r;
    r.eigenvalues = detail::eigenvalues_of(m);
    for (const Complex& l : r.eigenvalues) {
        r.spectral_radius = std::max(r.spectral_radius, std::abs(l));
    }
    for (const auto& [lambda, count] : detail::cluster_eigenvalues(r.eigenvalues, detail::kClusterRadius)) {
        if (std::abs(std::abs(lambda) - 1.0) > tol.unit_circle) {
            continue;
        }
        UnitEigenvalue u;
        u.lambda = lambda;
        u.algebraic = count;
        u.geometric = m.rows() - matrix_rank(detail::shifted(m, lambda), tol.rank, shift_scale(m));
        u.semisimple = u.geometric == u.algebraic;
        r.unit_circle.push_back(u);
    }
    return r;
}

} // namespace dsmf
