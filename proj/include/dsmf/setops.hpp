#pragma once

/**
 * @file setops.hpp
 * @brief Boxes, strips and constrained zonotopes.
 *
 * A constrained zonotope is
 *   Z = { c + G xi : ||xi||_inf <= 1, A xi = b }.
 * Linear maps, Minkowski sums and intersections are exact; emptiness,
 * membership and interval hulls go through the box-bounded simplex in lp.hpp.
 */

#include "dsmf/core.hpp"
#include "dsmf/lp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace dsmf {

/// Axis-aligned box [lower, upper].
struct Box {
    Vector lower;
    Vector upper;

    Box() = default;

    Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi))
    {
        detail::require_dims(upper.size(), lower.size(), "Box bounds");
        for (Index j = 0; j < lower.size(); ++j) {
            detail::require(std::isfinite(lower(j)) && std::isfinite(upper(j)), ErrorCode::unbounded_box,
                            "Box bound " + std::to_string(j) + " is not finite");
            detail::require(lower(j) <= upper(j), ErrorCode::invalid_argument,
                            "Box lower bound exceeds upper bound at index " + std::to_string(j));
        }
    }

    static Box symmetric(Index dim, double radius)
    {
        return Box(Vector::Constant(dim, -radius), Vector::Constant(dim, radius));
    }

    Index dim() const { return lower.size(); }
    Vector center() const { return 0.5 * (lower + upper); }
    Vector radius() const { return 0.5 * (upper - lower); }
    Vector widths() const { return upper - lower; }

    bool contains(const Vector& x, double tol = 0.0) const
    {
        return ((x - lower).array() >= -tol).all() && ((upper - x).array() >= -tol).all();
    }
};

/// Measurement-consistent set { x : y - C x in V }. Kept symbolic: it is
/// unbounded whenever C has a non-trivial kernel.
struct Strip {
    Matrix C;
    Vector y;
    Box V;

    Strip(Matrix c, Vector y_in, Box v) : C(std::move(c)), y(std::move(y_in)), V(std::move(v))
    {
        detail::require_dims(y.size(), C.rows(), "Strip measurement");
        detail::require_dims(V.dim(), C.rows(), "Strip noise box");
    }
};

class ConstrainedZonotope {
public:
    ConstrainedZonotope() = default;

    ConstrainedZonotope(Vector center, Matrix generators, Matrix con_a, Vector con_b)
        : center_(std::move(center)), generators_(std::move(generators)), con_a_(std::move(con_a)),
          con_b_(std::move(con_b))
    {
        detail::require_dims(generators_.rows(), center_.size(), "generator rows");
        detail::require_dims(con_a_.cols(), generators_.cols(), "constraint columns");
        detail::require_dims(con_b_.size(), con_a_.rows(), "constraint right-hand side");
    }

    ConstrainedZonotope(Vector center, Matrix generators)
        : ConstrainedZonotope(std::move(center), generators, Matrix(0, generators.cols()), Vector(0))
    {
    }

    static ConstrainedZonotope point(const Vector& x) { return {x, Matrix(x.size(), 0)}; }

    static ConstrainedZonotope from_box(const Box& box)
    {
        const Vector r = box.radius();
        std::vector<Index> cols;
        for (Index j = 0; j < r.size(); ++j) {
            if (r(j) > 0.0) {
                cols.push_back(j);
            }
        }
        Matrix g = Matrix::Zero(box.dim(), static_cast<Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) {
            g(cols[k], static_cast<Index>(k)) = r(cols[k]);
        }
        return {box.center(), g};
    }

    Index dim() const { return center_.size(); }
    Index num_generators() const { return generators_.cols(); }
    Index num_constraints() const { return con_a_.rows(); }

    const Vector& center() const { return center_; }
    const Matrix& generators() const { return generators_; }
    const Matrix& con_a() const { return con_a_; }
    const Vector& con_b() const { return con_b_; }

    Vector evaluate(const Vector& xi) const { return center_ + generators_ * xi; }

private:
    Vector center_;
    Matrix generators_;
    Matrix con_a_;
    Vector con_b_;
};

using CZ = ConstrainedZonotope;

inline ConstrainedZonotope cz_linear_map(const Matrix& m, const ConstrainedZonotope& z)
{
    detail::require_dims(m.cols(), z.dim(), "cz_linear_map");
    return {m * z.center(), m * z.generators(), z.con_a(), z.con_b()};
}

inline ConstrainedZonotope cz_minkowski_sum(const ConstrainedZonotope& z1, const ConstrainedZonotope& z2)
{
    detail::require_dims(z2.dim(), z1.dim(), "cz_minkowski_sum");
    const Index g1 = z1.num_generators();
    const Index g2 = z2.num_generators();
    const Index m1 = z1.num_constraints();
    const Index m2 = z2.num_constraints();
    Matrix g(z1.dim(), g1 + g2);
    g << z1.generators(), z2.generators();
    Matrix a = Matrix::Zero(m1 + m2, g1 + g2);
    a.topLeftCorner(m1, g1) = z1.con_a();
    a.bottomRightCorner(m2, g2) = z2.con_a();
    Vector b(m1 + m2);
    b << z1.con_b(), z2.con_b();
    return {z1.center() + z2.center(), g, a, b};
}

/// Z1 x Z2 in the stacked coordinates (x1, x2).
inline ConstrainedZonotope cz_cartesian_product(const ConstrainedZonotope& z1, const ConstrainedZonotope& z2)
{
    const Index n1 = z1.dim();
    const Index n2 = z2.dim();
    const Index g1 = z1.num_generators();
    const Index g2 = z2.num_generators();
    const Index m1 = z1.num_constraints();
    const Index m2 = z2.num_constraints();
    Vector c(n1 + n2);
    c << z1.center(), z2.center();
    Matrix g = Matrix::Zero(n1 + n2, g1 + g2);
    g.topLeftCorner(n1, g1) = z1.generators();
    g.bottomRightCorner(n2, g2) = z2.generators();
    Matrix a = Matrix::Zero(m1 + m2, g1 + g2);
    a.topLeftCorner(m1, g1) = z1.con_a();
    a.bottomRightCorner(m2, g2) = z2.con_a();
    Vector b(m1 + m2);
    b << z1.con_b(), z2.con_b();
    return {c, g, a, b};
}

/// Generalized intersection: the parameters of z2 join those of z1 and the
/// two images are tied by dim() equality rows.
inline ConstrainedZonotope cz_intersect(const ConstrainedZonotope& z1, const ConstrainedZonotope& z2)
{
    detail::require_dims(z2.dim(), z1.dim(), "cz_intersect");
    const Index n = z1.dim();
    const Index g1 = z1.num_generators();
    const Index g2 = z2.num_generators();
    const Index m1 = z1.num_constraints();
    const Index m2 = z2.num_constraints();
    Matrix g = Matrix::Zero(n, g1 + g2);
    g.leftCols(g1) = z1.generators();
    Matrix a = Matrix::Zero(m1 + m2 + n, g1 + g2);
    a.topLeftCorner(m1, g1) = z1.con_a();
    a.block(m1, g1, m2, g2) = z2.con_a();
    a.bottomLeftCorner(n, g1) = z1.generators();
    a.bottomRightCorner(n, g2) = -z2.generators();
    Vector b(m1 + m2 + n);
    b << z1.con_b(), z2.con_b(), z2.center() - z1.center();
    return {z1.center(), g, a, b};
}

/// { z in Z : y - C z in V }. Each measurement row contributes one noise
/// generator (absent when the noise interval is degenerate) and one
/// equality row. All-zero rows of C carry no information and are skipped
/// when y lies in V, and turn the result empty otherwise.
inline ConstrainedZonotope cz_intersect_strip(const ConstrainedZonotope& z, const Strip& s)
{
    detail::require_dims(s.C.cols(), z.dim(), "cz_intersect_strip");
    const Vector mid = s.V.center();
    const Vector rad = s.V.radius();
    std::vector<Index> rows;
    std::vector<Index> noisy;
    bool contradiction = false;
    for (Index r = 0; r < s.C.rows(); ++r) {
        if (s.C.row(r).cwiseAbs().maxCoeff() == 0.0) {
            const double v = s.y(r);
            if (v < s.V.lower(r) || v > s.V.upper(r)) {
                contradiction = true;
            }
            continue;
        }
        rows.push_back(r);
        if (rad(r) > 0.0) {
            noisy.push_back(r);
        }
    }
    const Index g = z.num_generators();
    const Index m = z.num_constraints();
    const Index extra_g = static_cast<Index>(noisy.size());
    const Index extra_m = static_cast<Index>(rows.size()) + (contradiction ? 1 : 0);
    if (extra_m == 0) {
        return z;
    }
    Matrix gen = Matrix::Zero(z.dim(), g + extra_g);
    gen.leftCols(g) = z.generators();
    Matrix a = Matrix::Zero(m + extra_m, g + extra_g);
    a.topLeftCorner(m, g) = z.con_a();
    Vector b(m + extra_m);
    b.head(m) = z.con_b();
    Index noise_col = g;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const Index r = rows[k];
        const Index row = m + static_cast<Index>(k);
        a.block(row, 0, 1, g) = s.C.row(r) * z.generators();
        if (rad(r) > 0.0) {
            a(row, noise_col++) = rad(r);
        }
        b(row) = s.y(r) - s.C.row(r).dot(z.center()) - mid(r);
    }
    if (contradiction) {
        b(m + extra_m - 1) = 1.0;
    }
    return {z.center(), gen, a, b};
}

namespace detail {

// Membership as a box-bounded feasibility problem in [G; A] xi = [x - c; b].
// The tolerance scales with magnitude, by default the size of x and c.
inline BoxLp membership_lp(const ConstrainedZonotope& z, const Vector& x, double magnitude = -1.0)
{
    const Index n = z.dim();
    const Index m = z.num_constraints();
    Matrix a(n + m, z.num_generators());
    a << z.generators(), z.con_a();
    Vector b(n + m);
    b << x - z.center(), z.con_b();
    LpOptions o;
    o.magnitude = magnitude >= 0.0 ? magnitude : std::max(max_abs(x), max_abs(z.center()));
    return BoxLp(a, b, o);
}

} // namespace detail

inline bool cz_contains_point(const ConstrainedZonotope& z, const Vector& x)
{
    detail::require_dims(x.size(), z.dim(), "cz_contains_point");
    return detail::membership_lp(z, x).feasible();
}

inline bool cz_is_empty(const ConstrainedZonotope& z)
{
    if (z.num_constraints() == 0) {
        return false;
    }
    return !BoxLp(z.con_a(), z.con_b()).feasible();
}

/// Interval hull together with the parameter-space witnesses that attain
/// each bound: witnesses_lower[j] attains lower(j), witnesses_upper[j] upper(j).
struct HullResult {
    Box box;
    std::vector<Vector> witnesses_lower;
    std::vector<Vector> witnesses_upper;
};

inline HullResult cz_interval_hull_with_witnesses(const ConstrainedZonotope& z)
{
    const Index n = z.dim();
    HullResult out;
    out.witnesses_lower.resize(static_cast<std::size_t>(n));
    out.witnesses_upper.resize(static_cast<std::size_t>(n));
    Vector lo(n);
    Vector hi(n);
    if (z.num_constraints() == 0) {
        const Vector r = z.generators().cwiseAbs().rowwise().sum();
        lo = z.center() - r;
        hi = z.center() + r;
        for (Index j = 0; j < n; ++j) {
            Vector xi = z.generators().row(j).transpose().unaryExpr([](double v) { return v > 0 ? 1.0 : -1.0; });
            out.witnesses_upper[static_cast<std::size_t>(j)] = xi;
            out.witnesses_lower[static_cast<std::size_t>(j)] = -xi;
        }
        out.box = Box(lo, hi);
        return out;
    }
    BoxLp lp(z.con_a(), z.con_b());
    detail::require(lp.feasible(), ErrorCode::empty_set, "cz_interval_hull of an empty set");
    for (Index j = 0; j < n; ++j) {
        const Vector row = z.generators().row(j).transpose();
        auto mn = lp.minimize(row);
        auto mx = lp.maximize(row);
        lo(j) = z.center()(j) + mn->objective;
        hi(j) = z.center()(j) + mx->objective;
        if (hi(j) < lo(j)) {
            hi(j) = lo(j);
        }
        out.witnesses_lower[static_cast<std::size_t>(j)] = mn->xi;
        out.witnesses_upper[static_cast<std::size_t>(j)] = mx->xi;
    }
    out.box = Box(lo, hi);
    return out;
}

inline Box cz_interval_hull(const ConstrainedZonotope& z) { return cz_interval_hull_with_witnesses(z).box; }

/// Draws members of a fixed constrained zonotope. Phase one is solved once;
/// every extreme point is a warm-started LP over a random direction.
class CzSampler {
public:
    explicit CzSampler(const ConstrainedZonotope& z) : z_(z), lp_(z.con_a(), z.con_b())
    {
        detail::require(lp_.feasible(), ErrorCode::empty_set, "sampling from an empty set");
    }

    /// Maximizer of a random Gaussian direction.
    template <class Rng>
    Vector extreme_point(Rng& rng)
    {
        if (z_.num_generators() == 0) {
            return z_.center();
        }
        std::normal_distribution<double> normal;
        Vector d(z_.dim());
        for (Index j = 0; j < d.size(); ++j) {
            d(j) = normal(rng);
        }
        return maximizer(d);
    }

    /// Member of the set maximizing direction . x.
    Vector maximizer(const Vector& direction)
    {
        if (z_.num_generators() == 0) {
            return z_.center();
        }
        const Vector cost = z_.generators().transpose() * direction;
        auto sol = lp_.maximize(cost);
        return z_.evaluate(sol->xi);
    }

    /// The first min(count, pool) points are extreme points; the rest are
    /// random convex combinations of two of them.
    template <class Rng>
    std::vector<Vector> draw(std::size_t count, Rng& rng, std::size_t pool = 24)
    {
        std::vector<Vector> out;
        out.reserve(count);
        const std::size_t k = std::min(count, pool);
        for (std::size_t i = 0; i < k; ++i) {
            out.push_back(extreme_point(rng));
        }
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_int_distribution<std::size_t> pick(0, k == 0 ? 0 : k - 1);
        while (out.size() < count) {
            const Vector& p = out[pick(rng)];
            const Vector& q = out[pick(rng)];
            const double u = unit(rng);
            out.push_back(u * p + (1.0 - u) * q);
        }
        return out;
    }

    const ConstrainedZonotope& set() const { return z_; }

private:
    ConstrainedZonotope z_;
    BoxLp lp_;
};

/// A random member: a uniform interpolation between two random extreme points.
template <class Rng>
Vector cz_sample_point(const ConstrainedZonotope& z, Rng& rng)
{
    if (z.num_generators() == 0) {
        detail::require(!cz_is_empty(z), ErrorCode::empty_set, "cz_sample_point of an empty set");
        return z.center();
    }
    CzSampler sampler(z);
    const Vector p = sampler.extreme_point(rng);
    const Vector q = sampler.extreme_point(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    return u * p + (1.0 - u) * q;
}

struct DiameterBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// upper: norm of the interval-hull widths. lower: the largest pairwise
/// distance among the hull witnesses and `extra_directions` seeded extreme points.
inline DiameterBounds cz_diameter_bounds(const ConstrainedZonotope& z, std::size_t extra_directions = 8)
{
    const HullResult hull = cz_interval_hull_with_witnesses(z);
    DiameterBounds out;
    out.upper = hull.box.widths().norm();
    std::vector<Vector> pts;
    for (std::size_t j = 0; j < hull.witnesses_lower.size(); ++j) {
        pts.push_back(z.evaluate(hull.witnesses_lower[j]));
        pts.push_back(z.evaluate(hull.witnesses_upper[j]));
    }
    if (z.num_generators() > 0 && extra_directions > 0) {
        CzSampler sampler(z);
        std::mt19937_64 rng(0x5eedULL);
        for (std::size_t k = 0; k < extra_directions; ++k) {
            pts.push_back(sampler.extreme_point(rng));
        }
    }
    for (std::size_t a = 0; a < pts.size(); ++a) {
        for (std::size_t b = a + 1; b < pts.size(); ++b) {
            out.lower = std::max(out.lower, (pts[a] - pts[b]).norm());
        }
    }
    out.lower = std::min(out.lower, out.upper);
    return out;
}

namespace detail {

// Working copy used by the reduction routines.
struct CzParts {
    Vector c;
    Matrix g;
    Matrix a;
    Vector b;

    // Rows whose absolute sum falls below zero_row_tol are treated as identically zero.
    double zero_row_tol = 0.0;
    double rhs_scale = 0.0;

    explicit CzParts(const ConstrainedZonotope& z) : c(z.center()), g(z.generators()), a(z.con_a()), b(z.con_b())
    {
        double row_scale = 0.0;
        for (Index r = 0; r < a.rows(); ++r) {
            row_scale = std::max(row_scale, a.row(r).cwiseAbs().sum());
        }
        zero_row_tol = 1e-11 * row_scale;
        rhs_scale = max_abs(b);
    }

    ConstrainedZonotope build() const { return {c, g, a, b}; }

    void keep_columns(const std::vector<Index>& cols)
    {
        Matrix g2(g.rows(), static_cast<Index>(cols.size()));
        Matrix a2(a.rows(), static_cast<Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) {
            g2.col(static_cast<Index>(k)) = g.col(cols[k]);
            a2.col(static_cast<Index>(k)) = a.col(cols[k]);
        }
        g = std::move(g2);
        a = std::move(a2);
    }

    void drop_row(Index r)
    {
        const Index m = a.rows();
        if (r < m - 1) {
            a.block(r, 0, m - 1 - r, a.cols()) = a.bottomRows(m - 1 - r).eval();
            b.segment(r, m - 1 - r) = b.tail(m - 1 - r).eval();
        }
        a.conservativeResize(m - 1, Eigen::NoChange);
        b.conservativeResize(m - 1);
    }
};

// Tightens each parameter's interval by propagating the equality rows and
// re-parameterizes so the tightened intervals become [-1, 1]. The set is
// unchanged. Returns false when propagation proves the set empty.
inline bool rescale(CzParts& p, int sweeps = 4)
{
    const Index g = p.g.cols();
    const Index m = p.a.rows();
    if (m == 0 || g == 0) {
        return true;
    }
    Vector lo = Vector::Constant(g, -1.0);
    Vector hi = Vector::Constant(g, 1.0);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        bool changed = false;
        for (Index r = 0; r < m; ++r) {
            double min_sum = 0.0;
            double max_sum = 0.0;
            double abs_sum = 0.0;
            for (Index k = 0; k < g; ++k) {
                const double v = p.a(r, k);
                if (v == 0.0) {
                    continue;
                }
                min_sum += v > 0 ? v * lo(k) : v * hi(k);
                max_sum += v > 0 ? v * hi(k) : v * lo(k);
                abs_sum += std::abs(v);
            }
            for (Index j = 0; j < g; ++j) {
                const double v = p.a(r, j);
                if (std::abs(v) < 1e-9 * abs_sum) {
                    continue;
                }
                const double own_min = v > 0 ? v * lo(j) : v * hi(j);
                const double own_max = v > 0 ? v * hi(j) : v * lo(j);
                const double rest_min = min_sum - own_min;
                const double rest_max = max_sum - own_max;
                // Round-off margin keeps the tightening sound.
                const double margin = 1e-10 * (abs_sum + std::abs(p.b(r))) / std::abs(v);
                double new_lo = (p.b(r) - rest_max) / v;
                double new_hi = (p.b(r) - rest_min) / v;
                if (v < 0) {
                    std::swap(new_lo, new_hi);
                }
                new_lo -= margin;
                new_hi += margin;
                if (new_lo > lo(j) + 1e-9) {
                    lo(j) = new_lo;
                    changed = true;
                }
                if (new_hi < hi(j) - 1e-9) {
                    hi(j) = new_hi;
                    changed = true;
                }
                if (lo(j) > hi(j)) {
                    if (lo(j) - hi(j) > 1e-7) {
                        return false;
                    }
                    const double mid = 0.5 * (lo(j) + hi(j));
                    lo(j) = mid;
                    hi(j) = mid;
                }
            }
        }
        if (!changed) {
            break;
        }
    }
    const Vector mid = 0.5 * (lo + hi);
    const Vector rad = 0.5 * (hi - lo);
    p.c += p.g * mid;
    p.b -= p.a * mid;
    std::vector<Index> keep;
    for (Index j = 0; j < g; ++j) {
        if (rad(j) > 1e-12) {
            p.g.col(j) *= rad(j);
            p.a.col(j) *= rad(j);
            keep.push_back(j);
        }
    }
    if (static_cast<Index>(keep.size()) < g) {
        p.keep_columns(keep);
    }
    return true;
}

// Per-row scale: x-space displacement produced by a unit relaxation of the row.
inline Vector row_sensitivity(const CzParts& p)
{
    const Index m = p.a.rows();
    Vector kappa = Vector::Zero(m);
    const Vector norms = p.g.colwise().norm().transpose();
    for (Index r = 0; r < m; ++r) {
        const double row_max = max_abs(p.a.row(r));
        for (Index k = 0; k < p.a.cols(); ++k) {
            const double v = std::abs(p.a(r, k));
            if (v >= 1e-3 * row_max && v > 0.0) {
                kappa(r) = std::max(kappa(r), norms(k) / v);
            }
        }
    }
    return kappa;
}

inline void drop_entry(Vector& v, Index r)
{
    const Index m = v.size();
    if (r < m - 1) {
        v.segment(r, m - 1 - r) = v.tail(m - 1 - r).eval();
    }
    v.conservativeResize(m - 1);
}

// Removes one equality row by solving it for one parameter. The parameter's
// own box is dropped, so the result contains the input.
// kappa holds the row sensitivities; the eliminated row's entry is removed.
inline void eliminate_one_constraint(CzParts& p, Vector& kappa)
{
    const Index m = p.a.rows();
    const Index g = p.g.cols();
    const Vector gnorm = p.g.colwise().norm().transpose();
    double best_cost = std::numeric_limits<double>::infinity();
    Index best_r = -1;
    Index best_j = -1;
    for (Index r = 0; r < m; ++r) {
        const double abs_sum = p.a.row(r).cwiseAbs().sum();
        if (abs_sum <= p.zero_row_tol) {
            best_r = r;
            best_j = -1;
            best_cost = -1.0;
            break;
        }
        const double row_max = max_abs(p.a.row(r));
        for (Index j = 0; j < g; ++j) {
            const double v = std::abs(p.a(r, j));
            // Threshold pivoting keeps the update bounded.
            if (v < 0.1 * row_max) {
                continue;
            }
            const double rad = (abs_sum - v) / v;
            const double excess = std::max(0.0, std::abs(p.b(r)) / v + rad - 1.0);
            const double cost = excess * (gnorm(j) + v * kappa(r));
            if (cost < best_cost) {
                best_cost = cost;
                best_r = r;
                best_j = j;
            }
        }
    }
    if (best_r < 0) {
        return;
    }
    if (best_j < 0) {
        // A vanished row is redundant unless its right-hand side survived, which proves emptiness.
        if (std::abs(p.b(best_r)) > 1e-7 * std::max(1.0, p.rhs_scale)) {
            throw Error(ErrorCode::empty_set, "cz_reduce: a dependent constraint is inconsistent");
        }
        p.drop_row(best_r);
        drop_entry(kappa, best_r);
        return;
    }
    const double piv = p.a(best_r, best_j);
    const Eigen::RowVectorXd row = p.a.row(best_r) / piv;
    const double rhs = p.b(best_r) / piv;
    const Vector gj = p.g.col(best_j);
    p.c += gj * rhs;
    p.g.noalias() -= gj * row;
    const Vector aj = p.a.col(best_j);
    p.a.noalias() -= aj * row;
    p.b -= aj * rhs;
    p.drop_row(best_r);
    drop_entry(kappa, best_r);
    std::vector<Index> keep;
    keep.reserve(static_cast<std::size_t>(g - 1));
    for (Index j = 0; j < g; ++j) {
        if (j != best_j) {
            keep.push_back(j);
        }
    }
    p.keep_columns(keep);
}

// Order reduction in the lifted space [G; A]: the lowest-scoring generators
// are replaced by the axis-aligned box that covers them. Slicing the lifted
// outer bound at the constraint values contains the original set.
inline void box_generators(CzParts& p, Index max_gen)
{
    const Index n = p.g.rows();
    const Index m = p.a.rows();
    const Index g = p.g.cols();
    if (g <= max_gen) {
        return;
    }
    const Vector kappa = row_sensitivity(p);
    Vector score(g);
    for (Index j = 0; j < g; ++j) {
        score(j) = p.g.col(j).norm() + p.a.col(j).cwiseAbs().dot(kappa);
    }
    std::vector<Index> order(static_cast<std::size_t>(g));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return score(x) < score(y); });

    // Boxing k generators yields at most n + m new ones.
    const Index keep_count = std::max<Index>(0, max_gen - (n + m));
    const Index boxed_count = g - keep_count;
    Vector x_box = Vector::Zero(n);
    Vector c_box = Vector::Zero(m);
    for (Index k = 0; k < boxed_count; ++k) {
        const Index j = order[static_cast<std::size_t>(k)];
        x_box += p.g.col(j).cwiseAbs();
        c_box += p.a.col(j).cwiseAbs();
    }
    std::vector<Index> kept(order.begin() + boxed_count, order.end());
    std::sort(kept.begin(), kept.end());
    p.keep_columns(kept);
    std::vector<std::pair<Index, double>> new_x;
    std::vector<std::pair<Index, double>> new_c;
    for (Index i = 0; i < n; ++i) {
        if (x_box(i) > 0.0) {
            new_x.emplace_back(i, x_box(i));
        }
    }
    for (Index r = 0; r < m; ++r) {
        if (c_box(r) > 0.0) {
            new_c.emplace_back(r, c_box(r));
        }
    }
    const Index g0 = p.g.cols();
    const Index add = static_cast<Index>(new_x.size() + new_c.size());
    p.g.conservativeResize(Eigen::NoChange, g0 + add);
    p.a.conservativeResize(Eigen::NoChange, g0 + add);
    p.g.rightCols(add).setZero();
    p.a.rightCols(add).setZero();
    Index col = g0;
    for (const auto& [i, v] : new_x) {
        p.g(i, col++) = v;
    }
    for (const auto& [r, v] : new_c) {
        p.a(r, col++) = v;
    }
}

} // namespace detail

/// Outer approximation with at most max_gen generators and max_con
/// constraints. Constraints go first (eliminated by solving for one
/// parameter), then the least significant generators are boxed.
/// max_gen == dim() collapses to the exact interval hull.
///
/// When the caller knows a box containing z, passing it as bound lets the
/// result be intersected with that box (budget permitting), which keeps the
/// loss of the reduction from leaking past the box.
inline ConstrainedZonotope cz_reduce(const ConstrainedZonotope& z, Index max_gen, Index max_con,
                                     const std::optional<Box>& bound = std::nullopt)
{
    const Index n = z.dim();
    detail::require(max_gen >= n, ErrorCode::invalid_argument, "cz_reduce: max_gen must be at least the dimension");
    detail::require(max_con >= 0, ErrorCode::invalid_argument, "cz_reduce: max_con must be non-negative");
    if (z.num_generators() <= max_gen && z.num_constraints() <= max_con) {
        return z;
    }
    if (bound) {
        detail::require_dims(bound->dim(), n, "cz_reduce bound");
        if (max_gen >= 3 * n && max_con >= n) {
            return cz_intersect(cz_reduce(z, max_gen - n, max_con - n), ConstrainedZonotope::from_box(*bound));
        }
    }
    if (max_gen == n) {
        return ConstrainedZonotope::from_box(cz_interval_hull(z));
    }
    detail::CzParts p(z);
    if (!detail::rescale(p)) {
        throw Error(ErrorCode::empty_set, "cz_reduce: constraint propagation proves the set empty");
    }
    const Index con_target = std::min(max_con, max_gen - n);
    int since_rescale = 0;
    Vector kappa = detail::row_sensitivity(p);
    while (p.a.rows() > con_target) {
        const Index before = p.a.rows();
        detail::eliminate_one_constraint(p, kappa);
        if (p.a.rows() == before) {
            break;
        }
        if (++since_rescale >= 8) {
            since_rescale = 0;
            if (!detail::rescale(p, 2)) {
                throw Error(ErrorCode::empty_set, "cz_reduce: constraint propagation proves the set empty");
            }
            kappa = detail::row_sensitivity(p);
        }
    }
    // Drop parameters that no longer influence anything.
    {
        std::vector<Index> keep;
        for (Index j = 0; j < p.g.cols(); ++j) {
            if (detail::max_abs(p.g.col(j)) > 0.0 ||
                detail::max_abs(p.a.col(j)) > 0.0) {
                keep.push_back(j);
            }
        }
        if (static_cast<Index>(keep.size()) < p.g.cols()) {
            p.keep_columns(keep);
        }
    }
    detail::box_generators(p, max_gen);
    detail::require(p.c.allFinite() && p.g.allFinite() && p.a.allFinite() && p.b.allFinite(),
                    ErrorCode::ill_conditioned, "cz_reduce: non-finite values after reduction");
    return p.build();
}

} // namespace dsmf
