#pragma once

#include "dsmf/sysmodel.hpp"

#include <random>
#include <vector>

namespace dsmf::testing {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> normal(0.0, scale);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) {
        m.data()[i] = normal(rng);
    }
    return m;
}

inline Vector random_vector(Index n, std::mt19937_64& rng, double scale = 1.0)
{
    return random_matrix(n, 1, rng, scale);
}

/// Random non-empty CZ: the constraints are satisfied by a planted interior parameter.
inline ConstrainedZonotope random_cz(Index n, Index g, Index m, std::mt19937_64& rng,
                                     const Vector* center = nullptr)
{
    std::uniform_real_distribution<double> inner(-0.8, 0.8);
    const Matrix gen = random_matrix(n, g, rng);
    const Matrix a = random_matrix(m, g, rng);
    Vector planted(g);
    for (Index j = 0; j < g; ++j) {
        planted(j) = inner(rng);
    }
    const Vector c = center != nullptr ? Vector(*center - gen * planted) : random_vector(n, rng);
    return {c, gen, a, a * planted};
}

/// Vertices of { xi : |xi| <= 1, A xi = b } by fixing all but rank(A) entries
/// at bounds and solving for the rest. Exponential; tiny problems only.
inline std::vector<Vector> parameter_vertices(const Matrix& a, const Vector& b, double tol = 1e-10)
{
    const Index m = a.rows();
    const Index g = a.cols();
    std::vector<Vector> out;
    for (unsigned mask = 0; mask < (1u << g); ++mask) {
        if (static_cast<Index>(__builtin_popcount(mask)) != m) {
            continue;
        }
        std::vector<Index> free_vars;
        std::vector<Index> fixed;
        for (Index j = 0; j < g; ++j) {
            ((mask >> j) & 1u) ? free_vars.push_back(j) : fixed.push_back(j);
        }
        for (unsigned signs = 0; signs < (1u << fixed.size()); ++signs) {
            Vector x = Vector::Zero(g);
            for (std::size_t k = 0; k < fixed.size(); ++k) {
                x(fixed[k]) = ((signs >> k) & 1u) ? 1.0 : -1.0;
            }
            if (m > 0) {
                Matrix sq(m, m);
                for (std::size_t k = 0; k < free_vars.size(); ++k) {
                    sq.col(static_cast<Index>(k)) = a.col(free_vars[k]);
                }
                Eigen::FullPivLU<Matrix> lu(sq);
                if (lu.rank() < m) {
                    continue;
                }
                const Vector sol = lu.solve(b - a * x);
                for (std::size_t k = 0; k < free_vars.size(); ++k) {
                    x(free_vars[k]) = sol(static_cast<Index>(k));
                }
            }
            if (detail::max_abs(x) <= 1.0 + tol) {
                out.push_back(x);
            }
        }
    }
    return out;
}

inline double vertex_diameter(const ConstrainedZonotope& z)
{
    std::vector<Vector> pts;
    for (const Vector& xi : parameter_vertices(z.con_a(), z.con_b())) {
        pts.push_back(z.evaluate(xi));
    }
    double d = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            d = std::max(d, (pts[i] - pts[j]).norm());
        }
    }
    return d;
}

inline Matrix random_orthogonal(Index n, std::mt19937_64& rng)
{
    const Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, rng));
    return qr.householderQ() * Matrix::Identity(n, n);
}

/// A pair (A, C) with a known observable dimension: a block lower-triangular
/// system [Ao 0; A21 Aobar], C = [Co 0], expressed in a random orthogonal basis.
struct StructuredPair {
    Matrix A;
    Matrix C;
    Index n_o = 0;
};

inline StructuredPair random_structured_pair(Index n, Index n_o, Index q, std::mt19937_64& rng)
{
    Matrix a = Matrix::Zero(n, n);
    a.topLeftCorner(n_o, n_o) = random_matrix(n_o, n_o, rng, 0.6);
    a.bottomLeftCorner(n - n_o, n_o) = random_matrix(n - n_o, n_o, rng, 0.6);
    a.bottomRightCorner(n - n_o, n - n_o) = random_matrix(n - n_o, n - n_o, rng, 0.6);
    Matrix c = Matrix::Zero(q, n);
    c.leftCols(n_o) = random_matrix(q, n_o, rng);
    const Matrix t = random_orthogonal(n, rng);
    return {t.transpose() * a * t, c * t, n_o};
}

/// A small strongly connected network (one directed cycle, sometimes with a
/// chord) observing a system that has an unobservable part. A is kept well
/// conditioned because the observation-information oracles invert it.
inline Scenario random_small_scenario(std::mt19937_64& rng, int horizon)
{
    std::uniform_int_distribution<int> coin(0, 1);
    const Index n = 2 + coin(rng);
    const int sensors = 1 + std::uniform_int_distribution<int>(0, 3)(rng);
    const Index n_o = n == 2 ? 1 : 1 + coin(rng);
    StructuredPair pair;
    for (;;) {
        pair = random_structured_pair(n, n_o, sensors, rng);
        const Eigen::JacobiSVD<Matrix> svd(pair.A);
        if (svd.singularValues()(n - 1) >= 0.3) {
            break;
        }
    }
    const Index p = 1 + coin(rng);
    Scenario s;
    s.name = "random-small";
    s.plant = {pair.A, random_matrix(n, p, rng), Box::symmetric(p, 0.5)};
    for (int i = 1; i <= sensors; ++i) {
        s.sensors.push_back({i, pair.C.row(i - 1), Box::symmetric(1, 0.3)});
        s.initial_beliefs[i] = ConstrainedZonotope::from_box(Box::symmetric(n, 2.0));
    }
    std::vector<std::pair<int, int>> edges;
    for (int i = 1; sensors > 1 && i <= sensors; ++i) {
        edges.emplace_back(i, i % sensors + 1);
    }
    if (sensors >= 3 && coin(rng) == 1) {
        edges.emplace_back(1, 3);
    }
    s.graph = SensorGraph(sensors, edges);
    std::uniform_real_distribution<double> start(-1.0, 1.0);
    s.true_initial_state = Vector(n);
    for (Index j = 0; j < n; ++j) {
        s.true_initial_state(j) = start(rng);
    }
    s.horizon = horizon;
    s.seed = rng();
    return s;
}

} // namespace dsmf::testing
