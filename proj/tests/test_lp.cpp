#include "dsmf/lp.hpp"

#include <gtest/gtest.h>

#include <random>

namespace dsmf {
namespace {

TEST(LpFeasible, EmptyConstraintsGiveZeroWitness)
{
    const auto w = lp_feasible(Matrix(0, 3), Vector(0));
    ASSERT_TRUE(w.has_value());
    EXPECT_TRUE(w->isZero());
}

TEST(LpFeasible, VertexForcingConstraint)
{
    Matrix a(1, 2);
    a << 1, 1;
    const auto w = lp_feasible(a, Vector::Constant(1, 2.0));
    ASSERT_TRUE(w.has_value());
    EXPECT_NEAR((*w)(0), 1.0, 1e-9);
    EXPECT_NEAR((*w)(1), 1.0, 1e-9);
}

TEST(LpFeasible, ExceedsBoxSum)
{
    Matrix a(1, 2);
    a << 1, 1;
    EXPECT_FALSE(lp_feasible(a, Vector::Constant(1, 3.0)).has_value());
}

TEST(LpFeasible, ZeroRowWithNonzeroRhsIsInfeasible)
{
    Matrix a = Matrix::Zero(1, 2);
    EXPECT_FALSE(lp_feasible(a, Vector::Constant(1, 0.5)).has_value());
    EXPECT_TRUE(lp_feasible(a, Vector::Zero(1)).has_value());
}

TEST(LpFeasible, RedundantRowsStayFeasible)
{
    Matrix a(3, 3);
    a << 1, 2, 0,
         2, 4, 0,
         0, 1, 1;
    Vector b(3);
    b << 0.5, 1.0, 0.2;
    const auto w = lp_feasible(a, b);
    ASSERT_TRUE(w.has_value());
    EXPECT_LE(detail::max_abs(a * *w - b), 1e-9);
}

TEST(BoxLp, OptimizesLinearObjective)
{
    // max xi0 + xi1 subject to xi0 - xi1 = 0.5 within the box: xi = (1, 0.5).
    Matrix a(1, 2);
    a << 1, -1;
    BoxLp lp(a, Vector::Constant(1, 0.5));
    ASSERT_TRUE(lp.feasible());
    Vector c(2);
    c << 1, 1;
    const auto sol = lp.maximize(c);
    ASSERT_TRUE(sol.has_value());
    EXPECT_NEAR(sol->objective, 1.5, 1e-9);
    const auto low = lp.minimize(c);
    EXPECT_NEAR(low->objective, -1.5, 1e-9);
}

// Random feasible systems built around a known interior point: every LP
// optimum must satisfy the rows and beat the known point's objective.
TEST(BoxLp, RandomSystemsAgainstPlantedPoint)
{
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(-0.9, 0.9);
    for (int trial = 0; trial < 200; ++trial) {
        const Index g = 2 + trial % 12;
        const Index m = trial % (g + 1);
        Matrix a(m, g);
        for (Index i = 0; i < a.size(); ++i) {
            a.data()[i] = normal(rng);
        }
        Vector planted(g);
        for (Index j = 0; j < g; ++j) {
            planted(j) = unit(rng);
        }
        const Vector b = a * planted;
        BoxLp lp(a, b);
        ASSERT_TRUE(lp.feasible()) << "trial " << trial;
        Vector c(g);
        for (Index j = 0; j < g; ++j) {
            c(j) = normal(rng);
        }
        const auto sol = lp.minimize(c);
        ASSERT_TRUE(sol.has_value());
        EXPECT_LE(sol->objective, c.dot(planted) + 1e-9);
        EXPECT_LE(detail::max_abs(a * sol->xi - b), 1e-8);
        EXPECT_LE(detail::max_abs(sol->xi), 1.0);
    }
}

// Brute-force oracle for tiny problems: enumerate vertices of the box slice
// by fixing all but m variables at bounds and solving the square system.
double brute_force_min(const Matrix& a, const Vector& b, const Vector& c, bool& feasible)
{
    const Index m = a.rows();
    const Index g = a.cols();
    double best = std::numeric_limits<double>::infinity();
    feasible = false;
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
            Matrix sq(m, m);
            for (std::size_t k = 0; k < free_vars.size(); ++k) {
                sq.col(static_cast<Index>(k)) = a.col(free_vars[k]);
            }
            const Vector rhs = b - a * x;
            Vector sol(0);
            if (m > 0) {
                Eigen::FullPivLU<Matrix> lu(sq);
                if (lu.rank() < m) {
                    continue;
                }
                sol = lu.solve(rhs);
            }
            for (std::size_t k = 0; k < free_vars.size(); ++k) {
                x(free_vars[k]) = sol(static_cast<Index>(k));
            }
            if (x.cwiseAbs().maxCoeff() <= 1.0 + 1e-12) {
                feasible = true;
                best = std::min(best, c.dot(x));
            }
        }
    }
    return best;
}

TEST(BoxLp, MatchesVertexEnumeration)
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 300; ++trial) {
        const Index g = 2 + trial % 5;
        const Index m = trial % 3 < g ? trial % 3 : 0;
        Matrix a(m, g);
        for (Index i = 0; i < a.size(); ++i) {
            a.data()[i] = normal(rng);
        }
        Vector b(m);
        for (Index i = 0; i < m; ++i) {
            b(i) = 1.5 * normal(rng);
        }
        Vector c(g);
        for (Index j = 0; j < g; ++j) {
            c(j) = normal(rng);
        }
        bool feasible = false;
        const double oracle = brute_force_min(a, b, c, feasible);
        BoxLp lp(a, b);
        ASSERT_EQ(lp.feasible(), feasible) << "trial " << trial;
        if (feasible) {
            EXPECT_NEAR(lp.minimize(c)->objective, oracle, 1e-8) << "trial " << trial;
        }
    }
}

} // namespace
} // namespace dsmf
