#pragma once

#include "dsmf/graph.hpp"
#include "dsmf/setops.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace dsmf {

/// x_{k+1} = A x_k + B w_k with w_k in W.
struct PlantModel {
    Matrix A;
    Matrix B;
    Box W;

    Index state_dim() const { return A.rows(); }

    void validate() const
    {
        detail::require(A.rows() == A.cols() && A.rows() > 0, ErrorCode::dim_mismatch, "A must be square and non-empty");
        detail::require_dims(B.rows(), A.rows(), "B rows");
        detail::require_dims(W.dim(), B.cols(), "process noise box");
        const Eigen::JacobiSVD<Matrix> svd(A);
        const Vector& s = svd.singularValues();
        detail::require(s(s.size() - 1) > 1e-12 * std::max(1.0, s(0)), ErrorCode::singular_a,
                        "A is singular (smallest singular value " + std::to_string(s(s.size() - 1)) + ")");
    }
};

/// y_k = C x_k + v_k with v_k in V. A sensor without measurements has q = 0 rows.
struct SensorModel {
    int id = 0;
    Matrix C;
    Box V;

    Index num_outputs() const { return C.rows(); }
};

/// Order-reduction budgets. Zero means the default (20 n generators, 10 n constraints);
/// `enabled == false` keeps every belief exact.
struct ReductionBudget {
    Index max_gen = 0;
    Index max_con = 0;
    bool enabled = true;

    Index generators(Index n) const { return max_gen > 0 ? max_gen : 20 * n; }
    Index constraints(Index n) const { return max_con > 0 ? max_con : 10 * n; }
};

struct Scenario {
    std::string name;
    PlantModel plant;
    std::vector<SensorModel> sensors;  // sensors[i - 1] has id i
    SensorGraph graph;
    std::map<int, ConstrainedZonotope> initial_beliefs;
    Vector true_initial_state;
    int horizon = 0;
    std::uint64_t seed = 0;
    ReductionBudget reduction;

    int num_sensors() const { return static_cast<int>(sensors.size()); }
    Index state_dim() const { return plant.state_dim(); }
    const SensorModel& sensor(int id) const { return sensors.at(static_cast<std::size_t>(id - 1)); }

    /// Structural checks plus the soundness precondition x_0 in every initial belief.
    void validate() const
    {
        plant.validate();
        const Index n = state_dim();
        detail::require(graph.num_sensors() == num_sensors(), ErrorCode::dim_mismatch,
                        "graph has " + std::to_string(graph.num_sensors()) + " vertices but there are " +
                            std::to_string(num_sensors()) + " sensors");
        for (std::size_t k = 0; k < sensors.size(); ++k) {
            const SensorModel& s = sensors[k];
            detail::require(s.id == static_cast<int>(k) + 1, ErrorCode::invalid_argument,
                            "sensor ids must be 1..N in order");
            detail::require_dims(s.C.cols(), n, "sensor " + std::to_string(s.id) + " C columns");
            detail::require_dims(s.V.dim(), s.C.rows(), "sensor " + std::to_string(s.id) + " noise box");
        }
        detail::require(horizon >= 0, ErrorCode::invalid_argument, "horizon must be non-negative");
        detail::require_dims(true_initial_state.size(), n, "true initial state");
        for (int i = 1; i <= num_sensors(); ++i) {
            const auto it = initial_beliefs.find(i);
            detail::require(it != initial_beliefs.end(), ErrorCode::invalid_argument,
                            "missing initial belief for sensor " + std::to_string(i));
            detail::require_dims(it->second.dim(), n, "initial belief of sensor " + std::to_string(i));
            detail::require(cz_contains_point(it->second, true_initial_state), ErrorCode::precondition,
                            "true initial state is outside the initial belief of sensor " + std::to_string(i));
        }
    }
};

/// Ground truth. measurements[k][i - 1] is y_k^i for k = 0..K.
struct Trajectory {
    std::vector<Vector> states;
    std::vector<Vector> process_noises;
    std::vector<std::vector<Vector>> measurements;
    std::vector<std::vector<Vector>> measurement_noises;
};

namespace detail {

template <class Rng>
Vector uniform_in(const Box& box, Rng& rng)
{
    Vector x(box.dim());
    for (Index j = 0; j < x.size(); ++j) {
        std::uniform_real_distribution<double> u(box.lower(j), box.upper(j));
        x(j) = box.lower(j) == box.upper(j) ? box.lower(j) : u(rng);
    }
    return x;
}

} // namespace detail

/// Rebuilds states and measurements from stored noise realizations.
inline Trajectory replay(const Scenario& s, const std::vector<Vector>& process_noises,
                         const std::vector<std::vector<Vector>>& measurement_noises)
{
    Trajectory t;
    t.process_noises = process_noises;
    t.measurement_noises = measurement_noises;
    t.states.push_back(s.true_initial_state);
    for (int k = 0; k <= s.horizon; ++k) {
        const Vector& x = t.states.back();
        std::vector<Vector> ys;
        for (const SensorModel& sensor : s.sensors) {
            ys.push_back(sensor.C * x + measurement_noises[static_cast<std::size_t>(k)][static_cast<std::size_t>(sensor.id - 1)]);
        }
        t.measurements.push_back(std::move(ys));
        if (k < s.horizon) {
            t.states.push_back(s.plant.A * x + s.plant.B * process_noises[static_cast<std::size_t>(k)]);
        }
    }
    return t;
}

/// Uniform independent noises from one seeded stream in the order
/// w_0, v_0^1..v_0^N, w_1, v_1^1..v_1^N, ..., v_K^1..v_K^N.
inline Trajectory simulate_truth(const Scenario& s)
{
    s.validate();
    std::mt19937_64 rng(s.seed);
    std::vector<Vector> w;
    std::vector<std::vector<Vector>> v;
    for (int k = 0; k <= s.horizon; ++k) {
        if (k < s.horizon) {
            w.push_back(detail::uniform_in(s.plant.W, rng));
        }
        std::vector<Vector> vk;
        for (const SensorModel& sensor : s.sensors) {
            vk.push_back(detail::uniform_in(sensor.V, rng));
        }
        v.push_back(std::move(vk));
    }
    return replay(s, w, v);
}

/// Members' C_i stacked in ascending id order; sensors with q = 0 add no rows.
inline Matrix joint_measurement_matrix(const Scenario& s, const SourceComponent& c)
{
    Index rows = 0;
    for (int v : c.vertices) {
        rows += s.sensor(v).num_outputs();
    }
    Matrix out(rows, s.state_dim());
    Index r = 0;
    for (int v : c.vertices) {
        const Matrix& cv = s.sensor(v).C;
        out.middleRows(r, cv.rows()) = cv;
        r += cv.rows();
    }
    return out;
}

} // namespace dsmf
