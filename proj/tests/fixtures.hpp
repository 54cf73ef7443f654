#pragma once

#include "dsmf/sysmodel.hpp"

namespace dsmf::testing {

inline Matrix row(std::initializer_list<double> values)
{
    Matrix m(1, static_cast<Index>(values.size()));
    Index j = 0;
    for (double v : values) {
        m(0, j++) = v;
    }
    return m;
}

inline Matrix twelve_sensor_a()
{
    Vector d(6);
    d << 0.99, 1.01, 0.98, 1.0, 0.8, 0.9;
    return d.asDiagonal();
}

inline Matrix twelve_sensor_b(bool perturbed = false)
{
    Matrix b(6, 2);
    b << 1, 0,
         0, 1,
         1, 0,
         0, 0,
         1, 1,
         0, 1;
    if (perturbed) {
        b.row(3) << 1, 0;
    }
    return b;
}

inline std::vector<Matrix> twelve_sensor_outputs()
{
    return {row({1, 0, 0, 0, 0, 0}),    row({0, 0.86, 0, 0, 0, 0}), row({0, 1, 1.01, 0, 0, 0}),
            row({0, 0, 0, 0, 0, 0}),    row({0, 0.6, 0, 0.2, 0, 0}), row({0.95, 0, 0, 0, 0, 0}),
            row({0, 1.05, 0, 0, 0, 0}), row({0, 0, 2, 0, 0, 0}),    row({0, 0, 0, 0, 1, 0})};
}

/// The bundled two-component example built directly in code.
inline Scenario twelve_sensor_scenario(bool perturbed_b = false, int horizon = 200)
{
    Scenario s;
    s.name = "twelve-sensor";
    s.plant = {twelve_sensor_a(), twelve_sensor_b(perturbed_b), Box::symmetric(2, 1.0)};
    const auto cs = twelve_sensor_outputs();
    for (int i = 1; i <= 12; ++i) {
        SensorModel m;
        m.id = i;
        m.C = i <= 9 ? cs[static_cast<std::size_t>(i - 1)] : Matrix(0, 6);
        m.V = i <= 9 ? Box::symmetric(1, 1.0) : Box(Vector(0), Vector(0));
        s.sensors.push_back(m);
    }
    s.graph = SensorGraph(12, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 1}, {3, 1}, {6, 7}, {7, 8}, {8, 9}, {9, 6},
                               {5, 10}, {9, 11}, {10, 12}, {11, 12}});
    for (int i = 1; i <= 12; ++i) {
        s.initial_beliefs.emplace(i, ConstrainedZonotope::from_box(Box::symmetric(6, 20.0)));
    }
    s.true_initial_state = Vector::Zero(6);
    s.horizon = horizon;
    s.seed = 2024;
    return s;
}

} // namespace dsmf::testing
