#pragma once

#include "dsmf/sysmodel.hpp"

#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dsmf {

namespace detail {

inline ConstrainedZonotope maybe_reduce(const ConstrainedZonotope& z, const ReductionBudget& budget,
                                        const std::optional<Box>& bound = std::nullopt)
{
    if (!budget.enabled) {
        return z;
    }
    return cz_reduce(z, budget.generators(z.dim()), budget.constraints(z.dim()), bound);
}

// Widens a box by a relative margin that covers LP round-off in its bounds.
inline Box padded(const Box& b, double rel = 1e-8)
{
    const Vector pad = rel * (Vector::Ones(b.dim()) + b.lower.cwiseAbs().cwiseMax(b.upper.cwiseAbs()));
    return Box(b.lower - pad, b.upper + pad);
}

// Interval enclosure of A X + B W for a box X.
inline Box interval_image(const PlantModel& plant, const Box& x)
{
    const Vector c = plant.A * x.center() + plant.B * plant.W.center();
    const Vector r = plant.A.cwiseAbs() * x.radius() + plant.B.cwiseAbs() * plant.W.radius();
    return Box(c - r, c + r);
}

// Intersection of boxes that are known to share a point; round-off overlap
// failures collapse to the midpoint.
inline Box meet(const std::vector<Box>& boxes)
{
    Vector lo = boxes.front().lower;
    Vector hi = boxes.front().upper;
    for (const Box& b : boxes) {
        lo = lo.cwiseMax(b.lower);
        hi = hi.cwiseMin(b.upper);
    }
    for (Index j = 0; j < lo.size(); ++j) {
        if (lo(j) > hi(j)) {
            const double gap = lo(j) - hi(j);
            require(gap <= 1e-7 * (1.0 + std::abs(lo(j))), ErrorCode::empty_set,
                    "interval hulls of the fused beliefs are disjoint");
            lo(j) = hi(j) = 0.5 * (lo(j) + hi(j));
        }
    }
    return Box(lo, hi);
}

inline std::string format_vector(const Vector& v)
{
    std::ostringstream os;
    os.precision(17);
    os << '[';
    for (Index j = 0; j < v.size(); ++j) {
        os << (j > 0 ? ", " : "") << v(j);
    }
    os << ']';
    return os.str();
}

} // namespace detail

/// A b + B W, reduced under the budget. b_hull, when given, must contain b.
inline ConstrainedZonotope predict(const ConstrainedZonotope& b, const PlantModel& plant,
                                   const ReductionBudget& budget = {}, const std::optional<Box>& b_hull = std::nullopt)
{
    const ConstrainedZonotope noise = cz_linear_map(plant.B, ConstrainedZonotope::from_box(plant.W));
    std::optional<Box> bound;
    if (b_hull) {
        bound = detail::padded(detail::interval_image(plant, *b_hull));
    }
    return detail::maybe_reduce(cz_minkowski_sum(cz_linear_map(plant.A, b), noise), budget, bound);
}

/// prior intersected with the measurement strip; a sensor without outputs returns the prior.
inline ConstrainedZonotope local_update(const ConstrainedZonotope& prior, const SensorModel& sensor, const Vector& y)
{
    detail::require_dims(y.size(), sensor.num_outputs(), "measurement of sensor " + std::to_string(sensor.id));
    if (sensor.num_outputs() == 0) {
        return prior;
    }
    return cz_intersect_strip(prior, Strip(sensor.C, y, sensor.V));
}

/// own intersected with every neighbour posterior in order, reduced under the budget.
/// hulls, when given, holds a containing box for own followed by one per neighbour.
inline ConstrainedZonotope fuse(const ConstrainedZonotope& own, const std::vector<ConstrainedZonotope>& neighbors,
                                const ReductionBudget& budget = {}, const std::vector<Box>& hulls = {})
{
    if (neighbors.empty()) {
        return own;
    }
    ConstrainedZonotope out = own;
    for (const auto& z : neighbors) {
        out = cz_intersect(out, z);
    }
    std::optional<Box> bound;
    if (!hulls.empty()) {
        detail::require(hulls.size() == neighbors.size() + 1, ErrorCode::dim_mismatch,
                        "fuse: one hull per input set is required");
        bound = detail::padded(detail::meet(hulls));
    }
    return detail::maybe_reduce(out, budget, bound);
}

struct FilterOptions {
    bool keep_sets = false;        // store prior / posterior / fused sets
    bool compute_hulls = true;     // interval hull of every fused belief
    bool posterior_hulls = false;  // interval hull of every local posterior as well
    bool check_truth = true;       // membership of x_k in every fused belief
    Index generator_cap = 0;       // abort when a fused belief exceeds this many generators (0: no cap)
};

struct BeliefRecord {
    std::optional<ConstrainedZonotope> prior;
    std::optional<ConstrainedZonotope> posterior;
    std::optional<ConstrainedZonotope> fused;
    std::optional<Box> hull;            // of the fused belief
    std::optional<Box> posterior_hull;
    double diameter_upper = 0.0;        // norm of the fused hull widths
    bool truth_contained = true;
    Index generators = 0;
    Index constraints = 0;
};

struct BeliefHistory {
    int horizon = 0;
    int num_sensors = 0;
    std::vector<std::vector<BeliefRecord>> records;  // records[k][i - 1]

    const BeliefRecord& at(int k, int i) const
    {
        return records.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(i - 1));
    }

    /// Number of (k, i) pairs whose fused belief misses the true state.
    int truth_violations() const
    {
        int count = 0;
        for (const auto& row : records) {
            for (const auto& r : row) {
                count += r.truth_contained ? 0 : 1;
            }
        }
        return count;
    }
};

/// Synchronous rounds of predict (k > 0), local update, and fusion over M_0^i,
/// using the same-round posteriors of the 1-hop predecessors. With reduction
/// enabled, interval hulls of the posteriors and of the fused beliefs bound the
/// reductions.
inline BeliefHistory run_dsmf(const Scenario& s, const Trajectory& t, const FilterOptions& options = {},
                              int last_step = -1)
{
    s.validate();
    const int horizon = last_step < 0 ? s.horizon : std::min(last_step, s.horizon);
    detail::require(static_cast<int>(t.measurements.size()) > horizon, ErrorCode::invalid_argument,
                    "trajectory is shorter than the horizon");
    const int n_sensors = s.num_sensors();
    const bool bounded = s.reduction.enabled;
    BeliefHistory h;
    h.horizon = horizon;
    h.num_sensors = n_sensors;
    std::vector<ConstrainedZonotope> fused(static_cast<std::size_t>(n_sensors));
    std::vector<std::optional<Box>> fused_hulls(static_cast<std::size_t>(n_sensors));
    for (int k = 0; k <= horizon; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        std::vector<BeliefRecord> row(static_cast<std::size_t>(n_sensors));
        std::vector<ConstrainedZonotope> posteriors;
        std::vector<Box> post_hulls;
        for (int i = 1; i <= n_sensors; ++i) {
            const auto iu = static_cast<std::size_t>(i - 1);
            const std::string where = "step " + std::to_string(k) + ", sensor " + std::to_string(i);
            const ConstrainedZonotope prior =
                k == 0 ? s.initial_beliefs.at(i) : predict(fused[iu], s.plant, s.reduction, fused_hulls[iu]);
            posteriors.push_back(local_update(prior, s.sensor(i), t.measurements[ku][iu]));
            if (bounded || options.posterior_hulls) {
                try {
                    post_hulls.push_back(cz_interval_hull(posteriors.back()));
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::empty_set) {
                        throw;
                    }
                    throw Error(ErrorCode::empty_belief, where + ": posterior is empty; measurement y = " +
                                                             detail::format_vector(t.measurements[ku][iu]));
                }
            }
            if (options.posterior_hulls) {
                row[iu].posterior_hull = post_hulls.back();
            }
            if (options.keep_sets) {
                row[iu].prior = prior;
                row[iu].posterior = posteriors.back();
            }
        }
        for (int i = 1; i <= n_sensors; ++i) {
            const auto iu = static_cast<std::size_t>(i - 1);
            std::vector<ConstrainedZonotope> incoming;
            std::vector<Box> hulls;
            if (bounded) {
                hulls.push_back(post_hulls[iu]);
            }
            for (int j : s.graph.senders(i)) {
                incoming.push_back(posteriors[static_cast<std::size_t>(j - 1)]);
                if (bounded) {
                    hulls.push_back(post_hulls[static_cast<std::size_t>(j - 1)]);
                }
            }
            const std::string where = "step " + std::to_string(k) + ", sensor " + std::to_string(i);
            try {
                fused[iu] = fuse(posteriors[iu], incoming, s.reduction, hulls);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::empty_set) {
                    throw;
                }
                throw Error(ErrorCode::empty_belief, where + ": fused belief is empty (" + e.message() + ")");
            }
            if (options.generator_cap > 0 && fused[iu].num_generators() > options.generator_cap) {
                throw Error(ErrorCode::growth_cap, where + ": fused belief has " +
                                                       std::to_string(fused[iu].num_generators()) +
                                                       " generators, above the cap of " +
                                                       std::to_string(options.generator_cap) + "; use a smaller step");
            }
            BeliefRecord& rec = row[iu];
            rec.generators = fused[iu].num_generators();
            rec.constraints = fused[iu].num_constraints();
            if (options.check_truth) {
                rec.truth_contained = cz_contains_point(fused[iu], t.states[ku]);
            }
            if (options.check_truth && !rec.truth_contained && cz_is_empty(fused[iu])) {
                throw Error(ErrorCode::empty_belief, where + ": fused belief is empty; measurement y = " +
                                                         detail::format_vector(t.measurements[ku][iu]));
            }
            fused_hulls[iu].reset();
            if (options.compute_hulls || bounded) {
                try {
                    fused_hulls[iu] = cz_interval_hull(fused[iu]);
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::empty_set) {
                        throw;
                    }
                    throw Error(ErrorCode::empty_belief, where + ": fused belief is empty; measurement y = " +
                                                             detail::format_vector(t.measurements[ku][iu]));
                }
            }
            if (options.compute_hulls) {
                rec.hull = fused_hulls[iu];
                rec.diameter_upper = rec.hull->widths().norm();
            }
            if (options.keep_sets) {
                rec.fused = fused[iu];
            }
        }
        h.records.push_back(std::move(row));
    }
    return h;
}

} // namespace dsmf
