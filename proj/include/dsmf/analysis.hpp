#pragma once

// Outer bounds of the fused beliefs, as membership oracles and sampled
// containment checks, plus a width-growth diagnostic.

#include "dsmf/certify.hpp"
#include "dsmf/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dsmf {

/// Generator cap for the materialized verification sets.
inline constexpr Index kOracleGeneratorCap = 5000;

namespace detail {

inline Matrix matrix_power(const Matrix& a, int p)
{
    Matrix out = Matrix::Identity(a.rows(), a.cols());
    for (int j = 0; j < p; ++j) {
        out = a * out;
    }
    return out;
}

inline void require_cap(Index generators, Index cap, const std::string& what)
{
    if (cap > 0 && generators > cap) {
        throw Error(ErrorCode::growth_cap, what + " needs " + std::to_string(generators) +
                                               " generators, above the cap of " + std::to_string(cap) +
                                               "; use a smaller step");
    }
}

// Image of z under m when m is numerically zero: the box m c +- |m G| 1,
// which contains m z because dropping the constraints only enlarges z.
inline ConstrainedZonotope negligible_image(const Matrix& m, const ConstrainedZonotope& z)
{
    const Vector c = m * z.center();
    const Vector r = (m * z.generators()).cwiseAbs().rowwise().sum();
    return ConstrainedZonotope::from_box(Box(c - r, c + r));
}

inline void require_sensor(const Scenario& s, int i)
{
    require(i >= 1 && i <= s.num_sensors(), ErrorCode::invalid_argument, "sensor " + std::to_string(i) + " does not exist");
}

} // namespace detail

/// Decides x in O_{k,r}^l: some v in V_l and w_r..w_{k-1} in W satisfy
/// y_r^l = C_l A^{r-k} (x - sum A^{k-1-tau} B w_tau) + v. y overrides the
/// recorded measurement when given.
inline bool obs_info_membership(const Vector& x, int k, int r, int l, const Trajectory& t, const Scenario& s,
                                const std::optional<Vector>& y = std::nullopt)
{
    detail::require(0 <= r && r <= k, ErrorCode::precondition, "obs_info_membership needs 0 <= r <= k");
    detail::require_sensor(s, l);
    const SensorModel& sensor = s.sensor(l);
    if (sensor.num_outputs() == 0) {
        return true;
    }
    detail::require(static_cast<int>(t.measurements.size()) > r, ErrorCode::invalid_argument,
                    "trajectory has no measurement at step " + std::to_string(r));
    const Vector& yr = y ? *y : t.measurements[static_cast<std::size_t>(r)][static_cast<std::size_t>(l - 1)];
    const PlantModel& p = s.plant;
    const Index q = sensor.num_outputs();
    const Index nw = p.B.cols();
    const Matrix a_inv = p.A.inverse();
    const Matrix m = sensor.C * detail::matrix_power(a_inv, k - r);
    // y in M x + sum_tau (-M A^{k-1-tau} B) W + V.
    Vector center = m * x + sensor.V.center();
    Matrix gens(q, nw * (k - r) + q);
    gens.rightCols(q) = sensor.V.radius().asDiagonal();
    Matrix power = Matrix::Identity(p.A.rows(), p.A.cols());  // A^{k-1-tau}, tau from k-1 down to r
    for (int tau = k - 1; tau >= r; --tau) {
        const Matrix map = -m * power * p.B;
        center += map * p.W.center();
        gens.middleCols(nw * (k - 1 - tau), nw) = map * p.W.radius().asDiagonal();
        power = p.A * power;
    }
    const double magnitude = std::max(detail::max_abs(m * x), detail::max_abs(yr));
    return detail::membership_lp(ConstrainedZonotope(center, gens), yr, magnitude).feasible();
}

/// E_k^l = A^k B_l^-(x_0) + sum_{tau < k} A^{k-1-tau} B W, without reduction.
inline ConstrainedZonotope state_evo_set(int k, int l, const Scenario& s, Index cap = kOracleGeneratorCap)
{
    detail::require(k >= 0, ErrorCode::precondition, "state_evo_set needs k >= 0");
    detail::require_sensor(s, l);
    const ConstrainedZonotope& init = s.initial_beliefs.at(l);
    detail::require_cap(init.num_generators() + k * s.plant.B.cols(), cap, "state-evolution set");
    const ConstrainedZonotope noise = cz_linear_map(s.plant.B, ConstrainedZonotope::from_box(s.plant.W));
    ConstrainedZonotope e = init;
    for (int tau = 0; tau < k; ++tau) {
        e = cz_minkowski_sum(cz_linear_map(s.plant.A, e), noise);
    }
    return e;
}

inline bool state_evo_membership(const Vector& x, int k, int l, const Scenario& s, Index cap = kOracleGeneratorCap)
{
    return cz_contains_point(state_evo_set(k, l, s, cap), x);
}

/// Conjunction of O_{k,r}^l over r in [0, k - rho_tilde + 1] and l in the component.
inline bool coit_membership(const Vector& x, int k, const SourceComponent& c, const Trajectory& t, const Scenario& s)
{
    const int last = k - c.rho_tilde + 1;
    detail::require(last >= 0, ErrorCode::precondition, "coit_membership needs k >= rho_tilde - 1");
    for (int r = 0; r <= last; ++r) {
        for (int l : c.vertices) {
            if (!obs_info_membership(x, k, r, l, t, s)) {
                return false;
            }
        }
    }
    return true;
}

/// Sampled containment result. term_violations counts, per named term, the
/// sampled points falling outside it.
struct BoundCheckReport {
    std::string proposition;
    int step = 0;
    int sensor = 0;
    int component = 0;
    std::size_t checked = 0;
    std::size_t violations = 0;
    std::map<std::string, std::size_t> term_violations;

    bool passed() const { return violations == 0; }

    void record(const std::string& term) { ++term_violations[term]; }
};

enum class Fault {
    none,
    corrupt_measurement,      // one observation term uses a shifted measurement
    drop_unobservable_drive,  // the A21 and Bobar terms of the S-tilde recursion are left out
};

/// Exact (unreduced) history for the verification harness.
inline BeliefHistory exact_history(Scenario s, const Trajectory& t, int last_step, Index cap = kOracleGeneratorCap)
{
    s.reduction.enabled = false;
    FilterOptions o;
    o.keep_sets = true;
    o.compute_hulls = false;
    o.check_truth = false;
    o.generator_cap = cap;
    return run_dsmf(s, t, o, last_step);
}

/// Points of the fused belief B_i(x_k): extreme points followed by chords between them.
template <class Rng>
std::vector<Vector> sample_fused(const BeliefHistory& h, int k, int i, std::size_t count, Rng& rng)
{
    const BeliefRecord& rec = h.at(k, i);
    detail::require(rec.fused.has_value(), ErrorCode::precondition, "the history does not store fused sets");
    CzSampler sampler(*rec.fused);
    return sampler.draw(count, rng);
}

/// The component containing sensor i, or nullopt.
inline std::optional<SourceComponent> component_of(const SensorGraph& g, int i)
{
    for (const SourceComponent& c : source_components(g)) {
        if (std::find(c.vertices.begin(), c.vertices.end(), i) != c.vertices.end()) {
            return c;
        }
    }
    return std::nullopt;
}

/// Checks every point against each term of the intersection bound: O_{k,r}^l
/// for r in [0, k] and l in M_{k-r}^i, and E_k^l for l in M_k^i.
inline BoundCheckReport verify_prop1_points(const Scenario& s, const Trajectory& t, int k, int i,
                                            const std::vector<Vector>& points, Fault fault = Fault::none)
{
    detail::require_sensor(s, i);
    const auto comp = component_of(s.graph, i);
    detail::require(comp.has_value(), ErrorCode::precondition,
                    "sensor " + std::to_string(i) + " is not in a source component");
    BoundCheckReport rep;
    rep.proposition = "prop1";
    rep.step = k;
    rep.sensor = i;
    rep.component = comp->index;

    struct Term {
        int r;
        int l;
    };
    std::vector<Term> o_terms;
    for (int r = 0; r <= k; ++r) {
        for (int l : m_set(s.graph, i, k - r)) {
            o_terms.push_back({r, l});
        }
    }
    std::vector<std::pair<int, ConstrainedZonotope>> e_terms;
    for (int l : m_set(s.graph, i, k)) {
        e_terms.emplace_back(l, state_evo_set(k, l, s));
    }

    // The faulty run shifts the latest measurement of the first term that has outputs.
    std::optional<std::size_t> corrupted;
    Vector bad_y;
    if (fault == Fault::corrupt_measurement) {
        for (std::size_t j = o_terms.size(); j-- > 0;) {
            const SensorModel& m = s.sensor(o_terms[j].l);
            if (m.num_outputs() > 0) {
                corrupted = j;
                bad_y = t.measurements[static_cast<std::size_t>(o_terms[j].r)][static_cast<std::size_t>(o_terms[j].l - 1)];
                bad_y(0) += 2.0 * m.V.widths()(0) + 1.0;
                break;
            }
        }
    }

    for (const Vector& x : points) {
        bool ok = true;
        for (std::size_t j = 0; j < o_terms.size(); ++j) {
            const Term& term = o_terms[j];
            const std::optional<Vector> y = corrupted && *corrupted == j ? std::optional<Vector>(bad_y) : std::nullopt;
            if (!obs_info_membership(x, k, term.r, term.l, t, s, y)) {
                rep.record("O[k=" + std::to_string(k) + ",r=" + std::to_string(term.r) + ",l=" + std::to_string(term.l) + "]");
                ok = false;
            }
        }
        for (const auto& [l, e] : e_terms) {
            if (!cz_contains_point(e, x)) {
                rep.record("E[k=" + std::to_string(k) + ",l=" + std::to_string(l) + "]");
                ok = false;
            }
        }
        ++rep.checked;
        rep.violations += ok ? 0 : 1;
    }
    return rep;
}

template <class Rng>
BoundCheckReport verify_prop1(const Scenario& s, const Trajectory& t, const BeliefHistory& h, int k, int i,
                              std::size_t samples, Rng& rng, Fault fault = Fault::none)
{
    return verify_prop1_points(s, t, k, i, sample_fused(h, k, i, samples, rng), fault);
}

/// S-tilde_k^i built from the recorded fused beliefs B_i(x_j), j < k, without reduction.
/// Terms whose map is numerically zero are replaced by a box that contains them.
inline ConstrainedZonotope prop2_tilde_S(const Scenario& s, const BeliefHistory& h, const SourceComponent& c, int i,
                                         int k, const Tolerances& tol = {}, Fault fault = Fault::none,
                                         Index cap = kOracleGeneratorCap)
{
    detail::require_sensor(s, i);
    detail::require(k >= 0 && k <= h.horizon, ErrorCode::precondition, "prop2_tilde_S step outside the history");
    const ObservabilityDecomposition d =
        observability_decomposition(s.plant.A, s.plant.B, joint_measurement_matrix(s, c), tol.rank);
    const Index nb = d.n_obar();
    const bool drop = fault == Fault::drop_unobservable_drive;
    const Matrix a21 = drop ? Matrix::Zero(nb, d.n_o) : d.A21;
    const Matrix bob = drop ? Matrix::Zero(nb, d.Bobar.cols()) : d.Bobar;
    const double negligible = tol.rank * std::max(1.0, detail::max_abs(s.plant.A));

    auto add_image = [&](ConstrainedZonotope& acc, const Matrix& m, const ConstrainedZonotope& z) {
        if (detail::max_abs(m) <= negligible) {
            acc = cz_minkowski_sum(acc, detail::negligible_image(m, z));
        } else {
            acc = cz_minkowski_sum(acc, cz_linear_map(m, z));
        }
        detail::require_cap(acc.num_generators(), cap, "S-tilde set");
    };

    const Matrix pobar = d.P_obar();
    const Matrix po = d.P_o();
    ConstrainedZonotope out = ConstrainedZonotope::point(Vector::Zero(nb));
    add_image(out, detail::matrix_power(d.Aobar, k) * pobar, s.initial_beliefs.at(i));
    const ConstrainedZonotope w = ConstrainedZonotope::from_box(s.plant.W);
    for (int j = 0; j < k; ++j) {
        const BeliefRecord& rec = h.at(j, i);
        detail::require(rec.fused.has_value(), ErrorCode::precondition, "the history does not store fused sets");
        const Matrix decay = detail::matrix_power(d.Aobar, k - 1 - j);
        add_image(out, decay * a21 * po, *rec.fused);
        add_image(out, decay * bob, w);
    }
    return out;
}

/// Checks every point x against x in C_k^{(t)} and P_obar x in S-tilde_k^i.
inline BoundCheckReport verify_prop2_points(const Scenario& s, const Trajectory& t, const BeliefHistory& h, int k,
                                            int i, const std::vector<Vector>& points, Fault fault = Fault::none,
                                            const Tolerances& tol = {})
{
    detail::require_sensor(s, i);
    const auto comp = component_of(s.graph, i);
    detail::require(comp.has_value(), ErrorCode::precondition,
                    "sensor " + std::to_string(i) + " is not in a source component");
    detail::require(k > comp->rho_tilde, ErrorCode::precondition,
                    "the decomposition bound needs k > " + std::to_string(comp->rho_tilde));
    BoundCheckReport rep;
    rep.proposition = "prop2";
    rep.step = k;
    rep.sensor = i;
    rep.component = comp->index;
    const ConstrainedZonotope tilde_s = prop2_tilde_S(s, h, *comp, i, k, tol, fault);
    const Matrix pobar =
        observability_decomposition(s.plant.A, s.plant.B, joint_measurement_matrix(s, *comp), tol.rank).P_obar();
    for (const Vector& x : points) {
        bool ok = true;
        if (!coit_membership(x, k, *comp, t, s)) {
            rep.record("COIT[k=" + std::to_string(k) + "]");
            ok = false;
        }
        if (pobar.rows() > 0 && !cz_contains_point(tilde_s, pobar * x)) {
            rep.record("S[k=" + std::to_string(k) + ",i=" + std::to_string(i) + "]");
            ok = false;
        }
        ++rep.checked;
        rep.violations += ok ? 0 : 1;
    }
    return rep;
}

template <class Rng>
BoundCheckReport verify_prop2(const Scenario& s, const Trajectory& t, const BeliefHistory& h, int k, int i,
                              std::size_t samples, Rng& rng, Fault fault = Fault::none, const Tolerances& tol = {})
{
    return verify_prop2_points(s, t, h, k, i, sample_fused(h, k, i, samples, rng), fault, tol);
}

/// Inclusive step range.
struct StepWindow {
    int first = 0;
    int last = 0;
};

struct WidthRatio {
    int sensor = 0;
    Index dim = 0;  // 1-based
    double early_max = 0.0;
    double tail_max = 0.0;
    double ratio = 1.0;
    bool growing = false;
};

struct BoundednessReport {
    StepWindow early;
    StepWindow tail;
    double threshold = 1.5;
    std::vector<WidthRatio> rows;

    const WidthRatio& at(int sensor, Index dim) const
    {
        for (const WidthRatio& r : rows) {
            if (r.sensor == sensor && r.dim == dim) {
                return r;
            }
        }
        throw Error(ErrorCode::invalid_argument,
                    "no diagnostic row for sensor " + std::to_string(sensor) + ", dim " + std::to_string(dim));
    }

    std::string csv() const
    {
        std::ostringstream os;
        os.precision(17);
        os << "sensor,dim,early_max,tail_max,ratio,flag\n";
        for (const WidthRatio& r : rows) {
            os << r.sensor << ',' << r.dim << ',' << r.early_max << ',' << r.tail_max << ',' << r.ratio << ','
               << (r.growing ? "GROWING" : "BOUNDED") << '\n';
        }
        return os.str();
    }
};

/// Largest fused hull width per sensor and dimension over each window, and
/// their ratio. A ratio above the threshold is flagged as growing.
inline BoundednessReport boundedness_diagnostic(const BeliefHistory& h, StepWindow early, StepWindow tail,
                                                double threshold = 1.5)
{
    auto check = [&](const StepWindow& w, const char* name) {
        detail::require(0 <= w.first && w.first <= w.last && w.last <= h.horizon, ErrorCode::precondition,
                        std::string(name) + " window is outside the history");
    };
    check(early, "early");
    check(tail, "tail");
    BoundednessReport rep{early, tail, threshold, {}};
    for (int i = 1; i <= h.num_sensors; ++i) {
        const BeliefRecord& first = h.at(early.first, i);
        detail::require(first.hull.has_value(), ErrorCode::precondition, "the history has no hulls");
        const Index n = first.hull->dim();
        for (Index d = 0; d < n; ++d) {
            auto window_max = [&](const StepWindow& w) {
                double m = 0.0;
                for (int k = w.first; k <= w.last; ++k) {
                    m = std::max(m, h.at(k, i).hull->widths()(d));
                }
                return m;
            };
            WidthRatio r;
            r.sensor = i;
            r.dim = d + 1;
            r.early_max = window_max(early);
            r.tail_max = window_max(tail);
            r.ratio = r.early_max > 0.0 ? r.tail_max / r.early_max
                      : r.tail_max > 0.0 ? std::numeric_limits<double>::infinity()
                                         : 1.0;
            r.growing = r.ratio > threshold;
            rep.rows.push_back(r);
        }
    }
    return rep;
}

} // namespace dsmf
