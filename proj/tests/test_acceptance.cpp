// Acceptance checks. Prints one PASS/FAIL line per criterion.
//
//   test_acceptance [--only N]... [--expect-fail N]...
//
// Exits nonzero when a criterion fails that is not listed with --expect-fail,
// or when a listed criterion passes.

#include "dsmf/report.hpp"

#include "fixtures.hpp"
#include "support.hpp"

#include <Eigen/QR>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace dsmf;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scenario_path(const char* name) { return fs::path(DSMF_SOURCE_DIR) / "scenarios" / name; }

struct FilterRun {
    ScenarioFile file;
    Trajectory truth;
    BeliefHistory history;
    double seconds = 0.0;
};

FilterRun run_file(const char* name)
{
    FilterRun r;
    r.file = load_scenario(scenario_path(name).string());
    const auto t0 = std::chrono::steady_clock::now();
    r.truth = simulate_truth(r.file.scenario);
    r.history = run_dsmf(r.file.scenario, r.truth);
    r.seconds = seconds_since(t0);
    return r;
}

class Context {
public:
    const FilterRun& nominal()
    {
        if (!nominal_) {
            nominal_ = run_file("twelve_sensor.scenario");
        }
        return *nominal_;
    }

    const FilterRun& perturbed()
    {
        if (!perturbed_) {
            perturbed_ = run_file("twelve_sensor_perturbed_b.scenario");
        }
        return *perturbed_;
    }

private:
    std::optional<FilterRun> nominal_;
    std::optional<FilterRun> perturbed_;
};

double mean_width(const BeliefHistory& h, int i, Index dim, int first, int last)
{
    double sum = 0.0;
    for (int k = first; k <= last; ++k) {
        sum += h.at(k, i).hull->widths()(dim - 1);
    }
    return sum / (last - first + 1);
}

Outcome soundness(Context& ctx)
{
    const FilterRun& r = ctx.nominal();
    const BeliefHistory& h = r.history;
    std::size_t checks = 0;
    for (const auto& row : h.records) {
        checks += row.size();
    }
    const int violations = h.truth_violations();
    const std::size_t expected = static_cast<std::size_t>(h.num_sensors) * static_cast<std::size_t>(h.horizon + 1);
    Outcome o;
    o.pass = h.horizon == 200 && checks == expected && violations == 0 && r.seconds < 120.0;
    o.detail = std::to_string(violations) + " violations in " + std::to_string(checks) + " checks, " +
               fmt(r.seconds) + " s";
    return o;
}

Outcome bounded_widths(Context& ctx)
{
    const BeliefHistory& h = ctx.nominal().history;
    const BoundednessReport b = boundedness_diagnostic(h, {50, 100}, {150, 200});
    std::vector<std::pair<int, Index>> cells;
    for (int i : {1, 3, 5}) {
        for (Index d = 1; d <= 3; ++d) {
            cells.emplace_back(i, d);
        }
    }
    cells.emplace_back(7, 4);
    Outcome o;
    double worst = 0.0;
    std::string where;
    for (const auto& [i, d] : cells) {
        const WidthRatio& w = b.at(i, d);
        if (!(w.ratio <= 1.5)) {
            o.pass = false;
        }
        if (!(w.ratio <= worst)) {
            worst = w.ratio;
            where = "sensor " + std::to_string(i) + " dim " + std::to_string(d);
        }
    }
    const WidthRatio& s7 = b.at(7, 4);
    o.detail = "largest ratio " + fmt(worst) + " (" + where + "); sensor 7 dim 4 ratio " + fmt(s7.ratio) +
               ", tail max " + fmt(s7.tail_max);
    return o;
}

Outcome sensor_ordering(Context& ctx)
{
    const BeliefHistory& h = ctx.nominal().history;
    Outcome o;
    std::ostringstream os;
    for (Index d = 1; d <= 3; ++d) {
        const double w5 = mean_width(h, 5, d, 100, 200);
        const double w1 = mean_width(h, 1, d, 100, 200);
        const double w3 = mean_width(h, 3, d, 100, 200);
        o.pass = o.pass && w5 >= 0.95 * w1 && w5 >= 0.95 * w3;
        os << (d > 1 ? "; " : "") << "dim " << d << ": s5 " << fmt(w5) << ", s1 " << fmt(w1) << ", s3 " << fmt(w3);
    }
    o.detail = os.str();
    return o;
}

const ComponentCertificate& component_with(const CertificateReport& r, int sensor)
{
    for (const ComponentCertificate& c : r.components) {
        if (std::find(c.component.vertices.begin(), c.component.vertices.end(), sensor) != c.component.vertices.end()) {
            return c;
        }
    }
    throw Error(ErrorCode::invalid_argument, "sensor " + std::to_string(sensor) + " is in no source component");
}

Outcome certifier(Context&)
{
    const ScenarioFile nominal = load_scenario(scenario_path("twelve_sensor.scenario").string());
    const ScenarioFile perturbed = load_scenario(scenario_path("twelve_sensor_perturbed_b.scenario").string());
    const CertificateReport r = certify_network(nominal.scenario, nominal.tolerances);
    const CertificateReport p = certify_network(perturbed.scenario, perturbed.tolerances);
    const ComponentCertificate& c1 = component_with(r, 1);
    const ComponentCertificate& c2 = component_with(r, 7);
    const ComponentCertificate& p2 = component_with(p, 7);
    Outcome o;
    o.pass = c1.verdict == Verdict::detectable && c1.detectability.detectable && !c2.detectability.detectable &&
             c2.theorem1.condition_i && c2.theorem1.condition_ii && c2.verdict == Verdict::theorem1_bounded &&
             p2.theorem1.condition_i && !p2.theorem1.condition_ii && p2.verdict == Verdict::uncertified;
    std::ostringstream os;
    os << std::boolalpha << "component 1 " << to_string(c1.verdict) << "; component 2 detectable "
       << c2.detectability.detectable << ", cond i " << c2.theorem1.condition_i << ", cond ii "
       << c2.theorem1.condition_ii << "; perturbed cond ii " << p2.theorem1.condition_ii << " ("
       << to_string(p2.verdict) << ")";
    o.detail = os.str();
    return o;
}

Outcome growth_control(Context& ctx)
{
    const BeliefHistory& h = ctx.perturbed().history;
    const double w10 = h.at(10, 7).hull->widths()(3);
    const double w200 = h.at(200, 7).hull->widths()(3);
    Outcome o;
    o.pass = w200 > 10.0 * w10;
    o.detail = "sensor 7 dim 4 width " + fmt(w10) + " at k=10, " + fmt(w200) + " at k=200, ratio " +
               fmt(w200 / w10) + " (needs > 10)";
    return o;
}

struct PropTally {
    std::size_t checked = 0;
    std::size_t violations = 0;
    std::size_t fault_violations = 0;

    void add(const BoundCheckReport& clean, const BoundCheckReport& faulty)
    {
        checked += clean.checked;
        violations += clean.violations;
        fault_violations += faulty.violations;
    }
};

// Prop 1 and Prop 2 checks for each listed sensor at step k on shared samples.
void check_props(const Scenario& s, const Tolerances& tol, int k, const std::vector<int>& sensors,
                 std::size_t samples, std::mt19937_64& rng, PropTally& p1, PropTally& p2)
{
    const Trajectory t = simulate_truth(s);
    const BeliefHistory h = exact_history(s, t, k);
    for (int i : sensors) {
        const auto points = sample_fused(h, k, i, samples, rng);
        p1.add(verify_prop1_points(s, t, k, i, points), verify_prop1_points(s, t, k, i, points, Fault::corrupt_measurement));
        const auto c = component_of(s.graph, i);
        if (!c || k > c->rho_tilde) {
            p2.add(verify_prop2_points(s, t, h, k, i, points, Fault::none, tol),
                   verify_prop2_points(s, t, h, k, i, points, Fault::drop_unobservable_drive, tol));
        }
    }
}

std::string tally_text(const char* name, const PropTally& p)
{
    return std::string(name) + " " + std::to_string(p.violations) + "/" + std::to_string(p.checked) +
           " clean, " + std::to_string(p.fault_violations) + " with fault";
}

Outcome proposition_harness(Context&)
{
    constexpr std::size_t samples = 200;
    constexpr int random_step = 4;
    constexpr int network_step = 5;
    std::mt19937_64 rng(2024);
    PropTally r1;
    PropTally r2;
    int instances = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const Scenario s = testing::random_small_scenario(rng, random_step);
        std::vector<int> sensors;
        for (int i = 1; i <= s.num_sensors(); ++i) {
            sensors.push_back(i);
        }
        check_props(s, Tolerances{}, random_step, sensors, samples, rng, r1, r2);
        ++instances;
    }

    const ScenarioFile f = load_scenario(scenario_path("twelve_sensor.scenario").string());
    Scenario s = f.scenario;
    s.horizon = network_step;
    std::vector<int> sources;
    for (const SourceComponent& c : source_components(s.graph)) {
        sources.insert(sources.end(), c.vertices.begin(), c.vertices.end());
    }
    std::mt19937_64 network_rng(s.seed);
    PropTally n1;
    PropTally n2;
    check_props(s, f.tolerances, network_step, sources, samples, network_rng, n1, n2);

    Outcome o;
    for (const PropTally* p : {&r1, &r2, &n1, &n2}) {
        o.pass = o.pass && p->checked > 0 && p->violations == 0 && p->fault_violations > 0;
    }
    o.detail = std::to_string(instances) + " random instances at k=" + std::to_string(random_step) + ": " +
               tally_text("prop1", r1) + "; " + tally_text("prop2", r2) + ". Twelve-sensor network at k=" +
               std::to_string(network_step) + ": " + tally_text("prop1", n1) + "; " + tally_text("prop2", n2);
    return o;
}

Outcome set_properties(Context&)
{
    using testing::random_cz;
    using testing::random_matrix;
    int lemma1 = 0;
    int lemma2 = 0;
    int reductions = 0;
    double witness_error = 0.0;

    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 1 + trial % 3;
        const int count = 1 + trial % 3;
        const Vector common = testing::random_vector(n, rng);
        std::vector<CZ> sets;
        for (int j = 0; j < count; ++j) {
            sets.push_back(random_cz(n, n + 2, j % 2, rng, &common));
        }
        const CZ t = random_cz(n, n + 1, 1, rng);
        CZ meet = sets.front();
        for (std::size_t j = 1; j < sets.size(); ++j) {
            meet = cz_intersect(meet, sets[j]);
        }
        CzSampler sampler(cz_minkowski_sum(meet, t));
        const auto pts = sampler.draw(20, rng, 10);
        bool ok = true;
        for (const CZ& s : sets) {
            const CZ sum = cz_minkowski_sum(s, t);
            for (const Vector& x : pts) {
                ok = ok && cz_contains_point(sum, x);
            }
        }
        lemma1 += ok ? 1 : 0;
    }

    for (int trial = 0; trial < 100; ++trial) {
        const Index n1 = 1 + trial % 2;
        const Index n2 = 1 + (trial / 2) % 2;
        const CZ s1 = random_cz(n1, n1 + 1, trial % 2, rng);
        const CZ s2 = random_cz(n2, n2 + 2, 1, rng);
        const Matrix h = random_matrix(n1 + n2, n1 + n2, rng);
        const CZ image = cz_linear_map(h, cz_cartesian_product(s1, s2));
        const CZ top = cz_minkowski_sum(cz_linear_map(h.topLeftCorner(n1, n1), s1),
                                        cz_linear_map(h.topRightCorner(n1, n2), s2));
        const CZ bottom = cz_minkowski_sum(cz_linear_map(h.bottomLeftCorner(n2, n1), s1),
                                           cz_linear_map(h.bottomRightCorner(n2, n2), s2));
        const CZ bound = cz_cartesian_product(top, bottom);
        CzSampler sampler(image);
        bool ok = true;
        for (const Vector& x : sampler.draw(20, rng, 10)) {
            ok = ok && cz_contains_point(bound, x);
        }
        lemma2 += ok ? 1 : 0;
    }

    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 1 + trial % 3;
        const Index g = n + 1 + trial % 5;
        const CZ z = random_cz(n, g, trial % 3, rng);
        const HullResult h = cz_interval_hull_with_witnesses(z);
        for (Index j = 0; j < n; ++j) {
            for (const auto& [xi, bound] : {std::pair{h.witnesses_lower[static_cast<std::size_t>(j)], h.box.lower(j)},
                                            std::pair{h.witnesses_upper[static_cast<std::size_t>(j)], h.box.upper(j)}}) {
                witness_error = std::max({witness_error, detail::max_abs(xi) - 1.0,
                                          detail::max_abs(z.con_a() * xi - z.con_b()),
                                          std::abs(z.evaluate(xi)(j) - bound)});
            }
        }
    }

    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 1 + trial % 3;
        const Index g = 2 * n + 4 + trial % 7;
        const Index m = trial % 4;
        const CZ z = random_cz(n, g, m, rng);
        const Index max_gen = std::max<Index>(n, g / 2);
        const Index max_con = m / 2;
        const CZ r = cz_reduce(z, max_gen, max_con);
        bool ok = r.num_generators() <= max_gen && r.num_constraints() <= max_con;
        CzSampler sampler(z);
        for (const Vector& x : sampler.draw(60, rng)) {
            ok = ok && cz_contains_point(r, x);
        }
        reductions += ok ? 1 : 0;
    }

    Outcome o;
    o.pass = lemma1 == 100 && lemma2 == 100 && witness_error <= 1e-9 && reductions == 100;
    o.detail = "intersection-then-sum " + std::to_string(lemma1) + "/100, block image " + std::to_string(lemma2) +
               "/100, hull witness error " + fmt(std::max(witness_error, 0.0)) + ", reductions " +
               std::to_string(reductions) + "/100";
    return o;
}

Index qr_rank(const Matrix& m)
{
    if (m.size() == 0) {
        return 0;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(m);
    qr.setThreshold(1e-9);
    return qr.rank();
}

struct StructureError {
    double orthogonality = 0.0;
    double block_a = 0.0;
    double block_c = 0.0;
    int rank_mismatches = 0;
};

void measure_structure(const Matrix& a, const Matrix& b, const Matrix& c, StructureError& e)
{
    const Index n = a.rows();
    const ObservabilityDecomposition d = observability_decomposition(a, b, c);
    const Index no = d.n_o;
    const Matrix pap = d.P * a * d.P.transpose();
    e.orthogonality = std::max(e.orthogonality, (d.P * d.P.transpose() - Matrix::Identity(n, n)).norm());
    e.block_a = std::max(e.block_a, pap.topRightCorner(no, n - no).norm());
    e.block_c = std::max(e.block_c, (c * d.P.transpose()).rightCols(n - no).norm());
    e.rank_mismatches += no == qr_rank(observability_matrix(a, c, n)) ? 0 : 1;
}

Outcome decomposition(Context&)
{
    StructureError e;
    std::mt19937_64 rng(3);
    int pairs = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Index n = 2 + trial % 5;
        const Index n_o = trial % (n + 1);
        const auto pair = testing::random_structured_pair(n, n_o, 1 + trial % 3, rng);
        measure_structure(pair.A, testing::random_matrix(n, 2, rng), pair.C, e);
        ++pairs;
    }
    const auto cs = testing::twelve_sensor_outputs();
    Matrix c1(5, 6);
    c1 << cs[0], cs[1], cs[2], cs[3], cs[4];
    Matrix c2(4, 6);
    c2 << cs[5], cs[6], cs[7], cs[8];
    for (const Matrix& c : {c1, c2}) {
        measure_structure(testing::twelve_sensor_a(), testing::twelve_sensor_b(), c, e);
        ++pairs;
    }
    Outcome o;
    o.pass = e.orthogonality <= 1e-9 && e.block_a <= 1e-9 && e.block_c <= 1e-9 && e.rank_mismatches == 0;
    o.detail = std::to_string(pairs) + " pairs: orthogonality " + fmt(e.orthogonality) + ", A block " +
               fmt(e.block_a) + ", C block " + fmt(e.block_c) + ", rank mismatches " +
               std::to_string(e.rank_mismatches);
    return o;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(Context&)
{
    const fs::path root = fs::temp_directory_path() / ("dsmf_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const std::string scenario = scenario_path("twelve_sensor.scenario").string();
    Outcome o;
    for (const char* run : {"a", "b"}) {
        const std::string cmd = std::string("\"") + DSMF_CLI + "\" run \"" + scenario + "\" --out \"" +
                                (root / run).string() + "\" > /dev/null";
        const int status = std::system(cmd.c_str());
        if (status != 0) {
            o.pass = false;
            o.detail = "dsmf run exited with status " + std::to_string(status);
            fs::remove_all(root);
            return o;
        }
    }
    int files = 0;
    std::vector<std::string> differing;
    for (const auto& entry : fs::directory_iterator(root / "a")) {
        if (entry.path().extension() != ".csv") {
            continue;
        }
        ++files;
        const fs::path other = root / "b" / entry.path().filename();
        if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
            differing.push_back(entry.path().filename().string());
        }
    }
    fs::remove_all(root);
    o.pass = files == 13 && differing.empty();
    o.detail = std::to_string(files) + " CSV files compared, " + std::to_string(differing.size()) + " differ";
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> only;
    std::set<int> expected_failures;
    for (int a = 1; a < argc; ++a) {
        const std::string arg = argv[a];
        if ((arg == "--only" || arg == "--expect-fail") && a + 1 < argc) {
            (arg == "--only" ? only : expected_failures).insert(std::atoi(argv[++a]));
        } else {
            std::cerr << "usage: test_acceptance [--only N]... [--expect-fail N]...\n";
            return 2;
        }
    }

    const std::vector<std::pair<int, std::function<Outcome(Context&)>>> criteria = {
        {1, soundness},      {2, bounded_widths},      {3, sensor_ordering},
        {4, certifier},      {5, growth_control},      {6, proposition_harness},
        {7, set_properties}, {8, decomposition},       {9, determinism},
    };

    Context ctx;
    int unexpected = 0;
    for (const auto& [id, check] : criteria) {
        if (!only.empty() && !only.count(id)) {
            continue;
        }
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = check(ctx);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool expected = expected_failures.count(id) > 0;
        std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  ["
                  << fmt(seconds_since(t0)) << " s]";
        if (expected) {
            std::cout << (o.pass ? "  (listed as an expected failure but passed)" : "  (expected failure)");
        }
        std::cout << std::endl;
        unexpected += o.pass == expected ? 1 : 0;
    }
    return unexpected == 0 ? 0 : 1;
}
