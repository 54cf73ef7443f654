#include "dsmf/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

namespace fs = std::filesystem;
using namespace dsmf;

namespace {

enum Exit : int { ok = 0, verdict_failure = 1, input_error = 2, runtime_error = 3 };

struct GlobalOptions {
    std::optional<double> tol_rank;
    std::optional<double> tol_eig;
};

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ScenarioFile load(const std::string& path, const GlobalOptions& g)
{
    try {
        ScenarioFile f = load_scenario(path);
        if (g.tol_rank) {
            f.tolerances.rank = *g.tol_rank;
        }
        if (g.tol_eig) {
            f.tolerances.unit_circle = *g.tol_eig;
        }
        return f;
    } catch (const Error& e) {
        throw InputError(e.what());
    }
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
}

int cmd_run(const std::string& file, const std::string& out_dir, const GlobalOptions& g)
{
    const ScenarioFile f = load(file, g);
    const Scenario& s = f.scenario;
    const fs::path out(out_dir);
    fs::create_directories(out / "plots");
    const Trajectory t = simulate_truth(s);
    write_file(out / "trajectory.csv", trajectory_csv(t));
    BeliefHistory h;
    try {
        h = run_dsmf(s, t);
    } catch (const Error& e) {
        write_file(out / "diagnostics.json", diagnostics_json("error", std::string(to_string(e.code())), e.message(), 0));
        std::cerr << "dsmf: " << e.what() << '\n';
        return runtime_error;
    }
    for (int i = 1; i <= s.num_sensors(); ++i) {
        write_file(out / ("sensor_" + std::to_string(i) + ".csv"), sensor_csv(h, t, i));
        for (Index d = 1; d <= s.state_dim(); ++d) {
            write_file(out / "plots" / ("sensor_" + std::to_string(i) + "_dim_" + std::to_string(d) + ".svg"),
                       error_band_svg(h, t, i, d));
        }
    }
    write_file(out / "summary.json", summary_json(s, h));
    const int violations = h.truth_violations();
    write_file(out / "diagnostics.json",
               diagnostics_json(violations == 0 ? "ok" : "truth_violation", "", "", violations));
    std::cout << "wrote " << s.num_sensors() << " sensor tables, " << s.num_sensors() * s.state_dim()
              << " plots and summary.json to " << out.string() << '\n';
    return violations == 0 ? ok : verdict_failure;
}

int cmd_certify(const std::string& file, const GlobalOptions& g)
{
    const ScenarioFile f = load(file, g);
    const CertificateReport r = certify_network(f.scenario, f.tolerances);
    std::cout << certificate_json(r).dump(2) << '\n';
    bool reachable = true;
    for (Coverage c : r.sensors) {
        reachable = reachable && c != Coverage::unreachable;
    }
    return r.network != Verdict::uncertified && reachable ? ok : verdict_failure;
}

int cmd_verify(const std::string& file, int kmax, std::size_t samples, bool inject, const GlobalOptions& g)
{
    ScenarioFile f = load(file, g);
    Scenario& s = f.scenario;
    if (kmax < 0) {
        throw InputError("--kmax must be non-negative");
    }
    s.horizon = std::max(s.horizon, kmax);
    const Trajectory t = simulate_truth(s);
    const BeliefHistory h = exact_history(s, t, kmax);
    std::mt19937_64 rng(s.seed);
    detail::Json reports = detail::Json::array();
    std::size_t violations = 0;
    for (int k = 0; k <= kmax; ++k) {
        for (const SourceComponent& c : source_components(s.graph)) {
            for (int i : c.vertices) {
                const auto points = sample_fused(h, k, i, samples, rng);
                const BoundCheckReport p1 =
                    verify_prop1_points(s, t, k, i, points, inject ? Fault::corrupt_measurement : Fault::none);
                violations += p1.violations;
                reports.push_back(bound_check_json(p1));
                if (k > c.rho_tilde) {
                    const BoundCheckReport p2 = verify_prop2_points(
                        s, t, h, k, i, points, inject ? Fault::drop_unobservable_drive : Fault::none, f.tolerances);
                    violations += p2.violations;
                    reports.push_back(bound_check_json(p2));
                }
            }
        }
    }
    const detail::Json doc{{"kmax", kmax},
                           {"samples", samples},
                           {"fault_injected", inject},
                           {"violations", violations},
                           {"reports", reports}};
    std::cout << doc.dump(2) << '\n';
    return violations == 0 ? ok : verdict_failure;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Distributed set-membership filtering over sensor networks"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--tol-rank", g.tol_rank, "Relative rank tolerance")->check(CLI::PositiveNumber);
    app.add_option("--tol-eig", g.tol_eig, "Unit-circle tolerance on eigenvalue moduli")->check(CLI::PositiveNumber);

    std::string file;
    std::string out_dir;
    auto* run = app.add_subcommand("run", "Simulate the scenario and run the filter");
    run->add_option("file", file, "Scenario file")->required();
    run->add_option("--out", out_dir, "Output directory")->required();

    auto* certify = app.add_subcommand("certify", "Print the boundedness certificate as JSON");
    certify->add_option("file", file, "Scenario file")->required();

    int kmax = 6;
    std::size_t samples = 200;
    bool inject = false;
    auto* verify = app.add_subcommand("verify", "Check the intersection and decomposition outer bounds by sampling");
    verify->add_option("file", file, "Scenario file")->required();
    verify->add_option("--kmax", kmax, "Largest step checked")->capture_default_str();
    verify->add_option("--samples", samples, "Points sampled per sensor and step")->capture_default_str();
    verify->add_flag("--inject-fault", inject, "Check against deliberately wrong bounds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : input_error;
    }
    try {
        if (*run) {
            return cmd_run(file, out_dir, g);
        }
        if (*certify) {
            return cmd_certify(file, g);
        }
        return cmd_verify(file, kmax, samples, inject, g);
    } catch (const InputError& e) {
        std::cerr << "dsmf: " << e.what() << '\n';
        return input_error;
    } catch (const Error& e) {
        std::cerr << "dsmf: " << e.what() << '\n';
        if (e.code() == ErrorCode::growth_cap) {
            std::cerr << "dsmf: the exact verification sets grow quickly; try a smaller --kmax\n";
        }
        return runtime_error;
    } catch (const std::exception& e) {
        std::cerr << "dsmf: " << e.what() << '\n';
        return runtime_error;
    }
}
