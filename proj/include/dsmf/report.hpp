#pragma once

// Text artifacts: CSV tables, JSON reports and SVG error-range plots.

#include "dsmf/analysis.hpp"
#include "dsmf/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

namespace dsmf {

namespace detail {

inline std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline Json complex_json(Complex z) { return Json{{"lambda_re", z.real()}, {"lambda_im", z.imag()}}; }

inline Json tolerance_json(const Tolerances& tol) { return Json{{"rank", tol.rank}, {"eig", tol.unit_circle}}; }

} // namespace detail

/// k,x_1..x_n
inline std::string trajectory_csv(const Trajectory& t)
{
    std::ostringstream os;
    os << 'k';
    const Index n = t.states.empty() ? 0 : t.states.front().size();
    for (Index j = 1; j <= n; ++j) {
        os << ",x_" << j;
    }
    os << '\n';
    for (std::size_t k = 0; k < t.states.size(); ++k) {
        os << k;
        for (Index j = 0; j < n; ++j) {
            os << ',' << detail::num(t.states[k](j));
        }
        os << '\n';
    }
    return os.str();
}

/// k,dim,true,lower,upper,err_lower,err_upper from the fused hulls of sensor i.
inline std::string sensor_csv(const BeliefHistory& h, const Trajectory& t, int i)
{
    std::ostringstream os;
    os << "k,dim,true,lower,upper,err_lower,err_upper\n";
    for (int k = 0; k <= h.horizon; ++k) {
        const BeliefRecord& r = h.at(k, i);
        detail::require(r.hull.has_value(), ErrorCode::precondition, "sensor_csv needs fused hulls");
        const Vector& x = t.states.at(static_cast<std::size_t>(k));
        for (Index d = 0; d < x.size(); ++d) {
            os << k << ',' << d + 1 << ',' << detail::num(x(d)) << ',' << detail::num(r.hull->lower(d)) << ','
               << detail::num(r.hull->upper(d)) << ',' << detail::num(r.hull->lower(d) - x(d)) << ','
               << detail::num(r.hull->upper(d) - x(d)) << '\n';
        }
    }
    return os.str();
}

/// Windows [K/4, K/2] and [3K/4, K], which are [50, 100] and [150, 200] for K = 200.
inline std::pair<StepWindow, StepWindow> default_windows(int horizon)
{
    return {{horizon / 4, horizon / 2}, {(3 * horizon) / 4, horizon}};
}

/// Run summary with per-(sensor, dim) width statistics over the tail window.
inline std::string summary_json(const Scenario& s, const BeliefHistory& h)
{
    using detail::Json;
    const auto [early, tail] = default_windows(h.horizon);
    const BoundednessReport b = boundedness_diagnostic(h, early, tail);
    Json sensors = Json::array();
    for (int i = 1; i <= h.num_sensors; ++i) {
        Json dims = Json::array();
        for (Index d = 1; d <= s.state_dim(); ++d) {
            double sum = 0.0;
            for (int k = tail.first; k <= tail.last; ++k) {
                sum += h.at(k, i).hull->widths()(d - 1);
            }
            const WidthRatio& w = b.at(i, d);
            dims.push_back({{"dim", d},
                            {"tail_mean_width", sum / (tail.last - tail.first + 1)},
                            {"tail_max_width", w.tail_max},
                            {"early_max_width", w.early_max},
                            {"ratio", std::isfinite(w.ratio) ? Json(w.ratio) : Json("inf")},
                            {"flag", w.growing ? "GROWING" : "BOUNDED"}});
        }
        Index gens = 0;
        Index cons = 0;
        for (int k = 0; k <= h.horizon; ++k) {
            gens = std::max(gens, h.at(k, i).generators);
            cons = std::max(cons, h.at(k, i).constraints);
        }
        sensors.push_back({{"sensor", i}, {"max_generators", gens}, {"max_constraints", cons}, {"dims", dims}});
    }
    Json doc{{"scenario", s.name},
             {"horizon", h.horizon},
             {"seed", s.seed},
             {"noise", "uniform, independent across steps and sensors"},
             {"reduction",
              {{"enabled", s.reduction.enabled},
               {"max_gen", s.reduction.generators(s.state_dim())},
               {"max_con", s.reduction.constraints(s.state_dim())}}},
             {"truth_violations", h.truth_violations()},
             {"windows", {{"early", {early.first, early.last}}, {"tail", {tail.first, tail.last}}}},
             {"sensors", sensors}};
    return doc.dump(2) + "\n";
}

/// Outcome of a command: "ok" or the error code and message.
inline std::string diagnostics_json(const std::string& status, const std::string& code, const std::string& message,
                                    int truth_violations)
{
    detail::Json doc{{"status", status}, {"code", code}, {"message", message}, {"truth_violations", truth_violations}};
    return doc.dump(2) + "\n";
}

inline detail::Json bound_check_json(const BoundCheckReport& r)
{
    detail::Json terms = detail::Json::object();
    for (const auto& [name, count] : r.term_violations) {
        terms[name] = count;
    }
    return {{"proposition", r.proposition}, {"step", r.step},         {"sensor", r.sensor},
            {"component", r.component},     {"checked", r.checked},   {"violations", r.violations},
            {"terms", terms}};
}

inline detail::Json certificate_json(const CertificateReport& r)
{
    using detail::Json;
    Json comps = Json::array();
    for (const ComponentCertificate& c : r.components) {
        Json eigs = Json::array();
        for (const UnitEigenCheck& e : c.theorem1.eigs) {
            Json j = detail::complex_json(e.lambda);
            j["rank_lhs"] = e.rank_lhs;
            j["rank_rhs"] = e.rank_rhs;
            j["semisimple"] = e.semisimple;
            eigs.push_back(j);
        }
        Json witnesses = Json::array();
        for (const PbhCheck& p : c.detectability.checks) {
            if (!p.passed) {
                Json j = detail::complex_json(p.lambda);
                j["rank"] = p.rank;
                witnesses.push_back(j);
            }
        }
        comps.push_back({{"component", c.component.index},
                         {"vertices", c.component.vertices},
                         {"detectable", c.detectability.detectable},
                         {"thm1",
                          {{"cond_i", c.theorem1.condition_i},
                           {"cond_ii", c.theorem1.condition_ii},
                           {"n_o", c.theorem1.decomposition.n_o},
                           {"eigs", eigs}}},
                         {"undetectable_modes", witnesses},
                         {"verdict", std::string(to_string(c.verdict))},
                         {"tolerances", detail::tolerance_json(r.tolerances)}});
    }
    Json sensors = Json::array();
    for (std::size_t k = 0; k < r.sensors.size(); ++k) {
        sensors.push_back({{"sensor", k + 1}, {"coverage", std::string(to_string(r.sensors[k]))}});
    }
    return {{"network", std::string(to_string(r.network))},
            {"components", comps},
            {"sensors", sensors},
            {"tolerances", detail::tolerance_json(r.tolerances)}};
}

/// Shaded band err_lower..err_upper against k for one sensor and dimension (1-based).
inline std::string error_band_svg(const BeliefHistory& h, const Trajectory& t, int i, Index dim)
{
    constexpr double width = 640.0;
    constexpr double height = 320.0;
    constexpr double left = 60.0;
    constexpr double right = 20.0;
    constexpr double top = 30.0;
    constexpr double bottom = 40.0;
    std::vector<double> lo;
    std::vector<double> hi;
    for (int k = 0; k <= h.horizon; ++k) {
        const Box& b = *h.at(k, i).hull;
        const double x = t.states.at(static_cast<std::size_t>(k))(dim - 1);
        lo.push_back(b.lower(dim - 1) - x);
        hi.push_back(b.upper(dim - 1) - x);
    }
    double ymax = 1e-12;
    for (std::size_t k = 0; k < lo.size(); ++k) {
        ymax = std::max({ymax, std::abs(lo[k]), std::abs(hi[k])});
    }
    ymax *= 1.1;
    const double kmax = std::max(1, h.horizon);
    auto px = [&](double k) { return left + (width - left - right) * k / kmax; };
    auto py = [&](double v) { return top + (height - top - bottom) * (ymax - v) / (2.0 * ymax); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
       << "sensor " << i << ", dim " << dim << ": estimation error range</text>\n";
    os << "<polygon fill=\"#7aa6d6\" fill-opacity=\"0.6\" stroke=\"#2f5f8f\" stroke-width=\"1\" points=\"";
    for (std::size_t k = 0; k < hi.size(); ++k) {
        os << detail::num(px(double(k))) << ',' << detail::num(py(hi[k])) << ' ';
    }
    for (std::size_t k = lo.size(); k-- > 0;) {
        os << detail::num(px(double(k))) << ',' << detail::num(py(lo[k])) << ' ';
    }
    os << "\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << detail::num(py(0)) << "\" x2=\"" << width - right << "\" y2=\""
       << detail::num(py(0)) << "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right << "\" height=\""
       << height - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
    const auto label = [&](double x, double y, const std::string& text, const char* anchor) {
        os << "<text x=\"" << detail::num(x) << "\" y=\"" << detail::num(y) << "\" text-anchor=\"" << anchor
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << text << "</text>\n";
    };
    label(left - 6, py(ymax / 1.1) + 4, detail::num(ymax / 1.1), "end");
    label(left - 6, py(0) + 4, "0", "end");
    label(left - 6, py(-ymax / 1.1) + 4, detail::num(-ymax / 1.1), "end");
    label(left, height - bottom + 16, "0", "middle");
    label(width - right, height - bottom + 16, std::to_string(h.horizon), "middle");
    label((left + width - right) / 2, height - 8, "k", "middle");
    os << "</svg>\n";
    return os.str();
}

} // namespace dsmf
