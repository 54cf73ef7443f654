#pragma once

// Scenario files are JSON documents (comments allowed) with the sections
// plant, sensors, graph, init and run.

#include "dsmf/decomp.hpp"
#include "dsmf/sysmodel.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace dsmf {

/// A scenario together with the numerical tolerances stored next to it.
struct ScenarioFile {
    Scenario scenario;
    Tolerances tolerances;
};

/// Half-width of the initial belief box used when a file does not give one.
inline constexpr double kDefaultBeliefRadius = 20.0;

namespace detail {

using Json = nlohmann::ordered_json;

class ScenarioReader {
public:
    ScenarioFile read(const Json& doc)
    {
        expect_object(doc, "document");
        allow(doc, "document", {"name", "plant", "sensors", "graph", "init", "run"});
        ScenarioFile out;
        Scenario& s = out.scenario;
        if (doc.contains("name")) {
            const Json& name = doc.at("name");
            detail::require(name.is_string(), ErrorCode::parse_error, "name: expected a string");
            s.name = name.get<std::string>();
        }
        read_plant(field(doc, "plant", "document"), s);
        const Index n = s.state_dim();
        read_sensors(field(doc, "sensors", "document"), n, s);
        read_graph(field(doc, "graph", "document"), s);
        read_init(doc.contains("init") ? doc.at("init") : Json::object(), n, s);
        read_run(field(doc, "run", "document"), out);
        s.validate();
        return out;
    }

private:
    static const Json& field(const Json& obj, const char* key, const std::string& where)
    {
        detail::require(obj.contains(key), ErrorCode::parse_error, where + ": missing field '" + key + "'");
        return obj.at(key);
    }

    static void expect_object(const Json& j, const std::string& where)
    {
        detail::require(j.is_object(), ErrorCode::parse_error, where + ": expected an object");
    }

    static void allow(const Json& obj, const std::string& where, std::initializer_list<const char*> keys)
    {
        const std::set<std::string> known(keys.begin(), keys.end());
        for (const auto& [key, value] : obj.items()) {
            detail::require(known.count(key) != 0, ErrorCode::unknown_key, where + ": unknown key '" + key + "'");
        }
    }

    static double number(const Json& j, const std::string& where)
    {
        detail::require(j.is_number(), ErrorCode::parse_error, where + ": expected a number");
        return j.get<double>();
    }

    static long long integer(const Json& j, const std::string& where)
    {
        detail::require(j.is_number_integer(), ErrorCode::parse_error, where + ": expected an integer");
        return j.get<long long>();
    }

    static Vector vector(const Json& j, const std::string& where)
    {
        detail::require(j.is_array(), ErrorCode::parse_error, where + ": expected an array of numbers");
        Vector v(static_cast<Index>(j.size()));
        for (std::size_t k = 0; k < j.size(); ++k) {
            v(static_cast<Index>(k)) = number(j[k], where + "[" + std::to_string(k) + "]");
        }
        return v;
    }

    // Row-major list of rows. An empty list is a matrix with no rows.
    static Matrix matrix(const Json& j, const std::string& where, Index cols)
    {
        detail::require(j.is_array(), ErrorCode::parse_error, where + ": expected a list of rows");
        Matrix m(static_cast<Index>(j.size()), cols);
        for (std::size_t r = 0; r < j.size(); ++r) {
            const std::string at = where + "[" + std::to_string(r) + "]";
            const Vector row = vector(j[r], at);
            detail::require(row.size() == cols, ErrorCode::dim_mismatch,
                            at + ": expected " + std::to_string(cols) + " columns, got " + std::to_string(row.size()));
            m.row(static_cast<Index>(r)) = row.transpose();
        }
        return m;
    }

    static Index row_length(const Json& j, const std::string& where)
    {
        detail::require(j.is_array() && !j.empty() && j[0].is_array(), ErrorCode::parse_error,
                        where + ": expected a non-empty list of rows");
        return static_cast<Index>(j[0].size());
    }

    static Vector bound(const Json& j, const std::string& where)
    {
        detail::require(j.is_array(), ErrorCode::parse_error, where + ": expected an array of numbers");
        Vector v(static_cast<Index>(j.size()));
        for (std::size_t k = 0; k < j.size(); ++k) {
            const std::string at = where + "[" + std::to_string(k) + "]";
            const Json& e = j[k];
            detail::require(!e.is_null() && !e.is_string(), ErrorCode::unbounded_box, at + ": bound is not finite");
            v(static_cast<Index>(k)) = number(e, at);
        }
        return v;
    }

    static Box box(const Json& j, const std::string& where, Index dim)
    {
        expect_object(j, where);
        allow(j, where, {"lo", "hi"});
        const Vector lo = bound(field(j, "lo", where), where + ".lo");
        const Vector hi = bound(field(j, "hi", where), where + ".hi");
        detail::require(lo.size() == dim && hi.size() == dim, ErrorCode::dim_mismatch,
                        where + ": expected dimension " + std::to_string(dim) + ", got lo " +
                            std::to_string(lo.size()) + " and hi " + std::to_string(hi.size()));
        try {
            return Box(lo, hi);
        } catch (const Error& e) {
            throw Error(e.code(), where + ": " + e.message());
        }
    }

    static ConstrainedZonotope belief(const Json& j, const std::string& where, Index n)
    {
        expect_object(j, where);
        allow(j, where, {"box", "cz"});
        detail::require(j.size() == 1, ErrorCode::parse_error, where + ": give exactly one of 'box' or 'cz'");
        if (j.contains("box")) {
            return ConstrainedZonotope::from_box(box(j.at("box"), where + ".box", n));
        }
        const Json& cz = j.at("cz");
        const std::string at = where + ".cz";
        expect_object(cz, at);
        allow(cz, at, {"c", "G", "A", "b"});
        const Vector c = vector(field(cz, "c", at), at + ".c");
        detail::require(c.size() == n, ErrorCode::dim_mismatch, at + ".c: expected dimension " + std::to_string(n));
        const Json& gj = field(cz, "G", at);
        const Index g = gj.empty() ? 0 : row_length(gj, at + ".G");
        const Matrix gm = matrix(gj, at + ".G", g);
        detail::require(gm.rows() == n, ErrorCode::dim_mismatch, at + ".G: expected " + std::to_string(n) + " rows");
        const Matrix a = cz.contains("A") ? matrix(cz.at("A"), at + ".A", g) : Matrix(0, g);
        const Vector b = cz.contains("b") ? vector(cz.at("b"), at + ".b") : Vector(0);
        detail::require(b.size() == a.rows(), ErrorCode::dim_mismatch, at + ".b: expected one entry per row of A");
        return ConstrainedZonotope(c, gm, a, b);
    }

    static void read_plant(const Json& j, Scenario& s)
    {
        expect_object(j, "plant");
        allow(j, "plant", {"A", "B", "W"});
        const Json& aj = field(j, "A", "plant");
        const Index n = row_length(aj, "plant.A");
        s.plant.A = matrix(aj, "plant.A", n);
        detail::require(s.plant.A.rows() == n, ErrorCode::dim_mismatch, "plant.A: must be square");
        const Json& bj = field(j, "B", "plant");
        const Index p = row_length(bj, "plant.B");
        s.plant.B = matrix(bj, "plant.B", p);
        detail::require(s.plant.B.rows() == n, ErrorCode::dim_mismatch,
                        "plant.B: expected " + std::to_string(n) + " rows");
        s.plant.W = box(field(j, "W", "plant"), "plant.W", p);
        s.plant.validate();
    }

    static void read_sensors(const Json& j, Index n, Scenario& s)
    {
        detail::require(j.is_array() && !j.empty(), ErrorCode::parse_error, "sensors: expected a non-empty list");
        for (std::size_t k = 0; k < j.size(); ++k) {
            const std::string at = "sensors[" + std::to_string(k) + "]";
            const Json& e = j[k];
            expect_object(e, at);
            allow(e, at, {"id", "C", "V"});
            SensorModel m;
            m.id = static_cast<int>(integer(field(e, "id", at), at + ".id"));
            detail::require(m.id == static_cast<int>(k) + 1, ErrorCode::invalid_argument,
                            at + ".id: sensors must be listed with ids 1..N in order");
            m.C = e.contains("C") ? matrix(e.at("C"), at + ".C", n) : Matrix(0, n);
            detail::require(m.C.rows() == 0 || e.contains("V"), ErrorCode::parse_error, at + ": missing field 'V'");
            m.V = e.contains("V") ? box(e.at("V"), at + ".V", m.C.rows()) : Box(Vector(0), Vector(0));
            s.sensors.push_back(std::move(m));
        }
    }

    static void read_graph(const Json& j, Scenario& s)
    {
        expect_object(j, "graph");
        allow(j, "graph", {"edges"});
        const Json& ej = field(j, "edges", "graph");
        detail::require(ej.is_array(), ErrorCode::parse_error, "graph.edges: expected a list of [from, to] pairs");
        std::vector<SensorGraph::Edge> edges;
        for (std::size_t k = 0; k < ej.size(); ++k) {
            const std::string at = "graph.edges[" + std::to_string(k) + "]";
            detail::require(ej[k].is_array() && ej[k].size() == 2, ErrorCode::parse_error,
                            at + ": expected a [from, to] pair");
            const auto from = static_cast<int>(integer(ej[k][0], at + "[0]"));
            const auto to = static_cast<int>(integer(ej[k][1], at + "[1]"));
            detail::require(from >= 1 && from <= s.num_sensors() && to >= 1 && to <= s.num_sensors(),
                            ErrorCode::invalid_argument, at + ": unknown sensor");
            edges.emplace_back(from, to);
        }
        s.graph = SensorGraph(s.num_sensors(), edges);
    }

    static void read_init(const Json& j, Index n, Scenario& s)
    {
        expect_object(j, "init");
        allow(j, "init", {"true_x0", "beliefs"});
        s.true_initial_state = j.contains("true_x0") ? vector(j.at("true_x0"), "init.true_x0") : Vector::Zero(n);
        detail::require(s.true_initial_state.size() == n, ErrorCode::dim_mismatch,
                        "init.true_x0: expected dimension " + std::to_string(n));
        ConstrainedZonotope fallback = ConstrainedZonotope::from_box(Box::symmetric(n, kDefaultBeliefRadius));
        const Json beliefs = j.contains("beliefs") ? j.at("beliefs") : Json::object();
        expect_object(beliefs, "init.beliefs");
        if (beliefs.contains("default")) {
            fallback = belief(beliefs.at("default"), "init.beliefs.default", n);
        }
        for (const auto& [key, value] : beliefs.items()) {
            if (key == "default") {
                continue;
            }
            int id = 0;
            try {
                std::size_t used = 0;
                id = std::stoi(key, &used);
                detail::require(used == key.size(), ErrorCode::unknown_key, "");
            } catch (const std::exception&) {
                throw Error(ErrorCode::unknown_key, "init.beliefs: unknown key '" + key + "'");
            }
            detail::require(id >= 1 && id <= s.num_sensors(), ErrorCode::unknown_key,
                            "init.beliefs: no sensor '" + key + "'");
            s.initial_beliefs.emplace(id, belief(value, "init.beliefs." + key, n));
        }
        for (int i = 1; i <= s.num_sensors(); ++i) {
            s.initial_beliefs.emplace(i, fallback);
        }
    }

    static void read_run(const Json& j, ScenarioFile& out)
    {
        expect_object(j, "run");
        allow(j, "run", {"horizon", "seed", "max_gen", "max_con", "reduction", "tolerances"});
        Scenario& s = out.scenario;
        const long long horizon = integer(field(j, "horizon", "run"), "run.horizon");
        detail::require(horizon >= 0, ErrorCode::invalid_argument, "run.horizon: must be non-negative");
        s.horizon = static_cast<int>(horizon);
        if (j.contains("seed")) {
            const Json& seed = j.at("seed");
            detail::require(seed.is_number_unsigned(), ErrorCode::parse_error,
                            "run.seed: expected a non-negative integer");
            s.seed = seed.get<std::uint64_t>();
        }
        auto budget = [&](const char* key) -> Index {
            if (!j.contains(key)) {
                return 0;
            }
            const long long v = integer(j.at(key), std::string("run.") + key);
            detail::require(v >= 0, ErrorCode::invalid_argument, std::string("run.") + key + ": must be non-negative");
            return static_cast<Index>(v);
        };
        s.reduction.max_gen = budget("max_gen");
        s.reduction.max_con = budget("max_con");
        if (j.contains("reduction")) {
            detail::require(j.at("reduction").is_boolean(), ErrorCode::parse_error, "run.reduction: expected true or false");
            s.reduction.enabled = j.at("reduction").get<bool>();
        }
        if (j.contains("tolerances")) {
            const Json& t = j.at("tolerances");
            expect_object(t, "run.tolerances");
            allow(t, "run.tolerances", {"rank", "eig"});
            if (t.contains("rank")) {
                out.tolerances.rank = number(t.at("rank"), "run.tolerances.rank");
            }
            if (t.contains("eig")) {
                out.tolerances.unit_circle = number(t.at("eig"), "run.tolerances.eig");
            }
            detail::require(out.tolerances.rank > 0.0 && out.tolerances.unit_circle > 0.0, ErrorCode::invalid_argument,
                            "run.tolerances: must be positive");
        }
    }
};

inline Json json_vector(const Vector& v)
{
    Json out = Json::array();
    for (Index k = 0; k < v.size(); ++k) {
        out.push_back(v(k));
    }
    return out;
}

inline Json json_matrix(const Matrix& m)
{
    Json out = Json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        out.push_back(json_vector(m.row(r).transpose()));
    }
    return out;
}

inline Json json_box(const Box& b) { return Json{{"lo", json_vector(b.lower)}, {"hi", json_vector(b.upper)}}; }

// Written as a box only when reading it back reproduces the same set exactly.
inline Json json_belief(const ConstrainedZonotope& z)
{
    const Matrix& g = z.generators();
    if (z.num_constraints() == 0 && g.rows() == g.cols() && g.isDiagonal(0.0) && (g.diagonal().array() >= 0.0).all()) {
        const Vector r = g.diagonal();
        const Box b(z.center() - r, z.center() + r);
        const ConstrainedZonotope back = ConstrainedZonotope::from_box(b);
        if (back.center() == z.center() && back.generators() == g) {
            return Json{{"box", json_box(b)}};
        }
    }
    Json cz{{"c", json_vector(z.center())}, {"G", json_matrix(g)}};
    if (z.num_constraints() > 0) {
        cz["A"] = json_matrix(z.con_a());
        cz["b"] = json_vector(z.con_b());
    }
    return Json{{"cz", cz}};
}

inline bool same_set(const ConstrainedZonotope& a, const ConstrainedZonotope& b)
{
    return a.center() == b.center() && a.generators() == b.generators() && a.con_a() == b.con_a() &&
           a.con_b() == b.con_b();
}

// One-line form with a space after each separator.
inline std::string compact(const Json& j)
{
    if (!j.is_structured()) {
        return j.dump();
    }
    std::string out(1, j.is_object() ? '{' : '[');
    std::size_t k = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++k) {
        out += k > 0 ? ", " : "";
        if (j.is_object()) {
            out += Json(it.key()).dump() + ": ";
        }
        out += compact(it.value());
    }
    return out + (j.is_object() ? '}' : ']');
}

// Values that fit on a line stay on one line; the rest is indented.
inline void pretty(std::ostream& os, const Json& j, int indent)
{
    const std::string one_line = compact(j);
    if (!j.is_structured() || j.empty() || indent + one_line.size() <= 96) {
        os << one_line;
        return;
    }
    const std::string pad(static_cast<std::size_t>(indent), ' ');
    const std::string inner(static_cast<std::size_t>(indent + 2), ' ');
    os << (j.is_object() ? "{\n" : "[\n");
    std::size_t k = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++k) {
        os << inner;
        if (j.is_object()) {
            os << Json(it.key()).dump() << ": ";
        }
        pretty(os, it.value(), indent + 2);
        os << (k + 1 < j.size() ? ",\n" : "\n");
    }
    os << pad << (j.is_object() ? '}' : ']');
}

} // namespace detail

/// Parses scenario text. Syntax errors report the line and column; semantic
/// errors name the offending field.
inline ScenarioFile parse_scenario(const std::string& text)
{
    detail::Json doc;
    try {
        doc = detail::Json::parse(text, nullptr, true, true);
    } catch (const detail::Json::parse_error& e) {
        const std::string what = e.what();
        const auto start = what.find("] ");
        throw Error(ErrorCode::parse_error, start == std::string::npos ? what : what.substr(start + 2));
    }
    return detail::ScenarioReader().read(doc);
}

inline ScenarioFile load_scenario(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    detail::require(in.good(), ErrorCode::invalid_argument, "cannot open scenario file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_scenario(text.str());
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.message());
    }
}

/// Scenario text that parse_scenario reads back to an identical scenario.
inline std::string serialize_scenario(const Scenario& s, const Tolerances& tol = {})
{
    using detail::Json;
    Json doc = Json::object();
    if (!s.name.empty()) {
        doc["name"] = s.name;
    }
    doc["plant"] = {{"A", detail::json_matrix(s.plant.A)}, {"B", detail::json_matrix(s.plant.B)},
                    {"W", detail::json_box(s.plant.W)}};
    Json sensors = Json::array();
    for (const SensorModel& m : s.sensors) {
        Json e{{"id", m.id}};
        if (m.C.rows() > 0) {
            e["C"] = detail::json_matrix(m.C);
            e["V"] = detail::json_box(m.V);
        }
        sensors.push_back(e);
    }
    doc["sensors"] = sensors;
    Json edges = Json::array();
    for (const auto& [from, to] : s.graph.edges()) {
        edges.push_back({from, to});
    }
    doc["graph"] = {{"edges", edges}};
    Json beliefs = Json::object();
    bool uniform = !s.initial_beliefs.empty();
    for (const auto& [id, z] : s.initial_beliefs) {
        uniform = uniform && detail::same_set(z, s.initial_beliefs.begin()->second);
    }
    if (uniform) {
        beliefs["default"] = detail::json_belief(s.initial_beliefs.begin()->second);
    } else {
        for (const auto& [id, z] : s.initial_beliefs) {
            beliefs[std::to_string(id)] = detail::json_belief(z);
        }
    }
    doc["init"] = {{"true_x0", detail::json_vector(s.true_initial_state)}, {"beliefs", beliefs}};
    Json run{{"horizon", s.horizon}, {"seed", s.seed}};
    if (s.reduction.max_gen > 0) {
        run["max_gen"] = s.reduction.max_gen;
    }
    if (s.reduction.max_con > 0) {
        run["max_con"] = s.reduction.max_con;
    }
    if (!s.reduction.enabled) {
        run["reduction"] = false;
    }
    run["tolerances"] = {{"rank", tol.rank}, {"eig", tol.unit_circle}};
    doc["run"] = run;
    std::ostringstream os;
    detail::pretty(os, doc, 0);
    os << '\n';
    return os.str();
}

} // namespace dsmf
