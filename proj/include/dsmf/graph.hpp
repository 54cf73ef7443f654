#pragma once

#include "dsmf/core.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dsmf {

/// Directed communication graph on sensors 1..N. An edge (j, i) means j sends to i.
class SensorGraph {
public:
    using Edge = std::pair<int, int>;

    SensorGraph() = default;

    SensorGraph(int num_sensors, std::vector<Edge> edges) : n_(num_sensors)
    {
        detail::require(num_sensors >= 0, ErrorCode::invalid_argument, "negative sensor count");
        in_.assign(static_cast<std::size_t>(n_) + 1, {});
        out_.assign(static_cast<std::size_t>(n_) + 1, {});
        std::set<Edge> seen;
        for (const auto& [from, to] : edges) {
            detail::require(valid(from) && valid(to), ErrorCode::invalid_argument,
                            "edge " + std::to_string(from) + "->" + std::to_string(to) + " has an unknown vertex");
            if (!seen.insert({from, to}).second) {
                continue;
            }
            edges_.emplace_back(from, to);
            if (from != to) {
                in_[static_cast<std::size_t>(to)].push_back(from);
                out_[static_cast<std::size_t>(from)].push_back(to);
            }
        }
        for (auto& v : in_) {
            std::sort(v.begin(), v.end());
        }
        for (auto& v : out_) {
            std::sort(v.begin(), v.end());
        }
    }

    int num_sensors() const { return n_; }
    const std::vector<Edge>& edges() const { return edges_; }
    bool valid(int v) const { return v >= 1 && v <= n_; }

    /// In-neighbours of i, excluding i itself.
    const std::vector<int>& senders(int i) const { return in_.at(checked(i)); }
    /// Out-neighbours of i, excluding i itself.
    const std::vector<int>& receivers(int i) const { return out_.at(checked(i)); }

    /// Subgraph on `vertices`, keeping the original ids.
    SensorGraph induced(const std::vector<int>& vertices) const
    {
        const std::set<int> keep(vertices.begin(), vertices.end());
        std::vector<Edge> sub;
        for (const auto& e : edges_) {
            if (keep.count(e.first) != 0 && keep.count(e.second) != 0) {
                sub.push_back(e);
            }
        }
        SensorGraph g(n_, sub);
        return g;
    }

private:
    std::size_t checked(int v) const
    {
        detail::require(valid(v), ErrorCode::invalid_argument, "unknown sensor " + std::to_string(v));
        return static_cast<std::size_t>(v);
    }

    int n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> in_;
    std::vector<std::vector<int>> out_;
};

/// Shortest directed distance from every vertex to i (index 0 unused, -1 if i is unreachable).
inline std::vector<int> distances_to(const SensorGraph& g, int i)
{
    detail::require(g.valid(i), ErrorCode::invalid_argument, "unknown sensor " + std::to_string(i));
    std::vector<int> dist(static_cast<std::size_t>(g.num_sensors()) + 1, -1);
    dist[static_cast<std::size_t>(i)] = 0;
    std::deque<int> queue{i};
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (int u : g.senders(v)) {
            if (dist[static_cast<std::size_t>(u)] < 0) {
                dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
                queue.push_back(u);
            }
        }
    }
    return dist;
}

/// rho -> N_{i,rho}: vertices whose shortest path to i has exactly rho edges.
inline std::map<int, std::vector<int>> predecessor_hops(const SensorGraph& g, int i)
{
    const std::vector<int> dist = distances_to(g, i);
    std::map<int, std::vector<int>> hops;
    for (int v = 1; v <= g.num_sensors(); ++v) {
        if (dist[static_cast<std::size_t>(v)] >= 0) {
            hops[dist[static_cast<std::size_t>(v)]].push_back(v);
        }
    }
    return hops;
}

/// M_j^i: vertices within j + 1 hops of i, in ascending order.
inline std::vector<int> m_set(const SensorGraph& g, int i, int j)
{
    detail::require(j >= 0, ErrorCode::invalid_argument, "m_set index must be non-negative");
    const std::vector<int> dist = distances_to(g, i);
    std::vector<int> out;
    for (int v = 1; v <= g.num_sensors(); ++v) {
        const int d = dist[static_cast<std::size_t>(v)];
        if (d >= 0 && d <= j + 1) {
            out.push_back(v);
        }
    }
    return out;
}

/// Largest shortest-path distance from a vertex that can reach i.
inline int eccentricity(const SensorGraph& g, int i)
{
    const std::vector<int> dist = distances_to(g, i);
    return *std::max_element(dist.begin(), dist.end());
}

struct SourceComponent {
    int index = 0;
    std::vector<int> vertices;
    int rho_tilde = 1;
    std::map<int, int> member_eccentricities;
};

/// Strongly connected components (Tarjan), each sorted, listed by smallest vertex.
inline std::vector<std::vector<int>> strongly_connected_components(const SensorGraph& g)
{
    const auto n = static_cast<std::size_t>(g.num_sensors());
    std::vector<int> index(n + 1, -1);
    std::vector<int> low(n + 1, 0);
    std::vector<bool> on_stack(n + 1, false);
    std::vector<int> stack;
    std::vector<std::vector<int>> comps;
    int counter = 0;
    // Iterative DFS frames: (vertex, next receiver position).
    for (int root = 1; root <= g.num_sensors(); ++root) {
        if (index[static_cast<std::size_t>(root)] >= 0) {
            continue;
        }
        std::vector<std::pair<int, std::size_t>> frames{{root, 0}};
        index[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = counter++;
        stack.push_back(root);
        on_stack[static_cast<std::size_t>(root)] = true;
        while (!frames.empty()) {
            auto& [v, pos] = frames.back();
            const auto vi = static_cast<std::size_t>(v);
            const auto& next = g.receivers(v);
            if (pos < next.size()) {
                const int w = next[pos++];
                const auto wi = static_cast<std::size_t>(w);
                if (index[wi] < 0) {
                    index[wi] = low[wi] = counter++;
                    stack.push_back(w);
                    on_stack[wi] = true;
                    frames.emplace_back(w, 0);
                } else if (on_stack[wi]) {
                    low[vi] = std::min(low[vi], index[wi]);
                }
                continue;
            }
            if (low[vi] == index[vi]) {
                std::vector<int> comp;
                int w = 0;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<std::size_t>(w)] = false;
                    comp.push_back(w);
                } while (w != v);
                std::sort(comp.begin(), comp.end());
                comps.push_back(std::move(comp));
            }
            const int done = v;
            frames.pop_back();
            if (!frames.empty()) {
                const auto parent = static_cast<std::size_t>(frames.back().first);
                low[parent] = std::min(low[parent], low[static_cast<std::size_t>(done)]);
            }
        }
    }
    std::sort(comps.begin(), comps.end());
    return comps;
}

/// max over members of max(eccentricity, 1).
inline int coit_window(const SourceComponent& c)
{
    int rho = 1;
    for (const auto& [v, e] : c.member_eccentricities) {
        rho = std::max(rho, std::max(e, 1));
    }
    return rho;
}

/// SCCs without in-edges from outside, ascending by smallest vertex, indexed from 1.
/// Member eccentricities are measured inside the component's induced subgraph.
inline std::vector<SourceComponent> source_components(const SensorGraph& g)
{
    std::vector<SourceComponent> out;
    for (const auto& comp : strongly_connected_components(g)) {
        const std::set<int> members(comp.begin(), comp.end());
        bool source = true;
        for (int v : comp) {
            for (int u : g.senders(v)) {
                source = source && members.count(u) != 0;
            }
        }
        if (!source) {
            continue;
        }
        SourceComponent c;
        c.index = static_cast<int>(out.size()) + 1;
        c.vertices = comp;
        const SensorGraph sub = g.induced(comp);
        for (int v : comp) {
            c.member_eccentricities[v] = eccentricity(sub, v);
        }
        c.rho_tilde = coit_window(c);
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace dsmf
