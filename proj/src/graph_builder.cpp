#include "mm/graph_builder.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <queue>
#include <set>
#include <utility>

#include "mm/errors.hpp"

namespace mm {

std::size_t PatchGraph::original_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const GraphNode& n) { return !n.is_duplicate; }));
}

std::vector<ClassId> batch_labels(const SampleBatch& batch) {
    std::vector<ClassId> labels;
    labels.reserve(batch.size());
    for (const auto& p : batch.patches) labels.push_back(p.label);
    return labels;
}

namespace {

void require_two_labels(std::span<const ClassId> labels) {
    if (labels.empty() ||
        std::all_of(labels.begin(), labels.end(), [&](ClassId c) { return c == labels.front(); }))
        throw TripletError("cannot form triplets: batch needs at least 2 distinct labels");
}

}  // namespace

PatchGraph build_graph(std::span<const ClassId> labels, Rng& rng) {
    require_two_labels(labels);
    const std::size_t n = labels.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

    PatchGraph g;
    g.nodes.reserve(n);
    // Nodes of each class in insertion order; ordered map keeps the
    // different-label walk deterministic.
    std::map<ClassId, std::vector<std::size_t>> by_class;
    std::vector<bool> has_partner;

    for (std::size_t patch : order) {
        const ClassId label = labels[patch];
        const std::size_t id = g.nodes.size();
        g.nodes.push_back({patch, label, false});
        has_partner.push_back(false);

        auto& same = by_class[label];
        if (!same.empty()) {
            const std::size_t partner = same[rng.index(same.size())];
            g.attractive_edges.push_back({partner, id});
            has_partner[partner] = true;
            has_partner[id] = true;
        }
        const std::size_t others = id - same.size();
        if (others > 0) {
            std::size_t k = rng.index(others);
            for (const auto& [cls, members] : by_class) {
                if (cls == label) continue;
                if (k < members.size()) {
                    g.rejective_edges.push_back({members[k], id});
                    break;
                }
                k -= members.size();
            }
        }
        same.push_back(id);
    }

    for (std::size_t id = 0; id < n; ++id) {
        if (has_partner[id]) continue;
        const std::size_t dup = g.nodes.size();
        g.nodes.push_back({g.nodes[id].patch, g.nodes[id].label, true});
        g.attractive_edges.push_back({id, dup});
    }
    return g;
}

PatchGraph build_graph(const SampleBatch& batch, Rng& rng) {
    const auto labels = batch_labels(batch);
    return build_graph(labels, rng);
}

std::vector<Triplet> extract_triplets(const PatchGraph& g, Rng& rng) {
    const std::size_t n = g.nodes.size();
    std::vector<std::vector<std::size_t>> attract(n), reject(n);
    for (const auto& e : g.attractive_edges) {
        attract[e.a].push_back(e.b);
        attract[e.b].push_back(e.a);
    }
    for (const auto& e : g.rejective_edges) {
        if (g.nodes[e.a].is_duplicate || g.nodes[e.b].is_duplicate) continue;
        reject[e.a].push_back(e.b);
        reject[e.b].push_back(e.a);
    }

    std::vector<Triplet> out;
    out.reserve(g.original_count());
    for (std::size_t a = 0; a < n; ++a) {
        if (g.nodes[a].is_duplicate) continue;
        if (attract[a].empty()) throw TripletError("graph node without attractive neighbour");
        const std::size_t p = attract[a][rng.index(attract[a].size())];
        std::size_t neg;
        if (!reject[a].empty()) {
            neg = reject[a][rng.index(reject[a].size())];
        } else {
            std::vector<std::size_t> candidates;
            for (std::size_t j = 0; j < n; ++j)
                if (!g.nodes[j].is_duplicate && g.nodes[j].label != g.nodes[a].label)
                    candidates.push_back(j);
            if (candidates.empty()) throw TripletError("graph has a single label");
            neg = candidates[rng.index(candidates.size())];
        }
        out.push_back({a, p, neg});
    }
    return out;
}

std::vector<Triplet> to_patch_triplets(const PatchGraph& g, std::span<const Triplet> triplets) {
    std::vector<Triplet> out;
    out.reserve(triplets.size());
    for (const auto& t : triplets)
        out.push_back({g.nodes[t.anchor].patch, g.nodes[t.positive].patch, g.nodes[t.negative].patch});
    return out;
}

std::vector<Triplet> random_triplets(std::span<const ClassId> labels, std::size_t count, Rng& rng) {
    require_two_labels(labels);
    std::map<ClassId, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    std::vector<Triplet> out;
    out.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        const std::size_t a = rng.index(labels.size());
        const auto& same = by_class[labels[a]];
        std::size_t p = a;
        if (same.size() > 1) {
            // Uniform over same-label nodes other than the anchor.
            std::size_t k = rng.index(same.size() - 1);
            p = same[k];
            if (p == a) p = same.back();
        }
        std::size_t k = rng.index(labels.size() - same.size());
        std::size_t neg = 0;
        for (const auto& [cls, members] : by_class) {
            if (cls == labels[a]) continue;
            if (k < members.size()) {
                neg = members[k];
                break;
            }
            k -= members.size();
        }
        out.push_back({a, p, neg});
    }
    return out;
}

std::vector<Triplet> random_triplets(const SampleBatch& batch, std::size_t count, Rng& rng) {
    const auto labels = batch_labels(batch);
    return random_triplets(labels, count, rng);
}

bool check_classwise_connected(const PatchGraph& g) {
    const std::size_t n = g.nodes.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& e : g.attractive_edges) {
        if (e.a >= n || e.b >= n) return false;
        if (g.nodes[e.a].label != g.nodes[e.b].label) continue;
        adj[e.a].push_back(e.b);
        adj[e.b].push_back(e.a);
    }
    std::vector<bool> seen(n, false);
    std::set<ClassId> visited_classes;
    for (std::size_t start = 0; start < n; ++start) {
        if (seen[start]) continue;
        // A second BFS root within one class means that class is split.
        if (!visited_classes.insert(g.nodes[start].label).second) return false;
        std::queue<std::size_t> q;
        q.push(start);
        seen[start] = true;
        while (!q.empty()) {
            const std::size_t u = q.front();
            q.pop();
            for (std::size_t v : adj[u]) {
                if (!seen[v]) {
                    seen[v] = true;
                    q.push(v);
                }
            }
        }
    }
    return true;
}

bool check_edge_constraints(const PatchGraph& g) {
    const std::size_t n = g.nodes.size();
    std::set<std::pair<std::size_t, std::size_t>> seen;
    auto check = [&](const std::vector<Edge>& edges, bool same_label) {
        for (const auto& e : edges) {
            if (e.a >= n || e.b >= n || e.a == e.b) return false;
            if ((g.nodes[e.a].label == g.nodes[e.b].label) != same_label) return false;
            if (!seen.insert(std::minmax(e.a, e.b)).second) return false;
        }
        return true;
    };
    return check(g.attractive_edges, true) && check(g.rejective_edges, false);
}

void write_edge_list(std::ostream& out, const PatchGraph& g) {
    for (const auto& e : g.attractive_edges) out << "A " << e.a << ' ' << e.b << '\n';
    for (const auto& e : g.rejective_edges) out << "R " << e.a << ' ' << e.b << '\n';
}

}  // namespace mm
