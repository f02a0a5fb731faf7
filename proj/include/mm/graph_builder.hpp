#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "mm/data_model.hpp"
#include "mm/patch_sampler.hpp"
#include "mm/rng.hpp"

namespace mm {

struct GraphNode {
    std::size_t patch = 0;  // index into the SampleBatch
    ClassId label = 0;
    bool is_duplicate = false;
};

struct Edge {
    std::size_t a = 0;
    std::size_t b = 0;
    bool operator==(const Edge&) const = default;
};

/// Patch graph with attractive (same label) and rejective (different label)
/// edges. Class-wise connected by construction.
struct PatchGraph {
    std::vector<GraphNode> nodes;
    std::vector<Edge> attractive_edges;
    std::vector<Edge> rejective_edges;

    std::size_t original_count() const;
};

/// Node indices into a PatchGraph, or patch indices once mapped with
/// to_patch_triplets.
struct Triplet {
    std::size_t anchor = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;
    bool operator==(const Triplet&) const = default;
};

/// Inserts the batch's patches one at a time in random order. Every new node
/// links by one attractive edge to a uniformly chosen earlier node of its
/// label and by one rejective edge to a uniformly chosen earlier node of
/// another label, when such nodes exist. Nodes left without a same-label
/// partner get a duplicate node attached by an attractive edge.
///
/// Throws TripletError if the batch carries fewer than two labels.
PatchGraph build_graph(std::span<const ClassId> labels, Rng& rng);
PatchGraph build_graph(const SampleBatch& batch, Rng& rng);

/// One triplet per non-duplicate node, anchored at that node. The positive is
/// a uniform attractive neighbour; the negative is a uniform rejective
/// neighbour, or a uniform non-duplicate node of another label when the
/// anchor has no rejective edge.
std::vector<Triplet> extract_triplets(const PatchGraph& g, Rng& rng);

/// Maps node-level triplets to patch indices (a duplicate maps to its source
/// patch, so a duplicated positive shares the anchor's embedding).
std::vector<Triplet> to_patch_triplets(const PatchGraph& g, std::span<const Triplet> triplets);

/// Baseline: `count` triplets with a uniform anchor, a uniform same-label
/// positive (the anchor itself when its label is unique) and a uniform
/// different-label negative. Indices refer to patches directly.
std::vector<Triplet> random_triplets(std::span<const ClassId> labels, std::size_t count, Rng& rng);
std::vector<Triplet> random_triplets(const SampleBatch& batch, std::size_t count, Rng& rng);

/// BFS over attractive edges restricted to each class. Independent of
/// build_graph's internal bookkeeping.
bool check_classwise_connected(const PatchGraph& g);

/// Edge labels and self-loop / duplicate-edge checks.
bool check_edge_constraints(const PatchGraph& g);

/// One edge per line, `A i j` or `R i j`.
void write_edge_list(std::ostream& out, const PatchGraph& g);

std::vector<ClassId> batch_labels(const SampleBatch& batch);

}  // namespace mm
