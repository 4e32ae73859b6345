#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace vulnlab {

using NodeId = std::size_t;

// Per-node flag; nonzero means "allowed" (stopping masks) or "stop" (decisions).
using NodeMask = std::vector<std::uint8_t>;

class TimeGrid {
public:
    TimeGrid() = default;
    explicit TimeGrid(std::vector<double> times);

    static TimeGrid uniform(std::size_t steps, double horizon);

    std::size_t steps() const { return times_.size() - 1; }
    double horizon() const { return times_.back(); }
    double operator[](std::size_t k) const { return times_[k]; }
    const std::vector<double>& times() const { return times_; }

private:
    std::vector<double> times_{0.0, 1.0};
};

// One-step transition probabilities indexed by the child node; the root entry is 1.
class Measure {
public:
    Measure() = default;
    explicit Measure(std::vector<double> edge) : edge_(std::move(edge)) {}

    double edge(NodeId v) const { return edge_[v]; }
    std::size_t size() const { return edge_.size(); }
    const std::vector<double>& edges() const { return edge_; }

private:
    std::vector<double> edge_;
};

// Description consumed by FiniteTree::build. Non-terminal nodes are listed in
// breadth-first order; the size of each probability row fixes the branching.
struct TreeSpec {
    TimeGrid grid;
    std::vector<std::vector<double>> p;
    // Optional pricing-measure rows. When empty, Q is derived from zf, or Q = P.
    std::vector<std::vector<double>> q;
    // Optional terminal density dQ/dP restricted to F_T, one value per leaf.
    std::vector<double> zf;

    // Same branching and probabilities at every node.
    static TreeSpec uniform(TimeGrid grid, std::vector<double> p, std::vector<double> q = {});
};

class FiniteTree {
public:
    static FiniteTree build(const TreeSpec& spec);

    const TimeGrid& grid() const { return grid_; }
    std::size_t steps() const { return grid_.steps(); }
    std::size_t node_count() const { return time_.size(); }
    std::size_t leaf_count() const { return leaf_nodes_.size(); }

    std::size_t time_of(NodeId v) const { return time_[v]; }
    NodeId parent(NodeId v) const { return parent_[v]; }
    NodeId first_child(NodeId v) const { return first_child_[v]; }
    std::size_t child_count(NodeId v) const { return child_count_[v]; }
    bool is_terminal(NodeId v) const { return child_count_[v] == 0; }

    // Nodes at time k occupy the contiguous id range [nodes_begin(k), nodes_end(k)).
    NodeId nodes_begin(std::size_t k) const { return level_begin_[k]; }
    NodeId nodes_end(std::size_t k) const { return level_begin_[k + 1]; }

    // Leaves below v occupy the contiguous leaf-index range [leaf_begin(v), leaf_end(v)).
    std::size_t leaf_begin(NodeId v) const { return leaf_begin_[v]; }
    std::size_t leaf_end(NodeId v) const { return leaf_end_[v]; }
    NodeId leaf_node(std::size_t leaf) const { return leaf_nodes_[leaf]; }
    NodeId path_node(std::size_t leaf, std::size_t k) const { return path_[leaf * (steps() + 1) + k]; }

    const Measure& p() const { return p_; }
    const Measure& q() const { return q_; }

    // Throws unless m is a valid transition law on this tree.
    void check_measure(const Measure& m) const;
    // Unconditional node probabilities under m.
    std::vector<double> node_probabilities(const Measure& m) const;
    // Transition law induced by nonnegative node weights (weight of a node = sum over children).
    Measure measure_from_node_weights(const std::vector<double>& weights) const;
    // Conditional probability of every leaf below v given v.
    double leaf_probability_given(std::size_t leaf, NodeId v, const Measure& m) const;

private:
    TimeGrid grid_;
    std::vector<std::size_t> time_;
    std::vector<NodeId> parent_;
    std::vector<NodeId> first_child_;
    std::vector<std::size_t> child_count_;
    std::vector<NodeId> level_begin_;
    std::vector<std::size_t> leaf_begin_;
    std::vector<std::size_t> leaf_end_;
    std::vector<NodeId> leaf_nodes_;
    std::vector<NodeId> path_;
    Measure p_;
    Measure q_;
};

class AdaptedProcess {
public:
    AdaptedProcess() = default;
    explicit AdaptedProcess(std::size_t nodes, double fill = 0.0) : v_(nodes, fill) {}
    explicit AdaptedProcess(std::vector<double> values) : v_(std::move(values)) {}

    static AdaptedProcess constant(const FiniteTree& tree, double c) { return AdaptedProcess(tree.node_count(), c); }
    template <class F>
    static AdaptedProcess generate(const FiniteTree& tree, F&& f) {
        AdaptedProcess x(tree.node_count());
        for (NodeId v = 0; v < tree.node_count(); ++v) x.v_[v] = f(v);
        return x;
    }

    double operator[](NodeId v) const { return v_[v]; }
    double& operator[](NodeId v) { return v_[v]; }
    std::size_t size() const { return v_.size(); }
    const std::vector<double>& values() const { return v_; }

private:
    std::vector<double> v_;
};

double sup_distance(const AdaptedProcess& a, const AdaptedProcess& b);

NodeMask all_nodes_mask(const FiniteTree& tree);
NodeMask terminal_mask(const FiniteTree& tree);

class StoppingTime {
public:
    StoppingTime() = default;

    // Canonical form: every node below the first stop on its path is marked stop.
    static StoppingTime from_decisions(const FiniteTree& tree, NodeMask stop);
    static StoppingTime at_time(const FiniteTree& tree, std::size_t k);
    static StoppingTime at_horizon(const FiniteTree& tree) { return at_time(tree, tree.steps()); }

    bool stops_at(NodeId v) const { return stop_[v] != 0; }
    const NodeMask& decisions() const { return stop_; }
    NodeId stop_node(const FiniteTree& tree, std::size_t leaf) const;
    // True when v is on a path and no strict ancestor of v stops.
    bool reaches(const FiniteTree& tree, NodeId v) const;

    friend bool operator==(const StoppingTime& a, const StoppingTime& b) { return a.stop_ == b.stop_; }

private:
    explicit StoppingTime(NodeMask stop) : stop_(std::move(stop)) {}
    NodeMask stop_;
};

}  // namespace vulnlab
