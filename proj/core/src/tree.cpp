#include "vulnlab/tree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vulnlab/error.hpp"

namespace vulnlab {

namespace {

constexpr double kSumTolerance = 1e-12;

void check_row(const std::vector<double>& row, NodeId v, const char* label) {
    if (row.empty()) {
        std::ostringstream os;
        os << "dangling node " << v << ": non-terminal node has no children";
        throw ValidationError(os.str());
    }
    double sum = 0.0;
    for (double x : row) {
        if (!(x > 0.0) || !std::isfinite(x)) {
            std::ostringstream os;
            os << label << " probability " << x << " at node " << v
               << " is not strictly positive (measures must be equivalent)";
            throw ValidationError(os.str());
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << label << " probabilities do not sum to 1 at node " << v << " (sum = " << sum << ")";
        throw ValidationError(os.str());
    }
}

}  // namespace

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.size() < 2) throw ValidationError("time grid needs at least one period");
    if (times_.front() != 0.0) throw ValidationError("time grid must start at 0");
    for (std::size_t k = 1; k < times_.size(); ++k) {
        if (!(times_[k] > times_[k - 1])) {
            std::ostringstream os;
            os << "time grid not strictly increasing at index " << k;
            throw ValidationError(os.str());
        }
    }
}

TimeGrid TimeGrid::uniform(std::size_t steps, double horizon) {
    if (steps == 0) throw ValidationError("time grid needs at least one period");
    if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");
    std::vector<double> t(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) t[k] = horizon * static_cast<double>(k) / static_cast<double>(steps);
    t.back() = horizon;
    return TimeGrid(std::move(t));
}

TreeSpec TreeSpec::uniform(TimeGrid grid, std::vector<double> p, std::vector<double> q) {
    TreeSpec spec;
    const std::size_t b = p.size();
    std::size_t internal = 0;
    std::size_t level = 1;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
        internal += level;
        level *= b;
    }
    spec.grid = std::move(grid);
    spec.p.assign(internal, p);
    if (!q.empty()) spec.q.assign(internal, q);
    return spec;
}

FiniteTree FiniteTree::build(const TreeSpec& spec) {
    FiniteTree t;
    t.grid_ = spec.grid;
    const std::size_t n = t.grid_.steps();
    if (!spec.q.empty() && !spec.zf.empty())
        throw ValidationError("tree spec gives both Q rows and a terminal density; choose one");

    std::vector<double> pe{1.0};
    std::vector<double> qe{1.0};
    t.time_.push_back(0);
    t.parent_.push_back(0);
    t.level_begin_.push_back(0);

    std::size_t row = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const NodeId lo = t.level_begin_[k];
        const NodeId hi = t.time_.size();
        t.level_begin_.push_back(hi);
        for (NodeId v = lo; v < hi; ++v) {
            if (row >= spec.p.size()) {
                std::ostringstream os;
                os << "dangling node " << v << ": no probability row for a non-terminal node";
                throw ValidationError(os.str());
            }
            const auto& prow = spec.p[row];
            check_row(prow, v, "P");
            if (!spec.q.empty()) {
                if (row >= spec.q.size() || spec.q[row].size() != prow.size()) {
                    std::ostringstream os;
                    os << "Q row at node " << v << " does not match the branching of P";
                    throw ValidationError(os.str());
                }
                check_row(spec.q[row], v, "Q");
            }
            for (std::size_t c = 0; c < prow.size(); ++c) {
                t.time_.push_back(k + 1);
                t.parent_.push_back(v);
                pe.push_back(prow[c]);
                qe.push_back(spec.q.empty() ? prow[c] : spec.q[row][c]);
            }
            ++row;
        }
    }
    if (row != spec.p.size()) {
        std::ostringstream os;
        os << "tree spec lists " << spec.p.size() << " probability rows but the tree has " << row
           << " non-terminal nodes";
        throw ValidationError(os.str());
    }
    t.level_begin_.push_back(t.time_.size());

    const std::size_t count = t.time_.size();
    t.first_child_.assign(count, 0);
    t.child_count_.assign(count, 0);
    for (NodeId v = 1; v < count; ++v) {
        const NodeId par = t.parent_[v];
        if (t.child_count_[par] == 0) t.first_child_[par] = v;
        ++t.child_count_[par];
    }

    const NodeId leaf_lo = t.level_begin_[n];
    for (NodeId v = leaf_lo; v < count; ++v) t.leaf_nodes_.push_back(v);
    t.leaf_begin_.assign(count, 0);
    t.leaf_end_.assign(count, 0);
    for (NodeId v = count; v-- > 0;) {
        if (t.child_count_[v] == 0) {
            t.leaf_begin_[v] = v - leaf_lo;
            t.leaf_end_[v] = v - leaf_lo + 1;
        } else {
            t.leaf_begin_[v] = t.leaf_begin_[t.first_child_[v]];
            t.leaf_end_[v] = t.leaf_end_[t.first_child_[v] + t.child_count_[v] - 1];
        }
    }
    t.path_.assign(t.leaf_nodes_.size() * (n + 1), 0);
    for (std::size_t l = 0; l < t.leaf_nodes_.size(); ++l) {
        NodeId v = t.leaf_nodes_[l];
        for (std::size_t k = n + 1; k-- > 0;) {
            t.path_[l * (n + 1) + k] = v;
            v = t.parent_[v];
        }
    }

    if (!spec.zf.empty()) {
        if (spec.zf.size() != t.leaf_nodes_.size()) {
            std::ostringstream os;
            os << "terminal density has " << spec.zf.size() << " values but the tree has "
               << t.leaf_nodes_.size() << " leaves";
            throw ValidationError(os.str());
        }
        std::vector<double> z(count, 0.0);
        for (std::size_t l = 0; l < spec.zf.size(); ++l) {
            if (!(spec.zf[l] > 0.0) || !std::isfinite(spec.zf[l])) {
                std::ostringstream os;
                os << "terminal density must be strictly positive at leaf " << l << " (node "
                   << t.leaf_nodes_[l] << ")";
                throw ValidationError(os.str());
            }
            z[t.leaf_nodes_[l]] = spec.zf[l];
        }
        for (NodeId v = leaf_lo; v-- > 0;) {
            double s = 0.0;
            for (std::size_t c = 0; c < t.child_count_[v]; ++c) {
                const NodeId ch = t.first_child_[v] + c;
                s += pe[ch] * z[ch];
            }
            z[v] = s;
        }
        for (NodeId v = 1; v < count; ++v) qe[v] = pe[v] * z[v] / z[t.parent_[v]];
    }

    t.p_ = Measure(std::move(pe));
    t.q_ = Measure(std::move(qe));
    return t;
}

void FiniteTree::check_measure(const Measure& m) const {
    if (m.size() != node_count()) {
        std::ostringstream os;
        os << "measure mismatch with tree: " << m.size() << " entries for " << node_count() << " nodes";
        throw ValidationError(os.str());
    }
}

std::vector<double> FiniteTree::node_probabilities(const Measure& m) const {
    check_measure(m);
    std::vector<double> prob(node_count(), 1.0);
    for (NodeId v = 1; v < node_count(); ++v) prob[v] = prob[parent_[v]] * m.edge(v);
    return prob;
}

Measure FiniteTree::measure_from_node_weights(const std::vector<double>& weights) const {
    if (weights.size() != node_count()) throw ValidationError("node weights do not match the tree");
    std::vector<double> e(node_count(), 1.0);
    for (NodeId v = 1; v < node_count(); ++v) {
        const double w = weights[parent_[v]];
        e[v] = w > 0.0 ? weights[v] / w : 1.0 / static_cast<double>(child_count_[parent_[v]]);
    }
    return Measure(std::move(e));
}

double FiniteTree::leaf_probability_given(std::size_t leaf, NodeId v, const Measure& m) const {
    double p = 1.0;
    for (std::size_t k = time_[v] + 1; k <= steps(); ++k) p *= m.edge(path_node(leaf, k));
    return p;
}

double sup_distance(const AdaptedProcess& a, const AdaptedProcess& b) {
    if (a.size() != b.size()) throw ValidationError("processes live on different trees");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

NodeMask all_nodes_mask(const FiniteTree& tree) { return NodeMask(tree.node_count(), 1); }

NodeMask terminal_mask(const FiniteTree& tree) {
    NodeMask m(tree.node_count(), 0);
    for (NodeId v = tree.nodes_begin(tree.steps()); v < tree.node_count(); ++v) m[v] = 1;
    return m;
}

StoppingTime StoppingTime::from_decisions(const FiniteTree& tree, NodeMask stop) {
    if (stop.size() != tree.node_count()) throw ValidationError("stopping decisions do not match the tree");
    for (NodeId v = 0; v < tree.node_count(); ++v) {
        if (tree.is_terminal(v) && !stop[v]) {
            std::ostringstream os;
            os << "terminal node " << v << " must be a stop node";
            throw ValidationError(os.str());
        }
        if (v > 0 && stop[tree.parent(v)]) stop[v] = 1;
    }
    for (auto& s : stop) s = s ? 1 : 0;
    return StoppingTime(std::move(stop));
}

StoppingTime StoppingTime::at_time(const FiniteTree& tree, std::size_t k) {
    if (k > tree.steps()) throw ValidationError("stopping time index beyond the horizon");
    NodeMask stop(tree.node_count(), 0);
    for (NodeId v = 0; v < tree.node_count(); ++v) stop[v] = tree.time_of(v) >= k ? 1 : 0;
    return StoppingTime(std::move(stop));
}

NodeId StoppingTime::stop_node(const FiniteTree& tree, std::size_t leaf) const {
    for (std::size_t k = 0; k <= tree.steps(); ++k) {
        const NodeId v = tree.path_node(leaf, k);
        if (stop_[v]) return v;
    }
    return tree.leaf_node(leaf);
}

bool StoppingTime::reaches(const FiniteTree& tree, NodeId v) const {
    while (v != 0) {
        v = tree.parent(v);
        if (stop_[v]) return false;
    }
    return true;
}

}  // namespace vulnlab
