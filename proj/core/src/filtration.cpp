#include "vulnlab/filtration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vulnlab/error.hpp"

namespace vulnlab {

double continuation(const FiniteTree& tree, const AdaptedProcess& x, NodeId v, const Measure& m) {
    double s = 0.0;
    const NodeId c0 = tree.first_child(v);
    for (std::size_t c = 0; c < tree.child_count(v); ++c) s += m.edge(c0 + c) * x[c0 + c];
    return s;
}

AdaptedProcess condexp(const FiniteTree& tree, const AdaptedProcess& x, const Measure& m) {
    tree.check_measure(m);
    if (x.size() != tree.node_count()) throw ValidationError("process does not match the tree");
    AdaptedProcess y = x;
    for (NodeId v = 0; v < tree.node_count(); ++v)
        if (!tree.is_terminal(v)) y[v] = continuation(tree, x, v, m);
    return y;
}

double conditional_expectation(const FiniteTree& tree, const AdaptedProcess& x, NodeId v, std::size_t j,
                               const Measure& m) {
    tree.check_measure(m);
    if (j < tree.time_of(v) || j > tree.steps()) throw ValidationError("target time outside [time(v), N]");
    double s = 0.0;
    for (std::size_t l = tree.leaf_begin(v); l < tree.leaf_end(v); ++l)
        s += tree.leaf_probability_given(l, v, m) * x[tree.path_node(l, j)];
    return s;
}

DoobDecomposition doob_decomposition(const FiniteTree& tree, const AdaptedProcess& x, const Measure& m,
                                     double tolerance) {
    tree.check_measure(m);
    AdaptedProcess b(tree.node_count(), 0.0);
    AdaptedProcess n(tree.node_count(), 0.0);
    n[0] = x[0];
    for (NodeId v = 0; v < tree.node_count(); ++v) {
        if (tree.is_terminal(v)) continue;
        const double drop = x[v] - continuation(tree, x, v, m);
        if (drop < -tolerance) {
            std::ostringstream os;
            os << "input not a supermartingale: conditional increment " << -drop << " at node " << v;
            throw ValidationError(os.str());
        }
        const double db = std::max(drop, 0.0);
        const NodeId c0 = tree.first_child(v);
        for (std::size_t c = 0; c < tree.child_count(v); ++c) {
            b[c0 + c] = b[v] + db;
            n[c0 + c] = x[c0 + c] + b[c0 + c];
        }
    }
    return {std::move(n), std::move(b)};
}

SnellResult snell_envelope(const FiniteTree& tree, const AdaptedProcess& reward, const Measure& m,
                           const NodeMask& allowed) {
    tree.check_measure(m);
    if (allowed.size() != tree.node_count()) throw ValidationError("mask does not match the tree");
    AdaptedProcess value(tree.node_count());
    NodeMask stop(tree.node_count(), 0);
    for (NodeId v = tree.node_count(); v-- > 0;) {
        if (tree.is_terminal(v)) {
            if (!allowed[v]) {
                std::ostringstream os;
                os << "mask excludes terminal node " << v;
                throw ValidationError(os.str());
            }
            value[v] = reward[v];
            stop[v] = 1;
            continue;
        }
        const double cont = continuation(tree, value, v, m);
        if (allowed[v] && reward[v] >= cont) {
            value[v] = reward[v];
            stop[v] = 1;
        } else {
            value[v] = cont;
        }
    }
    return {std::move(value), StoppingTime::from_decisions(tree, std::move(stop))};
}

double evaluate_stopping(const FiniteTree& tree, const AdaptedProcess& reward, const StoppingTime& tau,
                         const Measure& m) {
    const std::vector<double> prob = tree.node_probabilities(m);
    double s = 0.0;
    for (NodeId v = 0; v < tree.node_count(); ++v)
        if (tau.stops_at(v) && tau.reaches(tree, v)) s += prob[v] * reward[v];
    return s;
}

namespace {

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b, std::uint64_t limit) {
    if (a == 0 || b == 0) return 0;
    if (a > limit / b) return limit;
    return std::min(a * b, limit);
}

class Enumerator {
public:
    Enumerator(const FiniteTree& tree, const NodeMask& allowed, const std::function<void(const NodeMask&)>& visit)
        : tree_(tree), allowed_(allowed), visit_(visit), stop_(tree.node_count(), 1) {
        frontier_.push_back(0);
    }

    void run() { step(); }

private:
    void step() {
        if (frontier_.empty()) {
            visit_(stop_);
            return;
        }
        const NodeId v = frontier_.back();
        frontier_.pop_back();
        if (tree_.is_terminal(v)) {
            step();
        } else {
            if (allowed_[v]) step();
            stop_[v] = 0;
            const NodeId c0 = tree_.first_child(v);
            const std::size_t nc = tree_.child_count(v);
            for (std::size_t c = nc; c-- > 0;) frontier_.push_back(c0 + c);
            step();
            frontier_.resize(frontier_.size() - nc);
            stop_[v] = 1;
        }
        frontier_.push_back(v);
    }

    const FiniteTree& tree_;
    const NodeMask& allowed_;
    const std::function<void(const NodeMask&)>& visit_;
    NodeMask stop_;
    std::vector<NodeId> frontier_;
};

}  // namespace

std::uint64_t count_stopping_times(const FiniteTree& tree, const NodeMask& allowed, std::uint64_t cap) {
    if (allowed.size() != tree.node_count()) throw ValidationError("mask does not match the tree");
    const std::uint64_t limit = cap + 1;
    std::vector<std::uint64_t> c(tree.node_count(), 1);
    for (NodeId v = tree.node_count(); v-- > 0;) {
        if (tree.is_terminal(v)) continue;
        std::uint64_t prod = 1;
        const NodeId c0 = tree.first_child(v);
        for (std::size_t i = 0; i < tree.child_count(v); ++i) prod = saturating_mul(prod, c[c0 + i], limit);
        c[v] = std::min(limit, prod + (allowed[v] ? 1 : 0));
    }
    return c[0];
}

void for_each_stopping_time(const FiniteTree& tree, const NodeMask& allowed,
                            const std::function<void(const NodeMask&)>& visit, std::uint64_t cap) {
    const std::uint64_t count = count_stopping_times(tree, allowed, cap);
    if (count > cap) {
        std::ostringstream os;
        os << "stopping-time enumeration exceeds the cap of " << cap;
        throw CapExceeded(os.str());
    }
    Enumerator(tree, allowed, visit).run();
}

std::vector<StoppingTime> enumerate_stopping_times(const FiniteTree& tree, const NodeMask& allowed,
                                                   std::uint64_t cap) {
    std::vector<StoppingTime> out;
    out.reserve(static_cast<std::size_t>(count_stopping_times(tree, allowed, cap)));
    for_each_stopping_time(
        tree, allowed, [&](const NodeMask& d) { out.push_back(StoppingTime::from_decisions(tree, d)); }, cap);
    return out;
}

double martingale_residual(const FiniteTree& tree, const AdaptedProcess& x, const Measure& m) {
    double r = 0.0;
    for (NodeId v = 0; v < tree.node_count(); ++v)
        if (!tree.is_terminal(v)) r = std::max(r, std::abs(continuation(tree, x, v, m) - x[v]));
    return r;
}

}  // namespace vulnlab
