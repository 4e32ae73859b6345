#pragma once

#include <vector>

#include "vulnlab/american.hpp"
#include "vulnlab/european.hpp"
#include "vulnlab/filtration.hpp"
#include "vulnlab/instances.hpp"
#include "vulnlab/measure_change.hpp"
#include "vulnlab/random_time.hpp"
#include "vulnlab/tree.hpp"

namespace fixtures {

using namespace vulnlab;

inline FiniteTree coin(std::size_t steps, double up = 0.5, double q_up = -1.0) {
    std::vector<double> q;
    if (q_up >= 0.0) q = {q_up, 1.0 - q_up};
    return FiniteTree::build(TreeSpec::uniform(TimeGrid::uniform(steps, static_cast<double>(steps)), {up, 1.0 - up}, q));
}

// Two-period binary tree with P = 1/2 everywhere and a distinct pricing measure.
inline FiniteTree e2_tree() {
    TreeSpec s;
    s.grid = TimeGrid::uniform(2, 2.0);
    s.p = {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
    s.q = {{0.6, 0.4}, {0.5, 0.5}, {0.25, 0.75}};
    return FiniteTree::build(s);
}

inline ReducedInstance e2_instance() {
    FiniteTree t = e2_tree();
    PayoffSpec p{AdaptedProcess(std::vector<double>{0.5, 0.6, 0.2, 1.0, 0.0, 0.7, 0.4}),
                 AdaptedProcess(std::vector<double>{0.9, 0.5, 0.8, 0.0, 0.0, 0.0, 0.0})};
    ReducedHazard hz = ReducedHazard::make(t, {0.5, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0});
    return {std::move(t), std::move(hz), std::move(p)};
}

// Correlated two-period lab instance: the first-step hazard looks at the time-2 node.
inline ExtendedSpace l2_space() {
    FiniteTree t = coin(2);
    HazardSpec hz;
    hz.path_h = {{0.2, 0.1}, {0.4, 0.3}, {0.6, 0.5}, {0.5, 0.7}};
    return ExtendedSpace::cox_extend(t, hz);
}

inline AdaptedProcess p_martingale(const FiniteTree& t, const std::vector<double>& leaf_values) {
    AdaptedProcess m(t.node_count());
    for (std::size_t l = 0; l < t.leaf_count(); ++l) m[t.leaf_node(l)] = leaf_values[l];
    for (NodeId v = t.node_count(); v-- > 0;)
        if (!t.is_terminal(v)) m[v] = continuation(t, m, v, t.p());
    return m;
}

inline double max_abs(const std::vector<double>& x) {
    double r = 0.0;
    for (double v : x) r = std::max(r, std::abs(v));
    return r;
}

}  // namespace fixtures
