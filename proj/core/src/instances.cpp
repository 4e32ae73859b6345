#include "vulnlab/instances.hpp"

#include <algorithm>
#include <cmath>

#include "vulnlab/filtration.hpp"

namespace vulnlab {

namespace {

double uniform(Rng& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

std::size_t uniform_int(Rng& rng, std::size_t a, std::size_t b) {
    return std::uniform_int_distribution<std::size_t>(a, b)(rng);
}

std::vector<double> random_row(Rng& rng, std::size_t b) {
    std::vector<double> row(b);
    double s = 0.0;
    for (double& x : row) s += (x = uniform(rng, 0.2, 1.0));
    for (double& x : row) x /= s;
    return row;
}

}  // namespace

FiniteTree random_tree(Rng& rng, const InstanceOptions& opt) {
    for (;;) {
        const std::size_t n = uniform_int(rng, opt.min_periods, opt.max_periods);
        TreeSpec spec;
        spec.grid = TimeGrid::uniform(n, 1.0);
        std::size_t width = 1;
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t next = 0;
            for (std::size_t i = 0; i < width; ++i) {
                const std::size_t b = uniform_int(rng, 1, opt.max_branching);
                spec.p.push_back(random_row(rng, b));
                spec.q.push_back(opt.distinct_pricing_measure ? random_row(rng, b) : spec.p.back());
                next += b;
            }
            width = next;
        }
        FiniteTree t = FiniteTree::build(spec);
        if (count_stopping_times(t, all_nodes_mask(t), opt.max_stopping_times + 1) <= opt.max_stopping_times)
            return t;
    }
}

HazardSpec random_hazard_spec(Rng& rng, const FiniteTree& t, const InstanceOptions& opt) {
    HazardSpec hz;
    hz.node_h.assign(t.node_count(), 0.0);
    for (NodeId v = 0; v < t.node_count(); ++v)
        if (!t.is_terminal(v)) hz.node_h[v] = uniform(rng, 0.0, opt.max_h);
    if (opt.path_dependent_hazard) {
        hz.path_h.assign(t.leaf_count(), std::vector<double>(t.steps(), 0.0));
        for (NodeId v = 0; v < t.node_count(); ++v) {
            if (t.is_terminal(v)) continue;
            const std::size_t k = t.time_of(v);
            // Leaves sharing the same time-(k+1) node share the hazard, so it stays F_{k+1}-measurable.
            const NodeId c0 = t.first_child(v);
            for (std::size_t c = 0; c < t.child_count(v); ++c) {
                const double h = uniform(rng, 0.0, opt.max_h);
                for (std::size_t l = t.leaf_begin(c0 + c); l < t.leaf_end(c0 + c); ++l) hz.path_h[l][k] = h;
            }
        }
    }
    return hz;
}

ReducedHazard random_reduced_hazard(Rng& rng, const FiniteTree& t, const InstanceOptions& opt) {
    std::vector<double> d(t.node_count(), 0.0);
    for (NodeId v = 0; v < t.node_count(); ++v) {
        if (t.is_terminal(v)) continue;
        if (uniform(rng, 0.0, 1.0) < opt.zero_hazard_probability) continue;
        d[v] = uniform(rng, 0.25, 1.0);
    }
    return ReducedHazard::make(t, std::move(d));
}

PayoffSpec random_payoff(Rng& rng, const FiniteTree& t, const ReducedHazard& hz, bool dominated) {
    PayoffSpec p{AdaptedProcess(t.node_count()), AdaptedProcess(t.node_count())};
    for (NodeId v = 0; v < t.node_count(); ++v) {
        p.P[v] = uniform(rng, 0.0, 1.0);
        p.R[v] = uniform(rng, 0.0, 1.0);
        if (dominated && !t.is_terminal(v) && hz.delta[v] > 0.0) p.R[v] = uniform(rng, p.P[v], 1.0);
    }
    return p;
}

std::vector<double> random_centered_phi_pr(Rng& rng, const ExtendedSpace& ext) {
    const FiniteTree& t = ext.tree();
    const AtomMeasure& w = ext.probabilities();
    std::vector<double> x(ext.atom_count(), 0.0);
    for (std::size_t j = 1; j <= t.steps(); ++j) {
        for (NodeId v = t.nodes_begin(j); v < t.nodes_end(j); ++v) {
            double sw = 0.0, sx = 0.0;
            for (std::size_t l = t.leaf_begin(v); l < t.leaf_end(v); ++l) {
                const std::size_t a = ext.atom(l, j);
                if (!(w[a] > 0.0)) continue;
                x[a] = uniform(rng, -0.8, 0.8);
                sw += w[a];
                sx += w[a] * x[a];
            }
            if (!(sw > 0.0)) continue;
            const double mean = sx / sw;
            double lo = 0.0;
            for (std::size_t l = t.leaf_begin(v); l < t.leaf_end(v); ++l) {
                const std::size_t a = ext.atom(l, j);
                if (!(w[a] > 0.0)) continue;
                x[a] -= mean;
                lo = std::min(lo, x[a]);
            }
            if (lo < -0.9) {
                const double s = 0.9 / -lo;
                for (std::size_t l = t.leaf_begin(v); l < t.leaf_end(v); ++l) x[ext.atom(l, j)] *= s;
            }
        }
    }
    return x;
}

PhiControl random_phi(Rng& rng, const ExtendedSpace& ext) {
    const FiniteTree& t = ext.tree();
    const ProjectionBundle b = projections(ext);
    PhiControl phi = PhiControl::zero(ext);
    for (NodeId v = 1; v < t.node_count(); ++v) {
        double f = uniform(rng, -0.9, 1.5);
        const double dg = b.GammaTilde[v] - b.GammaTilde[t.parent(v)];
        if (dg > 0.0) f = std::min(f, 0.9 / dg);
        phi.phi_o[v] = f;
    }
    phi.phi_pr = random_centered_phi_pr(rng, ext);
    return phi;
}

ReducedInstance random_reduced_instance(Rng& rng, const InstanceOptions& opt, bool dominated) {
    FiniteTree t = random_tree(rng, opt);
    ReducedHazard hz = random_reduced_hazard(rng, t, opt);
    PayoffSpec p = random_payoff(rng, t, hz, dominated);
    return {std::move(t), std::move(hz), std::move(p)};
}

ReducedInstance one_period_instance() {
    FiniteTree t = FiniteTree::build(TreeSpec::uniform(TimeGrid::uniform(1, 1.0), {0.5, 0.5}));
    PayoffSpec p{AdaptedProcess(std::vector<double>{0.5, 1.0, 1.0}), AdaptedProcess::constant(t, 2.0)};
    ReducedHazard hz = ReducedHazard::make(t, {0.5, 0.0, 0.0});
    return {std::move(t), std::move(hz), std::move(p)};
}

}  // namespace vulnlab
