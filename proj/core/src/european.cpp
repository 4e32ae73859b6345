#include "vulnlab/european.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vulnlab/error.hpp"
#include "vulnlab/filtration.hpp"

namespace vulnlab {

namespace {

void check_sizes(const FiniteTree& t, const PayoffSpec& payoff, const ReducedHazard& hz) {
    payoff.validate(t);
    if (hz.delta.size() != t.node_count()) throw ValidationError("hazard increments do not match the tree");
}

std::vector<double> increments(const FiniteTree& t, const AdaptedProcess& v) {
    std::vector<double> z(t.node_count(), 0.0);
    for (NodeId x = 0; x < t.node_count(); ++x) {
        if (t.is_terminal(x)) continue;
        const double e = continuation(t, v, x, t.q());
        const NodeId c0 = t.first_child(x);
        for (std::size_t c = 0; c < t.child_count(x); ++c) z[c0 + c] = v[c0 + c] - e;
    }
    return z;
}

template <class Step>
EuroSolveReport backward(const FiniteTree& t, const PayoffSpec& payoff, const std::optional<StoppingTime>& sigma,
                         Step&& step) {
    EuroSolveReport r;
    r.value = AdaptedProcess(t.node_count());
    for (NodeId x = t.node_count(); x-- > 0;) {
        if (t.is_terminal(x) || (sigma && sigma->stops_at(x))) {
            r.value[x] = payoff.P[x];
            continue;
        }
        r.value[x] = step(x, continuation(t, r.value, x, t.q()));
    }
    r.martingale_increments = increments(t, r.value);
    return r;
}

void check_lambda(const FiniteTree& t, const AdaptedProcess& lambda) {
    if (lambda.size() != t.node_count()) throw ValidationError("lambda does not match the tree");
    for (NodeId v = 0; v < t.node_count(); ++v) {
        if (t.is_terminal(v)) continue;
        if (!(lambda[v] > 0.0) || !std::isfinite(lambda[v])) {
            std::ostringstream os;
            os << "lambda must be positive and finite; got " << lambda[v] << " at node " << v;
            throw ValidationError(os.str());
        }
    }
}

double penalized_step(double e, double r, double nd) { return e >= r ? e : (e + nd * r) / (1.0 + nd); }

}  // namespace

ReducedHazard ReducedHazard::make(const FiniteTree& tree, std::vector<double> delta, double cap) {
    if (delta.size() != tree.node_count()) {
        std::ostringstream os;
        os << "hazard increments have " << delta.size() << " entries for " << tree.node_count() << " nodes";
        throw ValidationError(os.str());
    }
    ReducedHazard hz;
    std::vector<double> cum(tree.node_count(), 0.0);
    bool capped = false;
    for (NodeId v = 0; v < tree.node_count(); ++v) {
        if (tree.is_terminal(v)) {
            delta[v] = 0.0;
            continue;
        }
        if (!(delta[v] >= 0.0) || !std::isfinite(delta[v])) {
            std::ostringstream os;
            os << "hazard increment must be nonnegative and finite; got " << delta[v] << " at node " << v;
            throw ValidationError(os.str());
        }
        const double before = v == 0 ? 0.0 : cum[tree.parent(v)];
        if (before + delta[v] > cap) {
            delta[v] = std::max(0.0, cap - before);
            capped = true;
        }
        cum[v] = before + delta[v];
        const NodeId c0 = tree.first_child(v);
        for (std::size_t c = 0; c < tree.child_count(v); ++c) cum[c0 + c] = cum[v];
    }
    if (capped) {
        std::ostringstream os;
        os << "cumulative hazard capped at " << cap;
        hz.warnings.push_back(os.str());
    }
    hz.delta = std::move(delta);
    return hz;
}

ReducedHazard ReducedHazard::constant(const FiniteTree& tree, double d, double cap) {
    return make(tree, std::vector<double>(tree.node_count(), d), cap);
}

NodeMask ReducedHazard::support(const FiniteTree& tree) const {
    NodeMask m(tree.node_count(), 0);
    for (NodeId v = 0; v < tree.node_count(); ++v) m[v] = in_support(tree, v) ? 1 : 0;
    return m;
}

ReducedHazard reduced_hazard_from_projections(const FiniteTree& t, const ProjectionBundle& b) {
    std::vector<double> delta(t.node_count(), 0.0);
    for (NodeId v = 0; v < t.node_count(); ++v) {
        if (t.is_terminal(v)) continue;
        const NodeId c0 = t.first_child(v);
        const double d0 = b.GammaTilde[c0] - b.GammaTilde[v];
        for (std::size_t c = 1; c < t.child_count(v); ++c) {
            const double dc = b.GammaTilde[c0 + c] - b.GammaTilde[v];
            if (std::abs(dc - d0) > 1e-12) {
                std::ostringstream os;
                os << "optional hazard increments are not predictable below node " << v;
                throw ValidationError(os.str());
            }
        }
        if (!(d0 < 1.0)) {
            std::ostringstream os;
            os << "certain default after node " << v << " has no reduced-form hazard";
            throw NumericalError(os.str());
        }
        delta[v] = d0 / (1.0 - d0);
    }
    return ReducedHazard::make(t, std::move(delta), std::numeric_limits<double>::infinity());
}

void PayoffSpec::validate(const FiniteTree& tree) const {
    if (P.size() != tree.node_count() || R.size() != tree.node_count())
        throw ValidationError("payoff processes do not match the tree");
    for (NodeId v = 0; v < tree.node_count(); ++v) {
        if (!(P[v] >= 0.0) || !std::isfinite(P[v]) || !(R[v] >= 0.0) || !std::isfinite(R[v])) {
            std::ostringstream os;
            os << "payoffs must be nonnegative and bounded; node " << v << " has P = " << P[v] << ", R = " << R[v];
            throw ValidationError(os.str());
        }
    }
}

EuroSolveReport reduced_price_linear(const FiniteTree& t, const AdaptedProcess& lambda, const PayoffSpec& payoff,
                                     const ReducedHazard& hz, const std::optional<StoppingTime>& sigma) {
    check_sizes(t, payoff, hz);
    check_lambda(t, lambda);
    return backward(t, payoff, sigma, [&](NodeId x, double e) {
        const double a = lambda[x] * hz.delta[x];
        return (e + a * payoff.R[x]) / (1.0 + a);
    });
}

EuroSolveReport reduced_price_closed_form(const FiniteTree& t, const AdaptedProcess& lambda, const PayoffSpec& payoff,
                                          const ReducedHazard& hz, const std::optional<StoppingTime>& sigma) {
    check_sizes(t, payoff, hz);
    check_lambda(t, lambda);
    const std::size_t n = t.steps();
    const StoppingTime horizon = sigma ? *sigma : StoppingTime::at_horizon(t);
    EuroSolveReport r;
    r.value = AdaptedProcess(t.node_count());
    for (NodeId x = 0; x < t.node_count(); ++x) {
        if (horizon.stops_at(x)) {
            r.value[x] = payoff.P[x];
            continue;
        }
        const std::size_t k0 = t.time_of(x);
        double total = 0.0;
        for (std::size_t l = t.leaf_begin(x); l < t.leaf_end(x); ++l) {
            double disc = 1.0;
            double acc = 0.0;
            NodeId stop = t.leaf_node(l);
            for (std::size_t u = k0; u <= n; ++u) {
                const NodeId node = t.path_node(l, u);
                if (horizon.stops_at(node)) {
                    stop = node;
                    break;
                }
                const double a = lambda[node] * hz.delta[node];
                acc += a * payoff.R[node] * disc / (1.0 + a);
                disc /= 1.0 + a;
            }
            total += t.leaf_probability_given(l, x, t.q()) * (acc + payoff.P[stop] * disc);
        }
        r.value[x] = total;
    }
    r.martingale_increments = increments(t, r.value);
    return r;
}

EuroSolveReport penalized_european(const FiniteTree& t, double n, const PayoffSpec& payoff, const ReducedHazard& hz) {
    check_sizes(t, payoff, hz);
    if (!(n >= 1.0)) throw ValidationError("penalty level must be at least 1");
    return backward(t, payoff, std::nullopt,
                    [&](NodeId x, double e) { return penalized_step(e, payoff.R[x], n * hz.delta[x]); });
}

EuroSolveReport constrained_snell(const FiniteTree& t, const PayoffSpec& payoff, const ReducedHazard& hz) {
    check_sizes(t, payoff, hz);
    AdaptedProcess reward = payoff.R;
    for (NodeId v = t.nodes_begin(t.steps()); v < t.node_count(); ++v) reward[v] = payoff.P[v];
    SnellResult s = snell_envelope(t, reward, t.q(), hz.support(t));
    EuroSolveReport r;
    r.value = std::move(s.value);
    r.martingale_increments = increments(t, r.value);
    r.tau_star = std::move(s.tau_star);
    return r;
}

EuroSolveReport sup_over_phi(const FiniteTree& t, double n, const PayoffSpec& payoff, const ReducedHazard& hz,
                             SupMode mode, std::size_t grid_points) {
    check_sizes(t, payoff, hz);
    if (!(n >= 1.0)) throw ValidationError("penalty level must be at least 1");
    if (mode == SupMode::closed_form) {
        return backward(t, payoff, std::nullopt, [&](NodeId x, double e) {
            const double r = payoff.R[x];
            if (r > e) {
                const double a = n * hz.delta[x];
                return (e + a * r) / (1.0 + a);
            }
            return e;
        });
    }
    if (grid_points < 2) throw ValidationError("grid needs at least two points");
    std::vector<double> grid(grid_points);
    const double lo = std::ldexp(1.0, -6);
    for (std::size_t i = 0; i < grid_points; ++i)
        grid[i] = lo * std::pow(n / lo, static_cast<double>(i) / static_cast<double>(grid_points - 1));
    grid.back() = n;
    return backward(t, payoff, std::nullopt, [&](NodeId x, double e) {
        double best = e;  // lambda -> 0
        for (double lam : grid) {
            const double a = lam * hz.delta[x];
            best = std::max(best, (e + a * payoff.R[x]) / (1.0 + a));
        }
        return best;
    });
}

std::vector<double> default_penalty_ladder(std::size_t max_exponent) {
    std::vector<double> ladder;
    for (std::size_t k = 0; k <= max_exponent; ++k) ladder.push_back(std::ldexp(1.0, static_cast<int>(k)));
    return ladder;
}

std::vector<ConvergencePoint> dirac_convergence_check(const FiniteTree& t, const PayoffSpec& payoff,
                                                      const ReducedHazard& hz, const StoppingTime& nu,
                                                      const std::vector<double>& ladder) {
    check_sizes(t, payoff, hz);
    for (NodeId v = 0; v < t.node_count(); ++v) {
        if (nu.stops_at(v) && nu.reaches(t, v) && !hz.in_support(t, v)) {
            std::ostringstream os;
            os << "nu stops at node " << v << " outside the support of the hazard";
            throw ValidationError(os.str());
        }
    }
    const std::size_t n = t.steps();
    std::vector<ConvergencePoint> out;
    for (double level : ladder) {
        double gap = 0.0;
        for (std::size_t l = 0; l < t.leaf_count(); ++l) {
            const NodeId start = nu.stop_node(t, l);
            const std::size_t s = t.time_of(start);
            double disc = 1.0;
            double acc = 0.0;
            for (std::size_t u = s; u < n; ++u) {
                const NodeId node = t.path_node(l, u);
                const double a = level * hz.delta[node];
                acc += a * payoff.R[node] * disc / (1.0 + a);
                disc /= 1.0 + a;
            }
            const double value = acc + payoff.P[t.leaf_node(l)] * disc;
            const double target = s == n ? payoff.P[start] : payoff.R[start];
            gap = std::max(gap, std::abs(value - target));
        }
        out.push_back({level, gap});
    }
    return out;
}

DualitySweep european_duality(const FiniteTree& t, const PayoffSpec& payoff, const ReducedHazard& hz,
                              const std::vector<double>& ladder) {
    DualitySweep s;
    s.limit = constrained_snell(t, payoff, hz);
    AdaptedProcess prev;
    for (double level : ladder) {
        EuroSolveReport r = penalized_european(t, level, payoff, hz);
        if (prev.size() == r.value.size())
            for (NodeId v = 0; v < t.node_count(); ++v)
                if (r.value[v] < prev[v] - 1e-15 * std::max(1.0, std::abs(prev[v]))) s.monotone = false;
        s.trace.push_back({level, sup_distance(r.value, s.limit.value)});
        prev = r.value;
        s.last = std::move(r);
    }
    s.last.trace = s.trace;
    return s;
}

BermudanComparison bermudan_experiment(const FiniteTree& t, const PayoffSpec& payoff, const ReducedHazard& hz) {
    check_sizes(t, payoff, hz);
    BermudanComparison c;
    NodeMask mask = terminal_mask(t);
    for (std::size_t k = 0; k < t.steps(); ++k) {
        bool all = true;
        for (NodeId v = t.nodes_begin(k); v < t.nodes_end(k); ++v) all = all && hz.delta[v] > 0.0;
        if (!all) continue;
        c.exercise_times.push_back(k);
        for (NodeId v = t.nodes_begin(k); v < t.nodes_end(k); ++v) mask[v] = 1;
    }
    AdaptedProcess reward = payoff.R;
    for (NodeId v = t.nodes_begin(t.steps()); v < t.node_count(); ++v) reward[v] = payoff.P[v];
    c.constrained_value = constrained_snell(t, payoff, hz).value[0];
    c.bermudan_value = snell_envelope(t, reward, t.q(), mask).value[0];
    return c;
}

}  // namespace vulnlab
