#include "vulnlab/american.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vulnlab/error.hpp"

namespace vulnlab {

Generator Generator::zero() { return Generator{}; }

Generator Generator::linear(AdaptedProcess lambda, AdaptedProcess R) {
    Generator g;
    g.kind_ = Kind::linear;
    g.lambda_ = std::move(lambda);
    g.R_ = std::move(R);
    return g;
}

Generator Generator::penalty_up(double n, AdaptedProcess R) {
    Generator g;
    g.kind_ = Kind::penalty_up;
    g.n_ = n;
    g.R_ = std::move(R);
    return g;
}

Generator Generator::penalty_down(double n, AdaptedProcess R) {
    Generator g;
    g.kind_ = Kind::penalty_down;
    g.n_ = n;
    g.R_ = std::move(R);
    return g;
}

Generator Generator::custom(std::function<double(NodeId, double)> f) {
    Generator g;
    g.kind_ = Kind::custom;
    g.f_ = std::move(f);
    return g;
}

double Generator::operator()(NodeId v, double y) const {
    switch (kind_) {
        case Kind::zero: return 0.0;
        case Kind::linear: return lambda_[v] * (R_[v] - y);
        case Kind::penalty_up: return n_ * std::max(R_[v] - y, 0.0);
        case Kind::penalty_down: return -n_ * std::max(y - R_[v], 0.0);
        case Kind::custom: return f_(v, y);
    }
    return 0.0;
}

double Generator::solve(NodeId v, double e, double d) const {
    switch (kind_) {
        case Kind::zero: return e;
        case Kind::linear: {
            const double a = lambda_[v] * d;
            return (e + a * R_[v]) / (1.0 + a);
        }
        case Kind::penalty_up: {
            if (e >= R_[v]) return e;
            const double a = n_ * d;
            return (e + a * R_[v]) / (1.0 + a);
        }
        case Kind::penalty_down: {
            if (e <= R_[v]) return e;
            const double a = n_ * d;
            return (e + a * R_[v]) / (1.0 + a);
        }
        case Kind::custom: break;
    }
    if (d == 0.0) return e;
    // g(y) = y - e - f(y) d is strictly increasing for a nonincreasing driver.
    auto g = [&](double y) { return y - e - f_(v, y) * d; };
    double lo = e, hi = e;
    double step = 1.0 + std::abs(e);
    for (int i = 0; i < 200 && g(lo) > 0.0; ++i, step *= 2.0) lo = e - step;
    step = 1.0 + std::abs(e);
    for (int i = 0; i < 200 && g(hi) < 0.0; ++i, step *= 2.0) hi = e + step;
    const double glo = g(lo), ghi = g(hi);
    if (!(glo <= 0.0 && ghi >= 0.0) || f_(v, hi) > f_(v, lo) + 1e-12) {
        std::ostringstream os;
        os << "generator not solvable in one implicit step (non-monotone) at node " << v;
        throw ValidationError(os.str());
    }
    for (int i = 0; i < 400 && hi - lo > 0.0; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double gm = g(mid);
        const double fm = f_(v, mid);
        if (fm > f_(v, lo) + 1e-12 || fm < f_(v, hi) - 1e-12) {
            std::ostringstream os;
            os << "generator not solvable in one implicit step (non-monotone) at node " << v;
            throw ValidationError(os.str());
        }
        (gm < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double ReflectedSolveReport::max_skorokhod() const {
    double r = 0.0;
    for (double x : skorokhod_residuals) r = std::max(r, std::abs(x));
    return r;
}

ReflectedSolveReport reflected_gbsde_solve(const FiniteTree& t, const Generator& f,
                                           const std::optional<AdaptedProcess>& obstacle,
                                           const AdaptedProcess& terminal, const ReducedHazard& hz) {
    if (terminal.size() != t.node_count() || hz.delta.size() != t.node_count() ||
        (obstacle && obstacle->size() != t.node_count()))
        throw ValidationError("reflected solve inputs do not match the tree");
    ReflectedSolveReport r;
    r.value = AdaptedProcess(t.node_count());
    r.K_increments.assign(t.node_count(), 0.0);
    r.skorokhod_residuals.assign(t.node_count(), 0.0);
    r.martingale_increments.assign(t.node_count(), 0.0);
    for (NodeId v = t.node_count(); v-- > 0;) {
        if (t.is_terminal(v)) {
            r.value[v] = terminal[v];
            continue;
        }
        const double e = continuation(t, r.value, v, t.q());
        const double y = f.solve(v, e, hz.delta[v]);
        double val = y;
        if (obstacle && (*obstacle)[v] > y) val = (*obstacle)[v];
        r.value[v] = val;
        r.K_increments[v] = val - y;
        if (obstacle) r.skorokhod_residuals[v] = (val - (*obstacle)[v]) * r.K_increments[v];
        const NodeId c0 = t.first_child(v);
        for (std::size_t c = 0; c < t.child_count(v); ++c) r.martingale_increments[c0 + c] = r.value[c0 + c] - e;
    }
    return r;
}

Weighting synthetic_weighting(const FiniteTree& t, const ReducedHazard& hz) {
    if (hz.delta.size() != t.node_count()) throw ValidationError("hazard increments do not match the tree");
    Weighting w{AdaptedProcess(t.node_count(), 1.0), AdaptedProcess(t.node_count(), 0.0), hz};
    for (NodeId v = 0; v < t.node_count(); ++v) {
        if (t.is_terminal(v)) continue;
        const double next = w.G[v] / (1.0 + hz.delta[v]);
        w.dAo_next[v] = w.G[v] - next;
        const NodeId c0 = t.first_child(v);
        for (std::size_t c = 0; c < t.child_count(v); ++c) w.G[c0 + c] = next;
    }
    return w;
}

Weighting weighting_from_projections(const FiniteTree& t, const ProjectionBundle& b) {
    Weighting w{b.G, AdaptedProcess(t.node_count(), 0.0), reduced_hazard_from_projections(t, b)};
    for (NodeId v = 0; v < t.node_count(); ++v) {
        if (t.is_terminal(v)) continue;
        const NodeId c0 = t.first_child(v);
        for (std::size_t c = 0; c < t.child_count(v); ++c) {
            if (std::abs(b.Gtilde[c0 + c] - b.G[v]) > 1e-12) {
                std::ostringstream os;
                os << "weighted route needs m constant across the step after node " << v;
                throw ValidationError(os.str());
            }
        }
        w.dAo_next[v] = b.dAo[c0];
    }
    return w;
}

WeightedComparison rbsde_vs_weighted_optstop(const FiniteTree& t, const PayoffSpec& payoff, const Weighting& w) {
    payoff.validate(t);
    if (w.G.size() != t.node_count() || w.dAo_next.size() != t.node_count())
        throw ValidationError("weighting does not match the tree");
    for (NodeId v = 0; v < t.node_count(); ++v)
        if (!(w.G[v] > 0.0)) {
            std::ostringstream os;
            os << "G = 0 at node " << v;
            throw NumericalError(os.str());
        }
    AdaptedProcess integral(t.node_count(), 0.0);
    for (NodeId v = 1; v < t.node_count(); ++v) {
        const NodeId par = t.parent(v);
        integral[v] = integral[par] + payoff.R[par] * w.dAo_next[par];
    }
    AdaptedProcess xi(t.node_count());
    for (NodeId v = 0; v < t.node_count(); ++v) xi[v] = payoff.P[v] * w.G[v] + integral[v];
    const SnellResult s = snell_envelope(t, xi, t.q(), all_nodes_mask(t));

    WeightedComparison c;
    c.weighted = AdaptedProcess(t.node_count());
    for (NodeId v = 0; v < t.node_count(); ++v) c.weighted[v] = (s.value[v] - integral[v]) / w.G[v];
    const ReflectedSolveReport r = reflected_gbsde_solve(
        t, Generator::linear(AdaptedProcess::constant(t, 1.0), payoff.R), payoff.P, payoff.P, w.hz);
    c.reflected = r.value;
    c.max_gap = sup_distance(c.weighted, c.reflected);
    c.max_skorokhod = r.max_skorokhod();
    return c;
}

ReflectedSolveReport penalized_american_upper(const FiniteTree& t, double n, const PayoffSpec& payoff,
                                              const ReducedHazard& hz) {
    payoff.validate(t);
    if (!(n >= 1.0)) throw ValidationError("penalty level must be at least 1");
    return reflected_gbsde_solve(t, Generator::penalty_up(n, payoff.R), payoff.P, payoff.P, hz);
}

ReflectedSolveReport penalized_american_lower(const FiniteTree& t, double n, const PayoffSpec& payoff,
                                              const ReducedHazard& hz) {
    payoff.validate(t);
    if (!(n >= 1.0)) throw ValidationError("penalty level must be at least 1");
    return reflected_gbsde_solve(t, Generator::penalty_down(n, payoff.R), payoff.P, payoff.P, hz);
}

AdaptedProcess upper_reward(const FiniteTree& t, const PayoffSpec& payoff, const ReducedHazard& hz) {
    payoff.validate(t);
    AdaptedProcess z(t.node_count());
    for (NodeId v = 0; v < t.node_count(); ++v) {
        if (t.is_terminal(v))
            z[v] = payoff.P[v];
        else
            z[v] = hz.delta[v] > 0.0 ? std::max(payoff.P[v], payoff.R[v]) : payoff.P[v];
    }
    return z;
}

SnellResult american_upper_price(const FiniteTree& t, const PayoffSpec& payoff, const ReducedHazard& hz) {
    return snell_envelope(t, upper_reward(t, payoff, hz), t.q(), all_nodes_mask(t));
}

bool upper_dominates_on_support(const FiniteTree& t, const PayoffSpec& payoff, const ReducedHazard& hz) {
    for (NodeId v = 0; v < t.node_count(); ++v)
        if (!t.is_terminal(v) && hz.delta[v] > 0.0 && payoff.P[v] > payoff.R[v]) return false;
    return true;
}

namespace {

void require_domination(const FiniteTree& t, const PayoffSpec& payoff, const ReducedHazard& hz) {
    for (NodeId v = 0; v < t.node_count(); ++v)
        if (!t.is_terminal(v) && hz.delta[v] > 0.0 && payoff.P[v] > payoff.R[v]) {
            std::ostringstream os;
            os << "P <= R violated on the support at node " << v;
            throw ValidationError(os.str());
        }
}

}  // namespace

GameValueReport constrained_dynkin_game(const FiniteTree& t, const PayoffSpec& payoff, const ReducedHazard& hz) {
    payoff.validate(t);
    if (hz.delta.size() != t.node_count()) throw ValidationError("hazard increments do not match the tree");
    require_domination(t, payoff, hz);
    GameValueReport g;
    g.value = AdaptedProcess(t.node_count());
    NodeMask sigma(t.node_count(), 0), tau(t.node_count(), 0);
    for (NodeId v = t.node_count(); v-- > 0;) {
        if (t.is_terminal(v)) {
            g.value[v] = payoff.P[v];
            sigma[v] = tau[v] = 1;
            continue;
        }
        const double e = continuation(t, g.value, v, t.q());
        const double lower = std::max(payoff.P[v], e);
        if (hz.delta[v] > 0.0) {
            const double upper = std::max(payoff.P[v], payoff.R[v]);
            g.value[v] = std::min(upper, lower);
            tau[v] = upper <= g.value[v] ? 1 : 0;
        } else {
            g.value[v] = lower;
        }
        sigma[v] = payoff.P[v] >= g.value[v] ? 1 : 0;
    }
    g.sigma_star = StoppingTime::from_decisions(t, std::move(sigma));
    g.tau_star = StoppingTime::from_decisions(t, std::move(tau));
    g.infsup = g.supinf = g.value[0];
    return g;
}

GameValueReport brute_force_game(const FiniteTree& t, const PayoffSpec& payoff, const ReducedHazard& hz,
                                 std::uint64_t cap) {
    payoff.validate(t);
    if (hz.delta.size() != t.node_count()) throw ValidationError("hazard increments do not match the tree");
    const std::size_t L = t.leaf_count();
    const std::size_t n = t.steps();
    std::vector<double> leaf_q(L);
    const std::vector<double> qn = t.node_probabilities(t.q());
    for (std::size_t l = 0; l < L; ++l) leaf_q[l] = qn[t.leaf_node(l)];

    struct Strategy {
        NodeMask decisions;
        std::vector<std::uint32_t> time;  // per leaf
        std::vector<double> pay;          // per leaf
    };
    auto collect = [&](const NodeMask& mask, bool minimizer) {
        std::vector<Strategy> out;
        for_each_stopping_time(
            t, mask,
            [&](const NodeMask& d) {
                Strategy s{d, std::vector<std::uint32_t>(L), std::vector<double>(L)};
                for (std::size_t l = 0; l < L; ++l) {
                    NodeId stop = t.leaf_node(l);
                    for (std::size_t k = 0; k <= n; ++k)
                        if (d[t.path_node(l, k)]) {
                            stop = t.path_node(l, k);
                            break;
                        }
                    s.time[l] = static_cast<std::uint32_t>(t.time_of(stop));
                    if (minimizer)
                        s.pay[l] = t.time_of(stop) < n ? std::max(payoff.P[stop], payoff.R[stop]) : payoff.P[stop];
                    else
                        s.pay[l] = payoff.P[stop];
                }
                out.push_back(std::move(s));
            },
            cap);
        return out;
    };
    const std::vector<Strategy> sigmas = collect(all_nodes_mask(t), false);
    const std::vector<Strategy> taus = collect(hz.support(t), true);

    auto payoff_of = [&](const Strategy& s, const Strategy& m) {
        double e = 0.0;
        for (std::size_t l = 0; l < L; ++l) e += leaf_q[l] * (m.time[l] > s.time[l] ? s.pay[l] : m.pay[l]);
        return e;
    };

    GameValueReport g;
    g.infsup = std::numeric_limits<double>::infinity();
    std::size_t best_tau = 0, best_sigma = 0;
    for (std::size_t j = 0; j < taus.size(); ++j) {
        double sup = -std::numeric_limits<double>::infinity();
        for (const Strategy& s : sigmas) sup = std::max(sup, payoff_of(s, taus[j]));
        if (sup < g.infsup) {
            g.infsup = sup;
            best_tau = j;
        }
    }
    g.supinf = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        double inf = std::numeric_limits<double>::infinity();
        for (const Strategy& m : taus) inf = std::min(inf, payoff_of(sigmas[i], m));
        if (inf > g.supinf) {
            g.supinf = inf;
            best_sigma = i;
        }
    }
    g.value = AdaptedProcess(t.node_count(), std::numeric_limits<double>::quiet_NaN());
    g.value[0] = g.infsup;
    g.sigma_star = StoppingTime::from_decisions(t, sigmas[best_sigma].decisions);
    g.tau_star = StoppingTime::from_decisions(t, taus[best_tau].decisions);
    return g;
}

ReflectedSolveReport american_reduced_price_phi(const FiniteTree& t, const AdaptedProcess& lambda,
                                                const PayoffSpec& payoff, const ReducedHazard& hz) {
    payoff.validate(t);
    if (lambda.size() != t.node_count()) throw ValidationError("lambda does not match the tree");
    for (NodeId v = 0; v < t.node_count(); ++v)
        if (!t.is_terminal(v) && !(lambda[v] > 0.0)) {
            std::ostringstream os;
            os << "lambda must be positive; got " << lambda[v] << " at node " << v;
            throw ValidationError(os.str());
        }
    return reflected_gbsde_solve(t, Generator::linear(lambda, payoff.R), payoff.P, payoff.P, hz);
}

LambdaEnvelope american_lambda_envelope(const FiniteTree& t, double n, const PayoffSpec& payoff,
                                        const ReducedHazard& hz) {
    payoff.validate(t);
    if (!(n >= 1.0)) throw ValidationError("penalty level must be at least 1");
    LambdaEnvelope env{AdaptedProcess(t.node_count()), AdaptedProcess(t.node_count())};
    auto step = [&](double e, double r, double lam, double d) {
        const double a = lam * d;
        return (e + a * r) / (1.0 + a);
    };
    for (NodeId v = t.node_count(); v-- > 0;) {
        if (t.is_terminal(v)) {
            env.sup[v] = env.inf[v] = payoff.P[v];
            continue;
        }
        const double r = payoff.R[v], d = hz.delta[v];
        // The linear step is increasing in lambda when R > E and decreasing when R < E.
        const double es = continuation(t, env.sup, v, t.q());
        const double ys = r > es ? step(es, r, n, d) : es;
        const double ei = continuation(t, env.inf, v, t.q());
        const double yi = r < ei ? step(ei, r, n, d) : ei;
        env.sup[v] = std::max(payoff.P[v], ys);
        env.inf[v] = std::max(payoff.P[v], yi);
    }
    return env;
}

}  // namespace vulnlab
