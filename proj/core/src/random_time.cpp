#include "vulnlab/random_time.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vulnlab/error.hpp"
#include "vulnlab/filtration.hpp"

namespace vulnlab {

namespace {

void check_weights(const ExtendedSpace& ext, const AtomMeasure& w) {
    if (w.size() != ext.atom_count()) throw ValidationError("atom measure does not match the extended space");
}

// cell[v * slots + j - 1] = w-mass of {market node v, theta slot j}.
std::vector<double> cell_weights(const ExtendedSpace& ext, const AtomMeasure& w) {
    const FiniteTree& t = ext.tree();
    const std::size_t s = ext.slots();
    std::vector<double> cell(t.node_count() * s, 0.0);
    for (std::size_t l = 0; l < t.leaf_count(); ++l) {
        const NodeId v = t.leaf_node(l);
        for (std::size_t j = 1; j <= s; ++j) cell[v * s + j - 1] = w[ext.atom(l, j)];
    }
    for (NodeId v = t.nodes_begin(t.steps()); v-- > 0;) {
        const NodeId c0 = t.first_child(v);
        for (std::size_t c = 0; c < t.child_count(v); ++c)
            for (std::size_t j = 0; j < s; ++j) cell[v * s + j] += cell[(c0 + c) * s + j];
    }
    return cell;
}

double rel_gap(double a, double b) { return std::abs(a - b); }

}  // namespace

HazardSpec HazardSpec::constant(const FiniteTree& tree, double h) {
    HazardSpec hz;
    hz.node_h.assign(tree.node_count(), h);
    return hz;
}

ExtendedSpace ExtendedSpace::cox_extend(const FiniteTree& tree, const HazardSpec& hz) {
    ExtendedSpace ext;
    ext.tree_ = tree;
    const std::size_t n = tree.steps();
    const std::size_t leaves = tree.leaf_count();

    auto check_h = [](double h, const std::string& where) {
        if (!(h >= 0.0 && h < 1.0)) {
            std::ostringstream os;
            os << "hazard " << h << " outside [0,1) at " << where;
            throw ValidationError(os.str());
        }
    };
    if (hz.path_h.empty()) {
        if (hz.node_h.size() != tree.node_count()) {
            std::ostringstream os;
            os << "hazard table has " << hz.node_h.size() << " entries for " << tree.node_count() << " nodes";
            throw ValidationError(os.str());
        }
        for (NodeId v = 0; v < tree.node_count(); ++v)
            if (!tree.is_terminal(v)) check_h(hz.node_h[v], "node " + std::to_string(v));
    } else {
        if (hz.path_h.size() != leaves) throw ValidationError("path hazard table needs one row per leaf");
        for (std::size_t l = 0; l < leaves; ++l) {
            if (hz.path_h[l].size() != n) throw ValidationError("path hazard row needs one value per step");
            for (std::size_t i = 0; i < n; ++i)
                check_h(hz.path_h[l][i], "leaf " + std::to_string(l) + ", step " + std::to_string(i));
        }
    }

    const std::vector<double> prob = tree.node_probabilities(tree.p());
    ext.prob_.assign(leaves * (n + 1), 0.0);
    for (std::size_t l = 0; l < leaves; ++l) {
        double surv = prob[tree.leaf_node(l)];
        for (std::size_t i = 0; i < n; ++i) {
            double h = hz.path_h.empty() ? hz.node_h[tree.path_node(l, i)] : hz.path_h[l][i];
            if (!hz.survive_past_horizon && i + 1 == n) h = 1.0;
            ext.prob_[ext.atom(l, i + 1)] = surv * h;
            surv *= 1.0 - h;
        }
        ext.prob_[ext.atom(l, n + 1)] = surv;
    }
    return ext;
}

double sup_distance(const ExtProcess& a, const ExtProcess& b, const AtomMeasure& support) {
    double d = 0.0;
    for (std::size_t k = 0; k <= a.steps(); ++k)
        for (std::size_t i = 0; i < a.atoms(); ++i)
            if (support[i] > 0.0) d = std::max(d, std::abs(a(k, i) - b(k, i)));
    return d;
}

std::vector<double> g_condexp(const ExtendedSpace& ext, const AtomMeasure& w, const std::vector<double>& x,
                              std::size_t k) {
    check_weights(ext, w);
    const FiniteTree& t = ext.tree();
    std::vector<double> out(ext.atom_count(), 0.0);
    for (NodeId v = t.nodes_begin(k); v < t.nodes_end(k); ++v) {
        const std::size_t lb = t.leaf_begin(v), le = t.leaf_end(v);
        for (std::size_t j = 1; j <= k; ++j) {
            double sw = 0.0, sx = 0.0;
            for (std::size_t l = lb; l < le; ++l) {
                const std::size_t a = ext.atom(l, j);
                sw += w[a];
                sx += w[a] * x[a];
            }
            const double val = sw > 0.0 ? sx / sw : 0.0;
            for (std::size_t l = lb; l < le; ++l) out[ext.atom(l, j)] = val;
        }
        double sw = 0.0, sx = 0.0;
        for (std::size_t l = lb; l < le; ++l)
            for (std::size_t j = k + 1; j <= ext.slots(); ++j) {
                const std::size_t a = ext.atom(l, j);
                sw += w[a];
                sx += w[a] * x[a];
            }
        const double val = sw > 0.0 ? sx / sw : 0.0;
        for (std::size_t l = lb; l < le; ++l)
            for (std::size_t j = k + 1; j <= ext.slots(); ++j) out[ext.atom(l, j)] = val;
    }
    return out;
}

MartingaleCheck check_g_martingale(const ExtendedSpace& ext, const AtomMeasure& w, const ExtProcess& x) {
    MartingaleCheck r;
    const std::size_t na = ext.atom_count();
    std::vector<double> row(na), next(na);
    for (std::size_t k = 0; k <= ext.steps(); ++k) {
        for (std::size_t a = 0; a < na; ++a) row[a] = x(k, a);
        const std::vector<double> self = g_condexp(ext, w, row, k);
        for (std::size_t a = 0; a < na; ++a)
            if (w[a] > 0.0) r.adaptedness = std::max(r.adaptedness, std::abs(self[a] - row[a]));
        if (k == ext.steps()) break;
        for (std::size_t a = 0; a < na; ++a) next[a] = x(k + 1, a);
        const std::vector<double> e = g_condexp(ext, w, next, k);
        for (std::size_t a = 0; a < na; ++a)
            if (w[a] > 0.0) r.increment = std::max(r.increment, std::abs(e[a] - row[a]));
    }
    return r;
}

Measure market_marginal(const ExtendedSpace& ext, const AtomMeasure& w) {
    check_weights(ext, w);
    const FiniteTree& t = ext.tree();
    std::vector<double> node(t.node_count(), 0.0);
    for (std::size_t a = 0; a < w.size(); ++a) node[t.leaf_node(ext.leaf_of(a))] += w[a];
    for (NodeId v = t.nodes_begin(t.steps()); v-- > 0;) {
        const NodeId c0 = t.first_child(v);
        for (std::size_t c = 0; c < t.child_count(v); ++c) node[v] += node[c0 + c];
    }
    return t.measure_from_node_weights(node);
}

ProjectionBundle projections(const ExtendedSpace& ext) { return projections(ext, ext.probabilities()); }

ProjectionBundle projections(const ExtendedSpace& ext, const AtomMeasure& w) {
    check_weights(ext, w);
    const FiniteTree& t = ext.tree();
    const std::size_t n = t.steps();
    const std::size_t s = ext.slots();
    const std::size_t nodes = t.node_count();
    const std::vector<double> cell = cell_weights(ext, w);

    ProjectionBundle b;
    b.G = AdaptedProcess(nodes);
    b.Gtilde = AdaptedProcess(nodes);
    b.Ao = AdaptedProcess(nodes);
    b.Ap = AdaptedProcess(nodes);
    b.dAo = AdaptedProcess(nodes);
    b.dAp = AdaptedProcess(nodes);
    b.Gamma = AdaptedProcess(nodes);
    b.GammaTilde = AdaptedProcess(nodes);
    b.m = AdaptedProcess(nodes);
    b.n = AdaptedProcess(nodes);

    std::vector<double> total(nodes, 0.0);
    for (NodeId v = 0; v < nodes; ++v) {
        const std::size_t k = t.time_of(v);
        double tot = 0.0, after = 0.0, at = 0.0;
        for (std::size_t j = 1; j <= s; ++j) {
            const double c = cell[v * s + j - 1];
            tot += c;
            if (j > k) after += c;
            if (j == k) at += c;
        }
        if (!(tot > 0.0)) {
            std::ostringstream os;
            os << "market node " << v << " carries no mass under the projecting measure";
            throw NumericalError(os.str());
        }
        total[v] = tot;
        b.G[v] = after / tot;
        b.Gtilde[v] = (after + at) / tot;
        b.dAo[v] = at / tot;
        if (v > 0) {
            const NodeId par = t.parent(v);
            b.dAp[v] = cell[par * s + k - 1] / total[par];
            b.Ao[v] = b.Ao[par] + b.dAo[v];
            b.Ap[v] = b.Ap[par] + b.dAp[v];
            if (b.dAo[v] > 0.0) {
                if (!(b.Gtilde[v] > 0.0)) {
                    std::ostringstream os;
                    os << "Gtilde vanishes at node " << v;
                    throw NumericalError(os.str());
                }
                b.GammaTilde[v] = b.GammaTilde[par] + b.dAo[v] / b.Gtilde[v];
            } else {
                b.GammaTilde[v] = b.GammaTilde[par];
            }
            if (b.dAp[v] > 0.0) {
                if (!(b.G[par] > 0.0)) {
                    std::ostringstream os;
                    os << "G vanishes at node " << par << " before the horizon";
                    throw NumericalError(os.str());
                }
                b.Gamma[v] = b.Gamma[par] + b.dAp[v] / b.G[par];
            } else {
                b.Gamma[v] = b.Gamma[par];
            }
        }
    }

    b.market = t.measure_from_node_weights(total);
    for (NodeId v = t.nodes_begin(n); v < nodes; ++v) {
        b.m[v] = b.Ao[v] + b.G[v];
        b.n[v] = b.Ap[v] + b.G[v];
    }
    for (NodeId v = t.nodes_begin(n); v-- > 0;) {
        b.m[v] = continuation(t, b.m, v, b.market);
        b.n[v] = continuation(t, b.n, v, b.market);
    }

    b.mG = ExtProcess(n, ext.atom_count());
    b.nG = ExtProcess(n, ext.atom_count());
    for (std::size_t a = 0; a < ext.atom_count(); ++a) {
        const std::size_t l = ext.leaf_of(a), j = ext.theta_of(a);
        for (std::size_t k = 0; k <= n; ++k) {
            const std::size_t stop = std::min(k, j);
            const NodeId v = t.path_node(l, stop);
            const double ind = j <= k ? 1.0 : 0.0;
            b.mG(k, a) = ind - b.GammaTilde[v];
            b.nG(k, a) = ind - b.Gamma[v];
        }
    }
    return b;
}

std::vector<IdentityCheck> verify_azema_identities(const FiniteTree& t, const ProjectionBundle& b, double tol) {
    const std::size_t nodes = t.node_count();
    double r_mo = 0, r_np = 0, r_gt = 0, r_pg = 0, r_jump = 0, r_dm = 0, r_mult = 0, r_mult_t = 0, r_multp = 0;
    double r_sup = 0, r_mm = 0, r_nm = 0;
    std::vector<double> e_gt(nodes, 1.0), e_nt(nodes, 1.0), e_g(nodes, 1.0), e_n(nodes, 1.0);
    for (NodeId v = 0; v < nodes; ++v) {
        r_mo = std::max(r_mo, rel_gap(b.G[v], b.m[v] - b.Ao[v]));
        r_np = std::max(r_np, rel_gap(b.G[v], b.n[v] - b.Ap[v]));
        r_jump = std::max(r_jump, rel_gap(b.Gtilde[v] - b.G[v], b.dAo[v]));
        if (!t.is_terminal(v)) {
            const double pg = continuation(t, b.Gtilde, v, b.market);
            r_pg = std::max(r_pg, rel_gap(pg, b.G[v]));
            r_sup = std::max(r_sup, continuation(t, b.G, v, b.market) - b.G[v]);
            r_mm = std::max(r_mm, rel_gap(continuation(t, b.m, v, b.market), b.m[v]));
            r_nm = std::max(r_nm, rel_gap(continuation(t, b.n, v, b.market), b.n[v]));
        }
        if (v == 0) {
            r_gt = std::max(r_gt, rel_gap(b.Gtilde[v], b.m[v]));
            continue;
        }
        const NodeId par = t.parent(v);
        r_gt = std::max(r_gt, rel_gap(b.Gtilde[v], b.m[v] - b.Ao[par]));
        r_dm = std::max(r_dm, rel_gap(b.Gtilde[v] - b.G[par], b.m[v] - b.m[par]));

        const double dgt = b.GammaTilde[v] - b.GammaTilde[par];
        e_gt[v] = e_gt[par] * (1.0 - dgt);
        e_nt[v] = e_nt[par] * (1.0 + (b.m[v] - b.m[par]) / b.G[par]);
        r_mult = std::max(r_mult, rel_gap(b.G[v], e_gt[v] * e_nt[v]));
        r_mult_t = std::max(r_mult_t, rel_gap(b.Gtilde[v], e_gt[par] * e_nt[v]));

        const double dg = b.Gamma[v] - b.Gamma[par];
        const double pG = b.G[par] - b.dAp[v];
        e_g[v] = e_g[par] * (1.0 - dg);
        e_n[v] = pG > 0.0 ? e_n[par] * (1.0 + (b.n[v] - b.n[par]) / pG) : 0.0;
        r_multp = std::max(r_multp, rel_gap(b.G[v], e_g[v] * e_n[v]));
    }
    auto mk = [&](std::string name, double r) { return IdentityCheck{std::move(name), r, r <= tol}; };
    return {
        mk("G = m - A^o", r_mo),
        mk("G = n - A^p", r_np),
        mk("Gtilde = m - A^o_-", r_gt),
        mk("predictable projection of Gtilde = G_-", r_pg),
        mk("Gtilde - G = dA^o", r_jump),
        mk("Gtilde - G_- = dm", r_dm),
        mk("G = E(-GammaTilde) E(Ntilde)", r_mult),
        mk("Gtilde = E(-GammaTilde_-) E(Ntilde)", r_mult_t),
        mk("G = E(-Gamma) E(N)", r_multp),
        mk("G is a supermartingale", std::max(r_sup, 0.0)),
        mk("m is a martingale", r_mm),
        mk("n is a martingale", r_nm),
    };
}

KeyLemmaReport key_lemma(const ExtendedSpace& ext, const AdaptedProcess& x, ProjectionKind kind) {
    const FiniteTree& t = ext.tree();
    const std::size_t n = t.steps();
    if (x.size() != t.node_count()) throw ValidationError("process does not match the tree");
    if (kind == ProjectionKind::predictable) {
        for (NodeId v = 0; v < t.node_count(); ++v) {
            if (t.is_terminal(v)) continue;
            const NodeId c0 = t.first_child(v);
            for (std::size_t c = 1; c < t.child_count(v); ++c)
                if (std::abs(x[c0 + c] - x[c0]) > 1e-12) {
                    std::ostringstream os;
                    os << "process is not predictable: children of node " << v << " disagree";
                    throw ValidationError(os.str());
                }
        }
    }
    const ProjectionBundle b = projections(ext);
    const AdaptedProcess& dA = kind == ProjectionKind::optional ? b.dAo : b.dAp;

    // S_k = E[sum_{s>k} X_s dA_s + X_N G_N | F_k]
    AdaptedProcess S(t.node_count());
    for (NodeId v = t.nodes_begin(n); v < t.node_count(); ++v) S[v] = x[v] * b.G[v];
    for (NodeId v = t.nodes_begin(n); v-- > 0;) {
        double s = 0.0;
        const NodeId c0 = t.first_child(v);
        for (std::size_t c = 0; c < t.child_count(v); ++c)
            s += b.market.edge(c0 + c) * (x[c0 + c] * dA[c0 + c] + S[c0 + c]);
        S[v] = s;
    }

    const AtomMeasure& w = ext.probabilities();
    KeyLemmaReport r{ExtProcess(n, ext.atom_count()), ExtProcess(n, ext.atom_count()), 0.0};
    std::vector<double> xt(ext.atom_count());
    for (std::size_t a = 0; a < ext.atom_count(); ++a) {
        const std::size_t l = ext.leaf_of(a), j = ext.theta_of(a);
        xt[a] = x[t.path_node(l, std::min(j, n))];
    }
    for (std::size_t k = 0; k <= n; ++k) {
        const std::vector<double> d = g_condexp(ext, w, xt, k);
        for (std::size_t a = 0; a < ext.atom_count(); ++a) {
            const std::size_t l = ext.leaf_of(a), j = ext.theta_of(a);
            r.direct(k, a) = d[a];
            if (j <= k) {
                r.formula(k, a) = xt[a];
            } else {
                const NodeId v = t.path_node(l, k);
                if (!(b.G[v] > 0.0)) {
                    if (w[a] > 0.0) {
                        std::ostringstream os;
                        os << "G = 0 encountered at node " << v;
                        throw NumericalError(os.str());
                    }
                    r.formula(k, a) = 0.0;
                    continue;
                }
                r.formula(k, a) = S[v] / b.G[v];
            }
        }
    }
    r.max_residual = sup_distance(r.formula, r.direct, w);
    return r;
}

namespace {

void check_martingale_input(const FiniteTree& t, const AdaptedProcess& M) {
    if (M.size() != t.node_count()) throw ValidationError("process does not match the tree");
    const double r = martingale_residual(t, M, t.p());
    if (r > 1e-12 * std::max(1.0, std::abs(M[0]))) {
        std::ostringstream os;
        os << "non-martingale input: largest conditional increment " << r;
        throw ValidationError(os.str());
    }
}

}  // namespace

ExtProcess jeulin_yor_transform(const ExtendedSpace& ext, const AdaptedProcess& M) {
    const FiniteTree& t = ext.tree();
    check_martingale_input(t, M);
    const ProjectionBundle b = projections(ext);
    const std::size_t n = t.steps();
    ExtProcess y(n, ext.atom_count());
    for (std::size_t a = 0; a < ext.atom_count(); ++a) {
        const std::size_t l = ext.leaf_of(a), j = ext.theta_of(a);
        double acc = M[0];
        y(0, a) = acc;
        for (std::size_t i = 1; i <= n; ++i) {
            if (i <= j) {
                const NodeId v = t.path_node(l, i), par = t.parent(v);
                const double dM = M[v] - M[par];
                const double dm = b.m[v] - b.m[par];
                if (!(b.Gtilde[v] > 0.0)) throw NumericalError("Gtilde vanishes on a charged path");
                acc += dM - dM * dm / b.Gtilde[v];
            }
            y(i, a) = acc;
        }
    }
    return y;
}

ExtProcess pre_default_transform(const ExtendedSpace& ext, const AdaptedProcess& M) {
    const FiniteTree& t = ext.tree();
    check_martingale_input(t, M);
    const ProjectionBundle b = projections(ext);
    const std::size_t n = t.steps();
    ExtProcess y(n, ext.atom_count());
    for (std::size_t a = 0; a < ext.atom_count(); ++a) {
        const std::size_t l = ext.leaf_of(a), j = ext.theta_of(a);
        double acc = M[0];
        y(0, a) = acc;
        for (std::size_t i = 1; i <= n; ++i) {
            if (j > i) {
                const NodeId v = t.path_node(l, i), par = t.parent(v);
                const double dM = M[v] - M[par];
                const double dn = b.n[v] - b.n[par];
                if (!(b.G[v] > 0.0)) throw NumericalError("G = 0 on a path that survives");
                acc += dM - dM * dn / b.G[v];
            }
            y(i, a) = acc;
        }
    }
    return y;
}

double optional_integral(const ExtendedSpace& ext, const ProjectionBundle& b, const AdaptedProcess& K) {
    const FiniteTree& t = ext.tree();
    const AtomMeasure& w = ext.probabilities();
    double s = 0.0;
    for (std::size_t a = 0; a < ext.atom_count(); ++a) {
        const std::size_t l = ext.leaf_of(a);
        double acc = 0.0;
        for (std::size_t k = 1; k <= t.steps(); ++k) acc += K[t.path_node(l, k)] * (b.mG(k, a) - b.mG(k - 1, a));
        s += w[a] * acc;
    }
    return s;
}

AdaptedProcess reduced_price_from_projections(const ExtendedSpace& ext, const AtomMeasure& w, const AdaptedProcess& P,
                                              const AdaptedProcess& R, const StoppingTime& sigma) {
    const FiniteTree& t = ext.tree();
    const ProjectionBundle b = projections(ext, w);
    AdaptedProcess v(t.node_count());
    AdaptedProcess u(t.node_count());  // G v
    for (NodeId x = t.node_count(); x-- > 0;) {
        if (sigma.stops_at(x)) {
            v[x] = P[x];
            u[x] = b.G[x] * P[x];
            continue;
        }
        double s = 0.0;
        const NodeId c0 = t.first_child(x);
        for (std::size_t c = 0; c < t.child_count(x); ++c)
            s += b.market.edge(c0 + c) * (u[c0 + c] + R[c0 + c] * b.dAo[c0 + c]);
        if (!(b.G[x] > 0.0)) {
            std::ostringstream os;
            os << "G = 0 at node " << x << " before exercise";
            throw NumericalError(os.str());
        }
        u[x] = s;
        v[x] = s / b.G[x];
    }
    return v;
}

FullPriceReport full_price_assembly(const ExtendedSpace& ext, const AtomMeasure& w, const AdaptedProcess& reduced,
                                    const AdaptedProcess& P, const AdaptedProcess& R, const StoppingTime& sigma) {
    const FiniteTree& t = ext.tree();
    check_weights(ext, w);
    if (reduced.size() != t.node_count() || P.size() != t.node_count() || R.size() != t.node_count())
        throw ValidationError("inconsistent spaces: processes do not match the extended space's tree");
    if (sigma.decisions().size() != t.node_count()) throw ValidationError("inconsistent spaces: stopping time");
    const std::size_t n = t.steps();
    FullPriceReport r{ExtProcess(n, ext.atom_count()), ExtProcess(n, ext.atom_count()), 0.0};
    std::vector<double> payoff(ext.atom_count());
    std::vector<std::size_t> ex(t.leaf_count());
    for (std::size_t l = 0; l < t.leaf_count(); ++l) ex[l] = t.time_of(sigma.stop_node(t, l));
    for (std::size_t a = 0; a < ext.atom_count(); ++a) {
        const std::size_t l = ext.leaf_of(a), j = ext.theta_of(a), s = ex[l];
        payoff[a] = j <= s ? R[t.path_node(l, j)] : P[t.path_node(l, s)];
        for (std::size_t k = 0; k <= n; ++k) {
            double val;
            if (j <= k && j <= s)
                val = R[t.path_node(l, j)];
            else if (k < s)
                val = reduced[t.path_node(l, k)];
            else
                val = reduced[t.path_node(l, s)];
            r.assembled(k, a) = val;
        }
    }
    for (std::size_t k = 0; k <= n; ++k) {
        const std::vector<double> d = g_condexp(ext, w, payoff, k);
        for (std::size_t a = 0; a < ext.atom_count(); ++a) r.direct(k, a) = d[a];
    }
    r.max_residual = sup_distance(r.assembled, r.direct, w);
    return r;
}

}  // namespace vulnlab
