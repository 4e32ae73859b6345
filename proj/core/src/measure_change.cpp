#include "vulnlab/measure_change.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vulnlab/error.hpp"

namespace vulnlab {

namespace {

PhiValidation fail(std::string msg, std::size_t atom, NodeId node) {
    PhiValidation r;
    r.valid = false;
    r.message = std::move(msg);
    r.atom = atom;
    r.node = node;
    return r;
}

double phi_pr_at(const PhiControl& phi, std::size_t a) { return phi.phi_pr.empty() ? 0.0 : phi.phi_pr[a]; }

AdaptedProcess market_density(const FiniteTree& t) {
    const std::vector<double> pp = t.node_probabilities(t.p());
    const std::vector<double> qq = t.node_probabilities(t.q());
    AdaptedProcess z(t.node_count());
    for (NodeId v = 0; v < t.node_count(); ++v) z[v] = qq[v] / pp[v];
    return z;
}

AdaptedProcess lambda_process(const FiniteTree& t, const ProjectionBundle& b, const AdaptedProcess& phi_o) {
    AdaptedProcess lam(t.node_count());
    for (NodeId v = 1; v < t.node_count(); ++v) {
        const NodeId par = t.parent(v);
        const double dg = b.GammaTilde[v] - b.GammaTilde[par];
        lam[v] = lam[par] + (1.0 + phi_o[v] * (1.0 - dg)) * dg;
    }
    return lam;
}

}  // namespace

PhiControl PhiControl::zero(const ExtendedSpace& ext) {
    PhiControl phi;
    phi.phi_o = AdaptedProcess(ext.tree().node_count(), 0.0);
    phi.phi_pr.assign(ext.atom_count(), 0.0);
    return phi;
}

PhiValidation validate_phi(const ExtendedSpace& ext, const PhiControl& phi) {
    const FiniteTree& t = ext.tree();
    const std::size_t n = t.steps();
    if (phi.phi_o.size() != t.node_count()) return fail("phi_o does not match the tree", 0, 0);
    if (!phi.phi_pr.empty() && phi.phi_pr.size() != ext.atom_count())
        return fail("phi_pr does not match the extended space", 0, 0);
    const AtomMeasure& w = ext.probabilities();

    for (std::size_t a = 0; a < ext.atom_count(); ++a) {
        const double x = phi_pr_at(phi, a);
        if (ext.theta_of(a) == ext.never()) {
            if (x != 0.0) return fail("phi_pr must vanish when no default occurs before the horizon", a, 0);
            continue;
        }
        if (w[a] > 0.0 && !(x > -1.0)) {
            std::ostringstream os;
            os << "phi_pr > -1 violated at atom " << a << " (value " << x << ")";
            return fail(os.str(), a, t.path_node(ext.leaf_of(a), ext.theta_of(a)));
        }
    }
    for (std::size_t j = 1; j <= n; ++j) {
        for (NodeId v = t.nodes_begin(j); v < t.nodes_end(j); ++v) {
            double sw = 0.0, sx = 0.0, scale = 0.0;
            for (std::size_t l = t.leaf_begin(v); l < t.leaf_end(v); ++l) {
                const std::size_t a = ext.atom(l, j);
                sw += w[a];
                sx += w[a] * phi_pr_at(phi, a);
                scale += w[a] * std::abs(phi_pr_at(phi, a));
            }
            if (sw > 0.0 && std::abs(sx) > 1e-12 * std::max(scale, sw)) {
                std::ostringstream os;
                os << "phi_pr has nonzero conditional mean given the default node " << v;
                return fail(os.str(), ext.atom(t.leaf_begin(v), j), v);
            }
        }
    }

    const ProjectionBundle b = projections(ext);
    for (NodeId v = 1; v < t.node_count(); ++v) {
        const double f = phi.phi_o[v];
        if (!std::isfinite(f)) return fail("phi_o is not finite", 0, v);
        if (phi.bound_n && f > *phi.bound_n - 1.0) {
            std::ostringstream os;
            os << "phi_o <= n - 1 violated at node " << v << " (n = " << *phi.bound_n << ")";
            return fail(os.str(), 0, v);
        }
        if (!(b.dAo[v] > 0.0)) continue;
        if (b.G[v] > 0.0 && !(f > -b.Gtilde[v] / b.G[v])) {
            std::ostringstream os;
            os.precision(17);
            os << "phi_o > -Gtilde/G violated at node " << v << " (phi_o = " << f
               << ", bound = " << -b.Gtilde[v] / b.G[v] << ")";
            return fail(os.str(), 0, v);
        }
        if (!(f * (b.Gtilde[v] - b.G[v]) < b.Gtilde[v])) {
            std::ostringstream os;
            os << "phi_o (Gtilde - G) < Gtilde violated at node " << v;
            return fail(os.str(), 0, v);
        }
    }
    return {};
}

DensityBundle density_eta(const ExtendedSpace& ext, const PhiControl& phi) {
    const PhiValidation ok = validate_phi(ext, phi);
    if (!ok.valid) throw ValidationError("invalid control: " + ok.message);
    const FiniteTree& t = ext.tree();
    const std::size_t n = t.steps();
    const ProjectionBundle b = projections(ext);
    const AtomMeasure& w = ext.probabilities();

    DensityBundle d;
    d.zf = market_density(t);
    d.eta = ExtProcess(n, ext.atom_count());

    // E_P[phi_pr | node at k, theta = j] for j <= k.
    auto pr_mean = [&](NodeId v, std::size_t j) {
        double sw = 0.0, sx = 0.0;
        for (std::size_t l = t.leaf_begin(v); l < t.leaf_end(v); ++l) {
            const std::size_t a = ext.atom(l, j);
            sw += w[a];
            sx += w[a] * phi_pr_at(phi, a);
        }
        return sw > 0.0 ? sx / sw : 0.0;
    };

    for (std::size_t a = 0; a < ext.atom_count(); ++a) {
        const std::size_t l = ext.leaf_of(a), j = ext.theta_of(a);
        double pre = 1.0;  // market and default factors, frozen after theta
        d.eta(0, a) = 1.0;
        for (std::size_t k = 1; k <= n; ++k) {
            const NodeId v = t.path_node(l, k), par = t.parent(v);
            if (k <= j) {
                const double dg = b.GammaTilde[v] - b.GammaTilde[par];
                const double market = (d.zf[v] / d.zf[par]) * (b.G[par] / b.Gtilde[v]);
                const double dmg = (k == j ? 1.0 : 0.0) - dg;
                pre *= market * (1.0 + phi.phi_o[v] * dmg);
            }
            const double post = j <= k ? 1.0 + pr_mean(v, j) : 1.0;
            d.eta(k, a) = pre * post;
        }
    }

    double total = 0.0;
    d.qphi.assign(ext.atom_count(), 0.0);
    for (std::size_t a = 0; a < ext.atom_count(); ++a) {
        if (w[a] > 0.0 && !(d.eta(n, a) > 0.0)) {
            std::ostringstream os;
            os << "internal error: nonpositive density at atom " << a;
            throw NumericalError(os.str());
        }
        d.qphi[a] = w[a] * d.eta(n, a);
        total += d.qphi[a];
    }
    if (std::abs(total - 1.0) > 1e-10) {
        std::ostringstream os;
        os.precision(17);
        os << "internal error: density has mean " << total;
        throw NumericalError(os.str());
    }
    d.martingale_residual = check_g_martingale(ext, w, d.eta).worst();

    d.eta_o_proj = AdaptedProcess(t.node_count());
    const std::vector<double> pn = t.node_probabilities(t.p());
    for (NodeId v = 0; v < t.node_count(); ++v) {
        const std::size_t k = t.time_of(v);
        double s = 0.0;
        for (std::size_t l = t.leaf_begin(v); l < t.leaf_end(v); ++l)
            for (std::size_t j = 1; j <= ext.slots(); ++j) {
                const std::size_t a = ext.atom(l, j);
                s += w[a] * d.eta(k, a);
            }
        d.eta_o_proj[v] = s / pn[v];
    }
    return d;
}

HazardComparison hazard_under_phi(const ExtendedSpace& ext, const PhiControl& phi) {
    const FiniteTree& t = ext.tree();
    const DensityBundle d = density_eta(ext, phi);
    const ProjectionBundle b = projections(ext);
    const ProjectionBundle bq = projections(ext, d.qphi);

    HazardComparison h;
    h.definitional = bq.GammaTilde;
    h.formula = lambda_process(t, b, phi.phi_o);
    h.max_residual = sup_distance(h.definitional, h.formula);
    for (NodeId v = 1; v < t.node_count(); ++v) {
        const double dl = h.formula[v] - h.formula[t.parent(v)];
        h.compensator_residual = std::max(h.compensator_residual, std::abs(bq.dAo[v] - bq.Gtilde[v] * dl));
    }
    ExtProcess comp(t.steps(), ext.atom_count());
    for (std::size_t a = 0; a < ext.atom_count(); ++a) {
        const std::size_t l = ext.leaf_of(a), j = ext.theta_of(a);
        for (std::size_t k = 0; k <= t.steps(); ++k)
            comp(k, a) = (j <= k ? 1.0 : 0.0) - h.formula[t.path_node(l, std::min(k, j))];
    }
    h.martingale_residual = check_g_martingale(ext, d.qphi, comp).worst();
    return h;
}

SurvivalComparison g_under_phi(const ExtendedSpace& ext, const PhiControl& phi) {
    const FiniteTree& t = ext.tree();
    const DensityBundle d = density_eta(ext, phi);
    const ProjectionBundle b = projections(ext);
    const ProjectionBundle bq = projections(ext, d.qphi);
    const AdaptedProcess lam = lambda_process(t, b, phi.phi_o);

    SurvivalComparison s;
    s.direct = bq.G;
    s.formula = AdaptedProcess(t.node_count());
    std::vector<double> expo(t.node_count(), 1.0);
    for (NodeId v = 0; v < t.node_count(); ++v) {
        if (v > 0) expo[v] = expo[t.parent(v)] * (1.0 - (lam[v] - lam[t.parent(v)]));
        s.formula[v] = d.zf[v] * expo[v] / d.eta_o_proj[v];
        s.pseudo_stopping_gap = std::max(s.pseudo_stopping_gap, std::abs(d.eta_o_proj[v] - d.zf[v]));
    }
    s.max_residual = sup_distance(s.direct, s.formula);
    s.eta_projection_equals_market_density = s.pseudo_stopping_gap <= 1e-12;
    return s;
}

AdaptedProcess reduced_price_under_phi(const ExtendedSpace& ext, const PhiControl& phi, const AdaptedProcess& P,
                                       const AdaptedProcess& R, const StoppingTime& sigma) {
    const FiniteTree& t = ext.tree();
    const ProjectionBundle b = projections(ext);
    const AdaptedProcess lam = lambda_process(t, b, phi.phi_o);
    AdaptedProcess v(t.node_count());
    for (NodeId x = t.node_count(); x-- > 0;) {
        if (sigma.stops_at(x)) {
            v[x] = P[x];
            continue;
        }
        double s = 0.0;
        const NodeId c0 = t.first_child(x);
        for (std::size_t c = 0; c < t.child_count(x); ++c) {
            const NodeId ch = c0 + c;
            const double dl = lam[ch] - lam[x];
            s += t.q().edge(ch) * ((1.0 - dl) * v[ch] + dl * R[ch]);
        }
        v[x] = s;
    }
    return v;
}

}  // namespace vulnlab
