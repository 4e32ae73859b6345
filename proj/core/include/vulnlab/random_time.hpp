#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vulnlab/tree.hpp"

namespace vulnlab {

// Conditional default probabilities. node_h[v] is the probability that the random
// time equals t_{k+1} given survival past t_k and the market node v at time k.
// A nonempty path_h (leaf x step) overrides node_h and may look at the whole path,
// which is how non-immersion instances are produced.
struct HazardSpec {
    std::vector<double> node_h;
    std::vector<std::vector<double>> path_h;
    // When false, every path still alive after t_{N-1} defaults at t_N.
    bool survive_past_horizon = true;

    static HazardSpec constant(const FiniteTree& tree, double h);
};

// Nonnegative weights on atoms, summing to one.
using AtomMeasure = std::vector<double>;

// Product space of market leaves and default slots j = 1..N (theta = t_j) and
// j = N + 1 (no default before the horizon).
class ExtendedSpace {
public:
    static ExtendedSpace cox_extend(const FiniteTree& tree, const HazardSpec& hz);

    const FiniteTree& tree() const { return tree_; }
    std::size_t steps() const { return tree_.steps(); }
    std::size_t slots() const { return tree_.steps() + 1; }
    std::size_t never() const { return tree_.steps() + 1; }
    std::size_t atom_count() const { return prob_.size(); }

    std::size_t atom(std::size_t leaf, std::size_t j) const { return leaf * slots() + (j - 1); }
    std::size_t leaf_of(std::size_t a) const { return a / slots(); }
    std::size_t theta_of(std::size_t a) const { return a % slots() + 1; }

    const AtomMeasure& probabilities() const { return prob_; }

private:
    FiniteTree tree_;
    AtomMeasure prob_;
};

// Values indexed by (time k = 0..N, atom).
class ExtProcess {
public:
    ExtProcess() = default;
    ExtProcess(std::size_t steps, std::size_t atoms, double fill = 0.0)
        : atoms_(atoms), v_((steps + 1) * atoms, fill) {}

    double operator()(std::size_t k, std::size_t a) const { return v_[k * atoms_ + a]; }
    double& operator()(std::size_t k, std::size_t a) { return v_[k * atoms_ + a]; }
    std::size_t atoms() const { return atoms_; }
    std::size_t steps() const { return atoms_ == 0 ? 0 : v_.size() / atoms_ - 1; }

private:
    std::size_t atoms_ = 0;
    std::vector<double> v_;
};

double sup_distance(const ExtProcess& a, const ExtProcess& b, const AtomMeasure& support);

// E_w[x | G_k] evaluated at every atom; atoms in null cells get 0.
std::vector<double> g_condexp(const ExtendedSpace& ext, const AtomMeasure& w, const std::vector<double>& x,
                              std::size_t k);

struct MartingaleCheck {
    double increment = 0.0;    // max |E[X_{k+1}|G_k] - X_k|
    double adaptedness = 0.0;  // max deviation of X_k inside a G_k cell
    double worst() const { return increment > adaptedness ? increment : adaptedness; }
};

MartingaleCheck check_g_martingale(const ExtendedSpace& ext, const AtomMeasure& w, const ExtProcess& x);

// Law of the market path induced by an atom measure.
Measure market_marginal(const ExtendedSpace& ext, const AtomMeasure& w);

struct ProjectionBundle {
    AdaptedProcess G;           // P(theta > t_k | F_k)
    AdaptedProcess Gtilde;      // P(theta >= t_k | F_k)
    AdaptedProcess Ao, Ap;      // dual optional and predictable projections of A
    AdaptedProcess dAo, dAp;    // their increments at each node (0 at the root)
    AdaptedProcess Gamma;       // predictable hazard, increments dAp / G_-
    AdaptedProcess GammaTilde;  // optional hazard, increments dAo / Gtilde
    AdaptedProcess m, n;        // E[Ao_inf | F_k], E[Ap_inf | F_k]
    ExtProcess mG, nG;          // A - GammaTilde^theta, A - Gamma^theta
    Measure market;             // law of the market path under the projecting measure
};

ProjectionBundle projections(const ExtendedSpace& ext, const AtomMeasure& w);
ProjectionBundle projections(const ExtendedSpace& ext);

struct IdentityCheck {
    std::string name;
    double residual = 0.0;
    bool passed = true;
};

// Additive and multiplicative decompositions of the Azema supermartingales, node-wise.
std::vector<IdentityCheck> verify_azema_identities(const FiniteTree& tree, const ProjectionBundle& b,
                                                   double tolerance = 1e-12);

enum class ProjectionKind { optional, predictable };

struct KeyLemmaReport {
    ExtProcess formula;
    ExtProcess direct;
    double max_residual = 0.0;
};

// E[X_theta | G_k] assembled from the dual projection of A, compared with the direct
// conditional expectation. X_theta on {theta beyond the horizon} is read as X_N.
KeyLemmaReport key_lemma(const ExtendedSpace& ext, const AdaptedProcess& x, ProjectionKind kind);

// M^theta - Gtilde^{-1} . [M, m]^theta
ExtProcess jeulin_yor_transform(const ExtendedSpace& ext, const AdaptedProcess& M);
// M^{theta-} - G^{-1} . [M, n]^{theta-}
ExtProcess pre_default_transform(const ExtendedSpace& ext, const AdaptedProcess& M);

// E[sum_k K_k dm^G_k] for an F-adapted K; zero up to rounding.
double optional_integral(const ExtendedSpace& ext, const ProjectionBundle& b, const AdaptedProcess& K);

// Exact pre-default price of P_sigma 1{sigma < theta} + R_theta 1{sigma >= theta} under w,
// from the survival process and dual optional projection computed under w.
AdaptedProcess reduced_price_from_projections(const ExtendedSpace& ext, const AtomMeasure& w,
                                              const AdaptedProcess& P, const AdaptedProcess& R,
                                              const StoppingTime& sigma);

struct FullPriceReport {
    ExtProcess assembled;
    ExtProcess direct;
    double max_residual = 0.0;
};

// Reduced price before default, R_theta from default on, P_sigma after exercise;
// compared with E_w[payoff | G_k].
FullPriceReport full_price_assembly(const ExtendedSpace& ext, const AtomMeasure& w, const AdaptedProcess& reduced,
                                    const AdaptedProcess& P, const AdaptedProcess& R, const StoppingTime& sigma);

}  // namespace vulnlab
