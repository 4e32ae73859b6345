#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "vulnlab/european.hpp"
#include "vulnlab/filtration.hpp"
#include "vulnlab/random_time.hpp"
#include "vulnlab/tree.hpp"

namespace vulnlab {

// Driver f_k(y) of a one-step implicit equation y = E + f_k(y) delta_{k+1}.
// The linear and one-sided penalty drivers are solved in closed form; a custom
// driver must be nonincreasing in y and is solved by bisection.
class Generator {
public:
    enum class Kind { zero, linear, penalty_up, penalty_down, custom };

    static Generator zero();
    // lambda_k (R_k - y)
    static Generator linear(AdaptedProcess lambda, AdaptedProcess R);
    // n (R_k - y)^+
    static Generator penalty_up(double n, AdaptedProcess R);
    // -n (y - R_k)^+
    static Generator penalty_down(double n, AdaptedProcess R);
    static Generator custom(std::function<double(NodeId, double)> f);

    Kind kind() const { return kind_; }
    double operator()(NodeId v, double y) const;
    // Root of y = e + f_v(y) d.
    double solve(NodeId v, double e, double d) const;

private:
    Kind kind_ = Kind::zero;
    double n_ = 0.0;
    AdaptedProcess lambda_;
    AdaptedProcess R_;
    std::function<double(NodeId, double)> f_;
};

struct ReflectedSolveReport {
    AdaptedProcess value;
    std::vector<double> K_increments;        // V_k - y*, nonnegative
    std::vector<double> skorokhod_residuals;  // (V_k - obstacle_k) dK_k
    std::vector<double> martingale_increments;

    double max_skorokhod() const;
};

// Backward reflected recursion. A missing obstacle means no reflection.
ReflectedSolveReport reflected_gbsde_solve(const FiniteTree& tree, const Generator& f,
                                           const std::optional<AdaptedProcess>& obstacle,
                                           const AdaptedProcess& terminal, const ReducedHazard& hz);

// F-adapted weighting of the optimal stopping problem: survival process G and the
// dual optional projection increment dA^o_{k+1} seen from the time-k node.
struct Weighting {
    AdaptedProcess G;
    AdaptedProcess dAo_next;
    ReducedHazard hz;  // implicit-step hazard consistent with (G, dAo_next)
};

// G_k = prod_{j<k} (1 + delta_j)^{-1}, dA^o_{k+1} = G_k - G_{k+1}.
Weighting synthetic_weighting(const FiniteTree& tree, const ReducedHazard& hz);
// Survival process and hazard of a lab instance; needs predictable hazard increments.
Weighting weighting_from_projections(const FiniteTree& tree, const ProjectionBundle& b);

struct WeightedComparison {
    AdaptedProcess weighted;   // G^{-1}(Snell(P G + R . A^o) - R . A^o)
    AdaptedProcess reflected;  // reflected solve with driver (R - y), obstacle P
    double max_gap = 0.0;
    double max_skorokhod = 0.0;
};

WeightedComparison rbsde_vs_weighted_optstop(const FiniteTree& tree, const PayoffSpec& payoff, const Weighting& w);

ReflectedSolveReport penalized_american_upper(const FiniteTree& tree, double n, const PayoffSpec& payoff,
                                              const ReducedHazard& hz);
ReflectedSolveReport penalized_american_lower(const FiniteTree& tree, double n, const PayoffSpec& payoff,
                                              const ReducedHazard& hz);

// Snell envelope over all stopping times of max(P, R 1_{S-bar}) before the horizon and P at it.
SnellResult american_upper_price(const FiniteTree& tree, const PayoffSpec& payoff, const ReducedHazard& hz);
AdaptedProcess upper_reward(const FiniteTree& tree, const PayoffSpec& payoff, const ReducedHazard& hz);

struct GameValueReport {
    AdaptedProcess value;
    StoppingTime sigma_star;  // maximizer, any node
    StoppingTime tau_star;    // minimizer, S-bar only
    double infsup = 0.0;
    double supinf = 0.0;
};

// Game payoff: P_sigma if tau > sigma; (P v R)_tau if tau <= sigma and tau < N; P_N if both reach N.
bool upper_dominates_on_support(const FiniteTree& tree, const PayoffSpec& payoff, const ReducedHazard& hz);
GameValueReport constrained_dynkin_game(const FiniteTree& tree, const PayoffSpec& payoff, const ReducedHazard& hz);
GameValueReport brute_force_game(const FiniteTree& tree, const PayoffSpec& payoff, const ReducedHazard& hz,
                                 std::uint64_t cap = 10'000'000);

ReflectedSolveReport american_reduced_price_phi(const FiniteTree& tree, const AdaptedProcess& lambda,
                                                const PayoffSpec& payoff, const ReducedHazard& hz);

struct LambdaEnvelope {
    AdaptedProcess sup;  // per-node maximum over lambda in (0, n]
    AdaptedProcess inf;  // per-node minimum over lambda in (0, n]
};

// Backward recursion that picks the per-node monotone argmax / argmin of the linear step.
LambdaEnvelope american_lambda_envelope(const FiniteTree& tree, double n, const PayoffSpec& payoff,
                                        const ReducedHazard& hz);

}  // namespace vulnlab
