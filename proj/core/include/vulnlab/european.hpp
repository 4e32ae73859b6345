#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vulnlab/random_time.hpp"
#include "vulnlab/tree.hpp"

namespace vulnlab {

// Reduced-form hazard: delta[v] is the hazard increment over (t_k, t_{k+1}] seen from
// the time-k node v. Terminal entries are zero. The support S-bar holds the nodes with
// delta > 0 together with every terminal node.
struct ReducedHazard {
    std::vector<double> delta;
    std::vector<std::string> warnings;

    static constexpr double kDefaultCap = 1e3;

    // Validates delta >= 0 and truncates so that the cumulative hazard along any path
    // stays below cap (a warning is recorded when that happens).
    static ReducedHazard make(const FiniteTree& tree, std::vector<double> delta, double cap = kDefaultCap);
    static ReducedHazard constant(const FiniteTree& tree, double d, double cap = kDefaultCap);

    bool in_support(const FiniteTree& tree, NodeId v) const { return tree.is_terminal(v) || delta[v] > 0.0; }
    NodeMask support(const FiniteTree& tree) const;
};

// Hazard increments whose implicit step reproduces the survival weights of a lab
// instance exactly: delta = dGammaTilde / (1 - dGammaTilde). Requires the optional
// hazard increments to be F-predictable.
ReducedHazard reduced_hazard_from_projections(const FiniteTree& tree, const ProjectionBundle& b);

struct PayoffSpec {
    AdaptedProcess P;  // promised payoff
    AdaptedProcess R;  // recovery

    void validate(const FiniteTree& tree) const;
};

struct ConvergencePoint {
    double n = 0.0;
    double gap = 0.0;
};

struct EuroSolveReport {
    AdaptedProcess value;
    // V_child - E[V | parent], stored at the child; zero at the root.
    std::vector<double> martingale_increments;
    std::vector<ConvergencePoint> trace;
    std::optional<StoppingTime> tau_star;
};

EuroSolveReport reduced_price_linear(const FiniteTree& tree, const AdaptedProcess& lambda, const PayoffSpec& payoff,
                                     const ReducedHazard& hz, const std::optional<StoppingTime>& sigma = std::nullopt);

EuroSolveReport reduced_price_closed_form(const FiniteTree& tree, const AdaptedProcess& lambda,
                                          const PayoffSpec& payoff, const ReducedHazard& hz,
                                          const std::optional<StoppingTime>& sigma = std::nullopt);

EuroSolveReport penalized_european(const FiniteTree& tree, double n, const PayoffSpec& payoff, const ReducedHazard& hz);

// Snell envelope of R before the horizon and P at it, stopping restricted to S-bar.
EuroSolveReport constrained_snell(const FiniteTree& tree, const PayoffSpec& payoff, const ReducedHazard& hz);

enum class SupMode { closed_form, grid };

// Per-node supremum over lambda in (0, n] of the linear step. The grid mode scans
// grid_points geometric values in [2^-6, n] together with the lambda -> 0 limit.
EuroSolveReport sup_over_phi(const FiniteTree& tree, double n, const PayoffSpec& payoff, const ReducedHazard& hz,
                             SupMode mode, std::size_t grid_points = 64);

std::vector<double> default_penalty_ladder(std::size_t max_exponent);

// Pathwise gap between the penalized discounting started at nu and the Dirac target
// P_nu 1{nu = T} + R_nu 1{nu < T}, one point per n in the ladder (sup over paths).
std::vector<ConvergencePoint> dirac_convergence_check(const FiniteTree& tree, const PayoffSpec& payoff,
                                                      const ReducedHazard& hz, const StoppingTime& nu,
                                                      const std::vector<double>& ladder);

struct DualitySweep {
    EuroSolveReport limit;            // constrained Snell envelope
    EuroSolveReport last;             // penalized value at the largest n
    std::vector<ConvergencePoint> trace;  // sup-norm gap per n
    bool monotone = true;             // node-wise nondecreasing in n
};

DualitySweep european_duality(const FiniteTree& tree, const PayoffSpec& payoff, const ReducedHazard& hz,
                              const std::vector<double>& ladder);

struct BermudanComparison {
    std::vector<std::size_t> exercise_times;  // times where every node carries hazard mass
    double constrained_value = 0.0;
    double bermudan_value = 0.0;
};

// Exploratory: constrained Snell value versus a Bermudan value exercisable at the
// deterministic dates where the hazard jumps on every node.
BermudanComparison bermudan_experiment(const FiniteTree& tree, const PayoffSpec& payoff, const ReducedHazard& hz);

}  // namespace vulnlab
