#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "vulnlab/american.hpp"
#include "vulnlab/european.hpp"
#include "vulnlab/measure_change.hpp"
#include "vulnlab/random_time.hpp"
#include "vulnlab/tree.hpp"

namespace vulnlab {

using Rng = std::mt19937_64;

struct InstanceOptions {
    std::size_t min_periods = 1;
    std::size_t max_periods = 4;
    std::size_t max_branching = 3;
    // Trees whose all-nodes stopping-time count exceeds this are redrawn.
    std::uint64_t max_stopping_times = 4096;
    bool distinct_pricing_measure = true;
    // Probability that a node carries no reduced hazard mass.
    double zero_hazard_probability = 0.3;
    double max_h = 0.9;
    bool path_dependent_hazard = true;
};

FiniteTree random_tree(Rng& rng, const InstanceOptions& opt = {});
HazardSpec random_hazard_spec(Rng& rng, const FiniteTree& tree, const InstanceOptions& opt = {});
// delta is 0 with the configured probability and uniform on [0.25, 1] otherwise.
ReducedHazard random_reduced_hazard(Rng& rng, const FiniteTree& tree, const InstanceOptions& opt = {});
// P and R uniform on [0, 1]. With dominated set, R is redrawn on [P, 1] at support nodes.
PayoffSpec random_payoff(Rng& rng, const FiniteTree& tree, const ReducedHazard& hz, bool dominated = false);
// Admissible control with phi_o of both signs and a centered phi_pr.
PhiControl random_phi(Rng& rng, const ExtendedSpace& ext);
// phi_pr drawn at random and centered, phi_o left at zero.
std::vector<double> random_centered_phi_pr(Rng& rng, const ExtendedSpace& ext);

struct ReducedInstance {
    FiniteTree tree;
    ReducedHazard hz;
    PayoffSpec payoff;
};

ReducedInstance random_reduced_instance(Rng& rng, const InstanceOptions& opt = {}, bool dominated = false);

// One period, two equally likely branches, P_0 = 0.5, P_T = 1, R = 2, delta = 0.5.
ReducedInstance one_period_instance();

}  // namespace vulnlab
