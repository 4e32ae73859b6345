#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "vulnlab/tree.hpp"

namespace vulnlab {

// E[x_{k+1} | node v] for a non-terminal node v at time k.
double continuation(const FiniteTree& tree, const AdaptedProcess& x, NodeId v, const Measure& m);

// One-step conditional expectation: y[v] = E[x_{k+1} | v] at non-terminal nodes, y = x at leaves.
AdaptedProcess condexp(const FiniteTree& tree, const AdaptedProcess& x, const Measure& m);

// E[x_j | v] for j >= time(v), summed directly over the leaves below v.
double conditional_expectation(const FiniteTree& tree, const AdaptedProcess& x, NodeId v, std::size_t j,
                               const Measure& m);

struct DoobDecomposition {
    AdaptedProcess martingale;   // N
    AdaptedProcess compensator;  // B, predictable and nondecreasing, B_0 = 0
};

// x = N - B for a supermartingale x.
DoobDecomposition doob_decomposition(const FiniteTree& tree, const AdaptedProcess& x, const Measure& m,
                                     double tolerance = 1e-12);

struct SnellResult {
    AdaptedProcess value;
    StoppingTime tau_star;
};

SnellResult snell_envelope(const FiniteTree& tree, const AdaptedProcess& reward, const Measure& m,
                           const NodeMask& allowed);

double evaluate_stopping(const FiniteTree& tree, const AdaptedProcess& reward, const StoppingTime& tau,
                         const Measure& m);

// Number of distinct stopping times with stop nodes in the mask, saturated at the cap + 1.
std::uint64_t count_stopping_times(const FiniteTree& tree, const NodeMask& allowed,
                                   std::uint64_t cap = 10'000'000);

// Visits every distinct stopping time in a fixed order. The callback receives canonical decisions.
void for_each_stopping_time(const FiniteTree& tree, const NodeMask& allowed,
                            const std::function<void(const NodeMask&)>& visit,
                            std::uint64_t cap = 10'000'000);

std::vector<StoppingTime> enumerate_stopping_times(const FiniteTree& tree, const NodeMask& allowed,
                                                   std::uint64_t cap = 10'000'000);

// Largest |E[x_{k+1}|F_k] - x_k| over non-terminal nodes.
double martingale_residual(const FiniteTree& tree, const AdaptedProcess& x, const Measure& m);

}  // namespace vulnlab
