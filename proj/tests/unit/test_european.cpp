#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracle_values.hpp"
#include "vulnlab/error.hpp"

using namespace vulnlab;

namespace {

AdaptedProcess lambda_const(const FiniteTree& t, double l) { return AdaptedProcess::constant(t, l); }

double plain_price(const FiniteTree& t, const AdaptedProcess& P) { return conditional_expectation(t, P, 0, t.steps(), t.q()); }

}  // namespace

TEST(ReducedHazard, ValidationAndSupport) {
    const FiniteTree t = fixtures::coin(2);
    EXPECT_THROW((void)ReducedHazard::make(t, {-0.1, 0, 0, 0, 0, 0, 0}), ValidationError);
    EXPECT_THROW((void)ReducedHazard::make(t, {0.1, 0}), ValidationError);
    const ReducedHazard hz = ReducedHazard::make(t, {0.5, 0.0, 0.2, 7, 7, 7, 7});
    for (NodeId v = 3; v < 7; ++v) EXPECT_EQ(hz.delta[v], 0.0);
    const NodeMask s = hz.support(t);
    EXPECT_EQ(s, (NodeMask{1, 0, 1, 1, 1, 1, 1}));
}

TEST(ReducedHazard, CumulativeCapTruncatesWithWarning) {
    const FiniteTree t = fixtures::coin(3);
    const ReducedHazard hz = ReducedHazard::constant(t, 600.0);
    ASSERT_EQ(hz.warnings.size(), 1u);
    for (std::size_t l = 0; l < t.leaf_count(); ++l) {
        double s = 0.0;
        for (std::size_t k = 0; k < 3; ++k) s += hz.delta[t.path_node(l, k)];
        EXPECT_LE(s, 1e3);
    }
    EXPECT_TRUE(ReducedHazard::constant(t, 0.5).warnings.empty());
}

TEST(ReducedHazard, FromNodeWiseLabHazard) {
    const FiniteTree t = fixtures::coin(2);
    const ExtendedSpace ext = ExtendedSpace::cox_extend(t, HazardSpec::constant(t, 0.2));
    const ReducedHazard hz = reduced_hazard_from_projections(t, projections(ext));
    for (NodeId v = 0; v < 3; ++v) EXPECT_NEAR(hz.delta[v], 0.25, 1e-15);
    EXPECT_THROW((void)reduced_hazard_from_projections(t, projections(fixtures::l2_space())), ValidationError);
}

TEST(Payoff, RejectsNegativeValues) {
    const FiniteTree t = fixtures::coin(1);
    PayoffSpec p{AdaptedProcess(std::vector<double>{1, -1, 1}), AdaptedProcess::constant(t, 1)};
    EXPECT_THROW(p.validate(t), ValidationError);
}

TEST(Linear, NoHazardIsPlainEuropean) {
    const ReducedInstance e = fixtures::e2_instance();
    const ReducedHazard none = ReducedHazard::constant(e.tree, 0.0);
    const EuroSolveReport r = reduced_price_linear(e.tree, lambda_const(e.tree, 3.0), e.payoff, none);
    EXPECT_NEAR(r.value[0], plain_price(e.tree, e.payoff.P), 1e-15);
}

TEST(Linear, ConstantPayoffIsFixedPoint) {
    const ReducedInstance e = fixtures::e2_instance();
    const PayoffSpec c{AdaptedProcess::constant(e.tree, 0.8), AdaptedProcess::constant(e.tree, 0.8)};
    for (double l : {0.1, 1.0, 50.0}) {
        const EuroSolveReport r = reduced_price_linear(e.tree, lambda_const(e.tree, l), c, e.hz);
        for (NodeId v = 0; v < e.tree.node_count(); ++v) EXPECT_NEAR(r.value[v], 0.8, 1e-15);
    }
}

TEST(Linear, OnePeriodStep) {
    const ReducedInstance one = one_period_instance();
    const EuroSolveReport r = reduced_price_linear(one.tree, lambda_const(one.tree, 2.0), one.payoff, one.hz);
    EXPECT_NEAR(r.value[0], oracle::one_linear_lambda2, 1e-15);
    EXPECT_NEAR(r.martingale_increments[1], 1.0 - 1.0, 1e-15);
    const ReducedInstance e = fixtures::e2_instance();
    EXPECT_NEAR(reduced_price_linear(e.tree, lambda_const(e.tree, 1.5), e.payoff, e.hz).value[0],
                oracle::e2_linear_lambda_3_2_root, 1e-15);
}

TEST(Linear, RejectsNonPositiveLambda) {
    const ReducedInstance one = one_period_instance();
    EXPECT_THROW((void)reduced_price_linear(one.tree, lambda_const(one.tree, 0.0), one.payoff, one.hz), ValidationError);
}

TEST(ClosedForm, MatchesRecursionAndLimits) {
    const ReducedInstance one = one_period_instance();
    EXPECT_NEAR(reduced_price_closed_form(one.tree, lambda_const(one.tree, 2.0), one.payoff, one.hz).value[0],
                oracle::one_linear_lambda2, 1e-15);
    EXPECT_NEAR(reduced_price_closed_form(one.tree, lambda_const(one.tree, 1e-9), one.payoff, one.hz).value[0], 1.0,
                1e-9);
    EXPECT_NEAR(reduced_price_closed_form(one.tree, lambda_const(one.tree, 1e9), one.payoff, one.hz).value[0], 2.0,
                1e-8);
    Rng rng(43);
    for (int trial = 0; trial < 30; ++trial) {
        const ReducedInstance e = random_reduced_instance(rng);
        const AdaptedProcess lam = AdaptedProcess::generate(e.tree, [&](NodeId) {
            return std::uniform_real_distribution<double>(0.05, 5.0)(rng);
        });
        NodeMask d = terminal_mask(e.tree);
        for (NodeId v = 0; v < e.tree.node_count(); ++v)
            if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.25) d[v] = 1;
        const StoppingTime sigma = StoppingTime::from_decisions(e.tree, d);
        const auto a = reduced_price_linear(e.tree, lam, e.payoff, e.hz, sigma);
        const auto b = reduced_price_closed_form(e.tree, lam, e.payoff, e.hz, sigma);
        EXPECT_LE(sup_distance(a.value, b.value), 1e-12);
    }
}

TEST(Linear, MartingaleIncrementsAreCentered) {
    Rng rng(47);
    const ReducedInstance e = random_reduced_instance(rng);
    const EuroSolveReport r = reduced_price_linear(e.tree, lambda_const(e.tree, 1.0), e.payoff, e.hz);
    for (NodeId v = 0; v < e.tree.node_count(); ++v) {
        if (e.tree.is_terminal(v)) continue;
        double s = 0.0;
        for (std::size_t c = 0; c < e.tree.child_count(v); ++c) {
            const NodeId ch = e.tree.first_child(v) + c;
            s += e.tree.q().edge(ch) * r.martingale_increments[ch];
        }
        EXPECT_NEAR(s, 0.0, 1e-15);
    }
}

TEST(Penalized, OnePeriodValues) {
    const ReducedInstance one = one_period_instance();
    EXPECT_NEAR(penalized_european(one.tree, 1, one.payoff, one.hz).value[0], oracle::one_penalized_n1, 1e-15);
    EXPECT_NEAR(penalized_european(one.tree, 4, one.payoff, one.hz).value[0], oracle::one_penalized_n4, 1e-15);
    EXPECT_NEAR(penalized_european(one.tree, 1 << 20, one.payoff, one.hz).value[0], 2.0, 1e-5);
    const ReducedInstance e = fixtures::e2_instance();
    const EuroSolveReport r = penalized_european(e.tree, 4, e.payoff, e.hz);
    EXPECT_NEAR(r.value[0], oracle::e2_penalized_n4_root, 1e-15);
    EXPECT_NEAR(r.value[2], oracle::e2_penalized_n4_node2, 1e-15);
}

TEST(Penalized, InactivePenalty) {
    const ReducedInstance e = fixtures::e2_instance();
    const ReducedHazard none = ReducedHazard::constant(e.tree, 0.0);
    for (double n : {1.0, 64.0}) EXPECT_NEAR(penalized_european(e.tree, n, e.payoff, none).value[0],
                                             plain_price(e.tree, e.payoff.P), 1e-15);
    // R below a martingale P: the penalty never binds.
    const AdaptedProcess P = AdaptedProcess::constant(e.tree, 0.7);
    const PayoffSpec low{P, AdaptedProcess::constant(e.tree, 0.3)};
    for (double n : {1.0, 1024.0}) EXPECT_NEAR(penalized_european(e.tree, n, low, e.hz).value[0], 0.7, 1e-15);
    EXPECT_THROW((void)penalized_european(e.tree, 0.5, e.payoff, e.hz), ValidationError);
}

TEST(ConstrainedSnell, ExamplesAndOracle) {
    const ReducedInstance one = one_period_instance();
    EXPECT_NEAR(constrained_snell(one.tree, one.payoff, one.hz).value[0], oracle::one_constrained_snell, 1e-15);
    const ReducedInstance e = fixtures::e2_instance();
    const EuroSolveReport r = constrained_snell(e.tree, e.payoff, e.hz);
    EXPECT_NEAR(r.value[0], oracle::e2_constrained_snell_root, 1e-15);
    ASSERT_TRUE(r.tau_star.has_value());
    EXPECT_TRUE(r.tau_star->stops_at(0));
    const ReducedHazard none = ReducedHazard::constant(e.tree, 0.0);
    EXPECT_NEAR(constrained_snell(e.tree, e.payoff, none).value[0], plain_price(e.tree, e.payoff.P), 1e-15);
}

TEST(ConstrainedSnell, OffSupportInsensitivity) {
    Rng rng(53);
    for (int trial = 0; trial < 20; ++trial) {
        ReducedInstance e = random_reduced_instance(rng);
        const AdaptedProcess before = constrained_snell(e.tree, e.payoff, e.hz).value;
        for (NodeId v = 0; v < e.tree.node_count(); ++v)
            if (!e.hz.in_support(e.tree, v)) e.payoff.R[v] = 5.0 + v;
        EXPECT_LE(sup_distance(before, constrained_snell(e.tree, e.payoff, e.hz).value), 0.0);
    }
}

TEST(SupOverPhi, ClosedFormMatchesPenalizedAndGrid) {
    const ReducedInstance one = one_period_instance();
    EXPECT_NEAR(sup_over_phi(one.tree, 4, one.payoff, one.hz, SupMode::closed_form).value[0], oracle::one_penalized_n4,
                1e-15);
    Rng rng(59);
    for (int trial = 0; trial < 20; ++trial) {
        const ReducedInstance e = random_reduced_instance(rng);
        for (double n : {1.0, 4.0, 16.0}) {
            const auto a = sup_over_phi(e.tree, n, e.payoff, e.hz, SupMode::closed_form);
            const auto b = penalized_european(e.tree, n, e.payoff, e.hz);
            EXPECT_LE(sup_distance(a.value, b.value), 1e-12);
            const auto g = sup_over_phi(e.tree, n, e.payoff, e.hz, SupMode::grid, 64);
            EXPECT_LE(sup_distance(a.value, g.value), 1e-6);
        }
    }
}

TEST(SupOverPhi, LowRecoveryGivesPlainPrice) {
    const ReducedInstance e = fixtures::e2_instance();
    const PayoffSpec low{AdaptedProcess::constant(e.tree, 0.7), AdaptedProcess::constant(e.tree, 0.1)};
    EXPECT_NEAR(sup_over_phi(e.tree, 8, low, e.hz, SupMode::closed_form).value[0], 0.7, 1e-15);
}

TEST(Dirac, OnePeriodGeometricGap) {
    const ReducedInstance one = one_period_instance();
    const auto table = dirac_convergence_check(one.tree, one.payoff, one.hz, StoppingTime::at_time(one.tree, 0),
                                               {1.0, 16.0, 16384.0});
    EXPECT_NEAR(table[0].gap, oracle::dirac_gap_n1, 1e-15);
    EXPECT_NEAR(table[1].gap, oracle::dirac_gap_n16, 1e-15);
    EXPECT_NEAR(table[2].gap, oracle::dirac_gap_n16384, 1e-17);
    const auto exact = dirac_convergence_check(one.tree, one.payoff, one.hz, StoppingTime::at_horizon(one.tree),
                                               default_penalty_ladder(14));
    for (const auto& p : exact) EXPECT_EQ(p.gap, 0.0);
}

TEST(Dirac, RejectsStopOutsideSupport) {
    const ReducedInstance e = fixtures::e2_instance();
    NodeMask d = terminal_mask(e.tree);
    d[1] = d[2] = 1;  // node 1 carries no hazard
    EXPECT_THROW((void)dirac_convergence_check(e.tree, e.payoff, e.hz, StoppingTime::from_decisions(e.tree, d), {1.0}),
                 ValidationError);
}

TEST(Duality, MonotoneAndConvergent) {
    Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        const ReducedInstance e = random_reduced_instance(rng);
        const DualitySweep s = european_duality(e.tree, e.payoff, e.hz, default_penalty_ladder(20));
        EXPECT_TRUE(s.monotone);
        EXPECT_LE(s.trace.back().gap, 1e-5);
        for (std::size_t i = 1; i < s.trace.size(); ++i) EXPECT_LE(s.trace[i].gap, s.trace[i - 1].gap + 1e-15);
    }
}

TEST(Comparison, HigherRecoveryNeverLowersPrices) {
    Rng rng(67);
    for (int trial = 0; trial < 20; ++trial) {
        const ReducedInstance e = random_reduced_instance(rng);
        PayoffSpec hi = e.payoff;
        for (NodeId v = 0; v < e.tree.node_count(); ++v) hi.R[v] += 0.1 * (v % 3);
        const auto lam = lambda_const(e.tree, 1.7);
        const auto a = reduced_price_linear(e.tree, lam, e.payoff, e.hz).value;
        const auto b = reduced_price_linear(e.tree, lam, hi, e.hz).value;
        const auto c = penalized_european(e.tree, 8, e.payoff, e.hz).value;
        const auto d = penalized_european(e.tree, 8, hi, e.hz).value;
        const auto f = constrained_snell(e.tree, e.payoff, e.hz).value;
        const auto g = constrained_snell(e.tree, hi, e.hz).value;
        for (NodeId v = 0; v < e.tree.node_count(); ++v) {
            EXPECT_LE(a[v], b[v] + 1e-15);
            EXPECT_LE(c[v], d[v] + 1e-15);
            EXPECT_LE(f[v], g[v] + 1e-15);
        }
    }
}

TEST(Bermudan, ExperimentRuns) {
    const FiniteTree t = fixtures::coin(3);
    const ReducedHazard hz = ReducedHazard::make(t, {0.5, 0.0, 0.0, 0.3, 0.3, 0.3, 0.3, 0, 0, 0, 0, 0, 0, 0, 0});
    const PayoffSpec p{AdaptedProcess::constant(t, 0.5), AdaptedProcess::generate(t, [](NodeId v) { return 0.1 * (v % 5); })};
    const BermudanComparison c = bermudan_experiment(t, p, hz);
    EXPECT_EQ(c.exercise_times, (std::vector<std::size_t>{0, 2}));
    EXPECT_NEAR(c.constrained_value, c.bermudan_value, 1e-15);
}
