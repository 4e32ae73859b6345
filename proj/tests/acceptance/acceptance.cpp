#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vulnlab/american.hpp"
#include "vulnlab/european.hpp"
#include "vulnlab/filtration.hpp"
#include "vulnlab/instances.hpp"
#include "vulnlab/measure_change.hpp"
#include "vulnlab/random_time.hpp"
#include "vulnlab/runner.hpp"

using namespace vulnlab;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

struct LabInstance {
    FiniteTree tree;
    ExtendedSpace ext;
};

// At most 4 periods, branching at most 3, hazards on [0, 0.9].
std::vector<LabInstance> lab_instances(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    InstanceOptions opt;
    std::vector<LabInstance> out;
    for (std::size_t i = 0; i < count; ++i) {
        opt.path_dependent_hazard = i % 2 == 0;
        FiniteTree t = random_tree(rng, opt);
        ExtendedSpace ext = ExtendedSpace::cox_extend(t, random_hazard_spec(rng, t, opt));
        out.push_back({std::move(t), std::move(ext)});
    }
    return out;
}

std::vector<ReducedInstance> reduced_instances(std::size_t count, std::uint64_t seed, bool dominated,
                                               InstanceOptions opt = {}) {
    Rng rng(seed);
    std::vector<ReducedInstance> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(random_reduced_instance(rng, opt, dominated));
    return out;
}

AdaptedProcess random_p_martingale(const FiniteTree& t, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    AdaptedProcess m = AdaptedProcess::generate(t, [&](NodeId) { return u(rng); });
    for (NodeId v = t.node_count(); v-- > 0;)
        if (!t.is_terminal(v)) m[v] = continuation(t, m, v, t.p());
    return m;
}

AdaptedProcess european_reward(const FiniteTree& t, const PayoffSpec& p) {
    AdaptedProcess r = p.R;
    for (NodeId v = t.nodes_begin(t.steps()); v < t.node_count(); ++v) r[v] = p.P[v];
    return r;
}

double brute_max(const FiniteTree& t, const AdaptedProcess& reward, const NodeMask& mask) {
    double best = -1e300;
    for_each_stopping_time(t, mask, [&](const NodeMask& d) {
        best = std::max(best, evaluate_stopping(t, reward, StoppingTime::from_decisions(t, d), t.q()));
    });
    return best;
}

double plain_european(const FiniteTree& t, const AdaptedProcess& P, NodeId v) {
    return conditional_expectation(t, P, v, t.steps(), t.q());
}

Outcome c1_projection_identities() {
    const auto t0 = Clock::now();
    const auto set = lab_instances(24, 101);
    double worst = 0.0;
    std::size_t identities = 0;
    for (const LabInstance& li : set) {
        const ProjectionBundle b = projections(li.ext);
        for (const IdentityCheck& c : verify_azema_identities(li.tree, b, 1e-12)) {
            worst = std::max(worst, c.residual);
            ++identities;
        }
        worst = std::max(worst, check_g_martingale(li.ext, li.ext.probabilities(), b.mG).worst());
        worst = std::max(worst, check_g_martingale(li.ext, li.ext.probabilities(), b.nG).worst());
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-12 && secs < 1.0, std::to_string(set.size()) + " instances, " + std::to_string(identities) +
                                              " identity checks, max residual " + sci(worst) + " (tol 1e-12), " +
                                              sci(secs) + " s (limit 1 s)"};
}

Outcome c2_martingale_transforms() {
    const auto set = lab_instances(24, 101);
    Rng rng(202);
    double jy = 0.0, pd = 0.0;
    for (const LabInstance& li : set)
        for (int k = 0; k < 3; ++k) {
            const AdaptedProcess M = random_p_martingale(li.tree, rng);
            jy = std::max(jy, check_g_martingale(li.ext, li.ext.probabilities(), jeulin_yor_transform(li.ext, M)).worst());
            pd = std::max(pd, check_g_martingale(li.ext, li.ext.probabilities(), pre_default_transform(li.ext, M)).worst());
        }
    return {std::max(jy, pd) <= 1e-12, "stopped-martingale transform " + sci(jy) + ", pre-default transform " +
                                           sci(pd) + " (tol 1e-12) on " + std::to_string(set.size()) + " instances"};
}

Outcome c3_measure_change() {
    const auto set = lab_instances(24, 101);
    Rng rng(303);
    double two_route = 0.0, invariance = 0.0;
    std::size_t controls = 0, sign_changing = 0, rejected = 0;
    for (const LabInstance& li : set) {
        const ReducedHazard hz = random_reduced_hazard(rng, li.tree);
        const PayoffSpec pay = random_payoff(rng, li.tree, hz);
        const StoppingTime T = StoppingTime::at_horizon(li.tree);
        for (int j = 0; j < 10; ++j) {
            PhiControl phi = random_phi(rng, li.ext);
            if (!validate_phi(li.ext, phi).valid) {
                ++rejected;
                continue;
            }
            ++controls;
            bool neg = false, posv = false;
            for (NodeId v = 0; v < li.tree.node_count(); ++v) {
                if (li.tree.is_terminal(v)) continue;
                neg = neg || phi.phi_o[v] < 0.0;
                posv = posv || phi.phi_o[v] > 0.0;
            }
            if (neg && posv) ++sign_changing;
            const HazardComparison h = hazard_under_phi(li.ext, phi);
            const SurvivalComparison g = g_under_phi(li.ext, phi);
            two_route = std::max({two_route, h.max_residual, g.max_residual});
            const AdaptedProcess base =
                reduced_price_from_projections(li.ext, density_eta(li.ext, phi).qphi, pay.P, pay.R, T);
            for (int r = 0; r < 2; ++r) {
                phi.phi_pr = random_centered_phi_pr(rng, li.ext);
                const AdaptedProcess other =
                    reduced_price_from_projections(li.ext, density_eta(li.ext, phi).qphi, pay.P, pay.R, T);
                invariance = std::max(invariance, sup_distance(base, other));
            }
        }
    }
    const bool ok = two_route <= 1e-12 && invariance <= 1e-12 && rejected == 0 && sign_changing > 0 &&
                    controls >= 10 * set.size();
    return {ok, std::to_string(controls) + " controls (" + std::to_string(sign_changing) +
                    " with phi_o of both signs), two-route residual " + sci(two_route) + ", phi_pr invariance " +
                    sci(invariance) + " (tol 1e-12)"};
}

Outcome c4_european_duality() {
    const auto set = reduced_instances(24, 404, false);
    const std::vector<double> ladder = default_penalty_ladder(20);
    bool monotone = true;
    double gap = 0.0, brute = 0.0, slowest = 0.0;
    for (const ReducedInstance& e : set) {
        const auto t0 = Clock::now();
        const DualitySweep s = european_duality(e.tree, e.payoff, e.hz, ladder);
        monotone = monotone && s.monotone;
        gap = std::max(gap, s.trace.back().gap);
        brute = std::max(brute, std::abs(s.limit.value[0] -
                                         brute_max(e.tree, european_reward(e.tree, e.payoff), e.hz.support(e.tree))));
        slowest = std::max(slowest, seconds_since(t0));
    }
    return {monotone && gap <= 1e-5 && brute <= 1e-12 && slowest < 10.0,
            std::string(monotone ? "monotone" : "NOT monotone") + " in n, gap at 2^20 " + sci(gap) +
                " (tol 1e-5), enumeration " + sci(brute) + " (tol 1e-12), slowest instance " + sci(slowest) + " s"};
}

Outcome c5_sup_penalty() {
    const auto set = reduced_instances(24, 505, false);
    double worst = 0.0;
    for (const ReducedInstance& e : set)
        for (double n : {1.0, 4.0, 16.0})
            worst = std::max(worst, sup_distance(sup_over_phi(e.tree, n, e.payoff, e.hz, SupMode::closed_form).value,
                                                 penalized_european(e.tree, n, e.payoff, e.hz).value));
    return {worst <= 1e-12, "max node-wise gap " + sci(worst) + " (tol 1e-12) over n in {1, 4, 16}, " +
                                std::to_string(set.size()) + " instances"};
}

Outcome c6_dirac_limit() {
    const std::vector<double> ladder = default_penalty_ladder(14);
    std::vector<std::pair<std::string, std::vector<ConvergencePoint>>> tables;
    {
        const ReducedInstance one = one_period_instance();
        tables.emplace_back("1-period", dirac_convergence_check(one.tree, one.payoff, one.hz,
                                                                StoppingTime::at_time(one.tree, 0), ladder));
    }
    {
        const FiniteTree t = FiniteTree::build(TreeSpec::uniform(TimeGrid::uniform(3, 3.0), {0.3, 0.7}, {0.45, 0.55}));
        const double h[] = {0.1, 0.2, 0.3};
        std::vector<double> delta(t.node_count(), 0.0);
        for (NodeId v = 0; v < t.node_count(); ++v)
            if (!t.is_terminal(v)) delta[v] = h[t.time_of(v)] / (1.0 - h[t.time_of(v)]);
        const ReducedHazard hz = ReducedHazard::make(t, delta);
        const double P[] = {0.4, 0.5, 0.6, 0.8};
        const PayoffSpec pay{AdaptedProcess::generate(t, [&](NodeId v) { return P[t.time_of(v)]; }),
                             AdaptedProcess::constant(t, 0.9)};
        tables.emplace_back("3-period", dirac_convergence_check(t, pay, hz, StoppingTime::at_time(t, 0), ladder));
    }
    bool ok = true;
    std::string detail;
    for (const auto& [name, table] : tables) {
        bool strict = true;
        for (std::size_t i = 1; i < table.size(); ++i) strict = strict && table[i].gap < table[i - 1].gap;
        const double last = table.back().gap;
        ok = ok && strict && last <= 1e-4;
        if (!detail.empty()) detail += "; ";
        detail += name + ": " + (strict ? "strictly decreasing" : "NOT strictly decreasing") + ", gap at 2^14 " +
                  sci(last) + (last <= 1e-4 ? "" : " > 1e-4");
    }
    return {ok, detail};
}

Outcome c7_rbsde() {
    const auto set = reduced_instances(12, 707, false);
    double gap = 0.0, sk = 0.0;
    for (const ReducedInstance& e : set) {
        const WeightedComparison w = rbsde_vs_weighted_optstop(e.tree, e.payoff, synthetic_weighting(e.tree, e.hz));
        gap = std::max(gap, w.max_gap);
        sk = std::max(sk, w.max_skorokhod);
    }
    // Cox lab instances feed the weighting through the projections.
    Rng rng(708);
    InstanceOptions opt;
    opt.path_dependent_hazard = false;
    for (int i = 0; i < 12; ++i) {
        const FiniteTree t = random_tree(rng, opt);
        const ExtendedSpace ext = ExtendedSpace::cox_extend(t, random_hazard_spec(rng, t, opt));
        const Weighting lw = weighting_from_projections(t, projections(ext));
        const WeightedComparison w = rbsde_vs_weighted_optstop(t, random_payoff(rng, t, lw.hz), lw);
        gap = std::max(gap, w.max_gap);
        sk = std::max(sk, w.max_skorokhod);
    }
    return {gap <= 1e-10 && sk <= 1e-12, "weighted versus reflected " + sci(gap) + " (tol 1e-10), Skorokhod residual " +
                                             sci(sk) + " (tol 1e-12), 24 instances"};
}

Outcome c8_american_upper() {
    const auto set = reduced_instances(24, 808, false);
    double gap = 0.0, brute = 0.0;
    for (const ReducedInstance& e : set) {
        const SnellResult up = american_upper_price(e.tree, e.payoff, e.hz);
        gap = std::max(gap, sup_distance(penalized_american_upper(e.tree, std::ldexp(1.0, 20), e.payoff, e.hz).value,
                                         up.value));
        brute = std::max(brute, std::abs(up.value[0] - brute_max(e.tree, upper_reward(e.tree, e.payoff, e.hz),
                                                                 all_nodes_mask(e.tree))));
    }
    return {gap <= 1e-5 && brute <= 1e-12,
            "penalized at 2^20 " + sci(gap) + " (tol 1e-5), enumeration " + sci(brute) + " (tol 1e-12)"};
}

Outcome c9_game() {
    InstanceOptions opt;
    auto set = reduced_instances(20, 909, true, opt);
    opt.min_periods = 4;
    opt.max_branching = 2;
    for (auto& e : reduced_instances(4, 910, true, opt)) set.push_back(std::move(e));
    double exact = 0.0, pen = 0.0, slowest = 0.0;
    std::size_t four = 0;
    for (const ReducedInstance& e : set) {
        const auto t0 = Clock::now();
        const GameValueReport g = constrained_dynkin_game(e.tree, e.payoff, e.hz);
        const GameValueReport b = brute_force_game(e.tree, e.payoff, e.hz);
        const AdaptedProcess lo = penalized_american_lower(e.tree, std::ldexp(1.0, 20), e.payoff, e.hz).value;
        exact = std::max({exact, std::abs(b.infsup - b.supinf), std::abs(g.value[0] - b.infsup),
                          std::abs(g.infsup - g.supinf)});
        pen = std::max(pen, std::abs(lo[0] - g.value[0]));
        if (e.tree.steps() == 4) {
            ++four;
            slowest = std::max(slowest, seconds_since(t0));
        }
    }
    return {exact <= 1e-12 && pen <= 1e-5 && slowest < 30.0,
            std::to_string(set.size()) + " instances, exact gaps " + sci(exact) + " (tol 1e-12), penalized limit " +
                sci(pen) + " (tol 1e-5), slowest of " + std::to_string(four) + " 4-period instances " + sci(slowest) +
                " s"};
}

Outcome c10_degenerate() {
    const auto set = reduced_instances(20, 1010, false);
    double zero_h = 0.0;
    for (const ReducedInstance& e : set) {
        const FiniteTree& t = e.tree;
        const ReducedHazard none = ReducedHazard::constant(t, 0.0);
        AdaptedProcess euro(t.node_count());
        for (NodeId v = 0; v < t.node_count(); ++v) euro[v] = plain_european(t, e.payoff.P, v);
        const AdaptedProcess am = snell_envelope(t, e.payoff.P, t.q(), all_nodes_mask(t)).value;
        const AdaptedProcess lam = AdaptedProcess::constant(t, 1.0);
        zero_h = std::max({zero_h, sup_distance(reduced_price_linear(t, lam, e.payoff, none).value, euro),
                           sup_distance(penalized_european(t, 64, e.payoff, none).value, euro),
                           sup_distance(constrained_snell(t, e.payoff, none).value, euro),
                           sup_distance(american_upper_price(t, e.payoff, none).value, am),
                           sup_distance(constrained_dynkin_game(t, e.payoff, none).value, am),
                           sup_distance(penalized_american_upper(t, 64, e.payoff, none).value, am),
                           sup_distance(penalized_american_lower(t, 64, e.payoff, none).value, am),
                           sup_distance(american_reduced_price_phi(t, lam, e.payoff, none).value, am)});
        // Lab route with no default at all.
        HazardSpec hs = HazardSpec::constant(t, 0.0);
        const ExtendedSpace ext = ExtendedSpace::cox_extend(t, hs);
        zero_h = std::max(zero_h, sup_distance(reduced_price_from_projections(ext, ext.probabilities(), e.payoff.P,
                                                                              e.payoff.R, StoppingTime::at_horizon(t)),
                                               [&] {
                                                   AdaptedProcess p(t.node_count());
                                                   for (NodeId v = 0; v < t.node_count(); ++v)
                                                       p[v] = conditional_expectation(t, e.payoff.P, v, t.steps(),
                                                                                      t.p());
                                                   return p;
                                               }()));
    }
    double upper_gap = 0.0, lower_gap = 0.0, lower_vs_p = 0.0;
    for (const ReducedInstance& e : set) {
        const PayoffSpec same{e.payoff.P, e.payoff.P};
        const AdaptedProcess snell = snell_envelope(e.tree, e.payoff.P, e.tree.q(), all_nodes_mask(e.tree)).value;
        const AdaptedProcess lower = constrained_dynkin_game(e.tree, same, e.hz).value;
        upper_gap = std::max(upper_gap, sup_distance(american_upper_price(e.tree, same, e.hz).value, snell));
        lower_gap = std::max(lower_gap, sup_distance(lower, snell));
        // The minimizer may stop at once on the support, which pins the lower price to P there.
        for (NodeId v = 0; v < e.tree.node_count(); ++v)
            if (e.hz.in_support(e.tree, v)) lower_vs_p = std::max(lower_vs_p, std::abs(lower[v] - e.payoff.P[v]));
    }
    const double spread = std::max(upper_gap, lower_gap);
    return {zero_h <= 1e-12 && spread <= 1e-12,
            "h = 0: max deviation from default-free prices " + sci(zero_h) + "; R = P: |upper - Snell(P)| " +
                sci(upper_gap) + ", |lower - Snell(P)| " + sci(lower_gap) + " (tol 1e-12), lower equals P on S-bar to " +
                sci(lower_vs_p)};
}

Outcome c11_determinism() {
    namespace fs = std::filesystem;
    using namespace vulnlab::runner;
    const Scenario s = parse_scenario(std::string(VULNLAB_SCENARIO_DIR) + "/paper_regression.json");
    const fs::path root = fs::temp_directory_path() / "vulnlab_acceptance_determinism";
    fs::remove_all(root);
    std::vector<fs::path> dirs;
    bool passed = true;
    for (std::size_t threads : {1u, 8u})
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path d = root / ("t" + std::to_string(threads) + "_r" + std::to_string(rep));
            const RunReport r = run_suites(s, threads);
            passed = passed && r.passed;
            emit_reports(r, d.string(), {"csv", "json"});
            dirs.push_back(d);
        }
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    std::size_t files = 0, mismatches = 0;
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
        ++files;
        const std::string ref = slurp(entry.path());
        for (std::size_t i = 1; i < dirs.size(); ++i)
            if (slurp(dirs[i] / entry.path().filename()) != ref) ++mismatches;
    }
    fs::remove_all(root);
    return {mismatches == 0 && files == 5 && passed,
            std::to_string(files) + " report files x 4 runs (threads 1 and 8, twice each), " +
                std::to_string(mismatches) + " byte mismatches; regression suites " + (passed ? "pass" : "FAIL")};
}

struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "Run a single criterion (1-11)")->check(CLI::Range(1, 11));
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> all = {
        {1, "projection identities", c1_projection_identities},
        {2, "martingale transforms", c2_martingale_transforms},
        {3, "measure change", c3_measure_change},
        {4, "European duality", c4_european_duality},
        {5, "per-node sup equals penalty", c5_sup_penalty},
        {6, "Dirac limit", c6_dirac_limit},
        {7, "RBSDE equivalence", c7_rbsde},
        {8, "American upper duality", c8_american_upper},
        {9, "game duality", c9_game},
        {10, "degenerate controls", c10_degenerate},
        {11, "determinism", c11_determinism},
    };
    bool ok = true;
    for (const Criterion& c : all) {
        if (only != 0 && c.id != only) continue;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        ok = ok && o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.title << "): " << o.detail
                  << std::endl;
    }
    return ok ? 0 : 1;
}
