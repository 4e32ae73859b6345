#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "vulnlab/american.hpp"
#include "vulnlab/error.hpp"
#include "vulnlab/filtration.hpp"
#include "vulnlab/instances.hpp"
#include "vulnlab/runner.hpp"

namespace vulnlab::runner {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CaseResult {
    std::vector<CheckRow> checks;
    std::vector<TraceRow> traces;
};

class Recorder {
public:
    explicit Recorder(std::size_t case_index) : idx_(case_index) {}

    // Passes when residual <= tol; a NaN residual fails.
    void check(const std::string& name, double residual, double tol) {
        out_.checks.push_back({idx_, name, residual, tol, residual <= tol});
    }
    void check_flag(const std::string& name, bool ok, double residual, double tol) {
        out_.checks.push_back({idx_, name, residual, tol, ok});
    }
    void trace(const std::string& series, double n, double gap) { out_.traces.push_back({idx_, series, n, gap}); }
    CaseResult take() { return std::move(out_); }

private:
    std::size_t idx_ = 0;
    CaseResult out_;
};

Rng task_rng(std::uint64_t seed, std::size_t suite, std::size_t case_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(suite), static_cast<std::uint32_t>(case_index), 0x7a5cu};
    return Rng(seq);
}

AdaptedProcess random_adapted(const FiniteTree& t, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return AdaptedProcess::generate(t, [&](NodeId) { return u(rng); });
}

AdaptedProcess random_p_martingale(const FiniteTree& t, Rng& rng) {
    AdaptedProcess m = random_adapted(t, rng);
    for (NodeId v = t.node_count(); v-- > 0;)
        if (!t.is_terminal(v)) m[v] = continuation(t, m, v, t.p());
    return m;
}

// R before the horizon, P at it.
AdaptedProcess european_reward(const FiniteTree& t, const PayoffSpec& p) {
    AdaptedProcess r = p.R;
    for (NodeId v = t.nodes_begin(t.steps()); v < t.node_count(); ++v) r[v] = p.P[v];
    return r;
}

double brute_max(const FiniteTree& t, const AdaptedProcess& reward, const NodeMask& mask, std::uint64_t cap) {
    double best = -kInf;
    for_each_stopping_time(
        t, mask,
        [&](const NodeMask& d) {
            best = std::max(best, evaluate_stopping(t, reward, StoppingTime::from_decisions(t, d), t.q()));
        },
        cap);
    return best;
}

std::vector<std::pair<std::string, PhiControl>> controls(const Scenario& s, const ExtendedSpace& ext, Rng& rng) {
    std::vector<std::pair<std::string, PhiControl>> out;
    if (s.phi.include_zero) out.emplace_back("zero", PhiControl::zero(ext));
    if (s.phi.fixed) out.emplace_back("fixed", *s.phi.fixed);
    for (std::size_t i = 0; i < s.phi.random_count; ++i) out.emplace_back("random", random_phi(rng, ext));
    return out;
}

void projection_identities(const Scenario& s, std::size_t ci, const CaseSpec& c, Rng& rng, Recorder& rec) {
    const ExtendedSpace ext = ExtendedSpace::cox_extend(c.tree, c.lab_hazard);
    ProjectionBundle b = projections(ext);
    if (s.faults.ao_case && *s.faults.ao_case == ci) b.Ao[s.faults.ao_node] += s.faults.ao_amount;
    for (const IdentityCheck& k : verify_azema_identities(c.tree, b, s.tol.identity))
        rec.check("identity " + k.name, k.residual, s.tol.identity);
    rec.check("A - GammaTilde^theta is a G-martingale",
              check_g_martingale(ext, ext.probabilities(), b.mG).worst(), s.tol.identity);
    rec.check("A - Gamma^theta is a G-martingale", check_g_martingale(ext, ext.probabilities(), b.nG).worst(),
              s.tol.identity);
    rec.check("optional integral of F-adapted K vanishes",
              std::abs(optional_integral(ext, b, random_adapted(c.tree, rng))), s.tol.identity);
    rec.check("key lemma, optional", key_lemma(ext, random_adapted(c.tree, rng), ProjectionKind::optional).max_residual,
              s.tol.identity);
    AdaptedProcess pred(c.tree.node_count());
    const AdaptedProcess x = random_adapted(c.tree, rng);
    for (NodeId v = 1; v < c.tree.node_count(); ++v) pred[v] = x[c.tree.parent(v)];
    rec.check("key lemma, predictable", key_lemma(ext, pred, ProjectionKind::predictable).max_residual,
              s.tol.identity);
}

void martingale_transforms(const Scenario& s, std::size_t, const CaseSpec& c, Rng& rng, Recorder& rec) {
    const ExtendedSpace ext = ExtendedSpace::cox_extend(c.tree, c.lab_hazard);
    double jy = 0.0, pd = 0.0;
    for (int i = 0; i < 3; ++i) {
        const AdaptedProcess M = random_p_martingale(c.tree, rng);
        jy = std::max(jy, check_g_martingale(ext, ext.probabilities(), jeulin_yor_transform(ext, M)).worst());
        pd = std::max(pd, check_g_martingale(ext, ext.probabilities(), pre_default_transform(ext, M)).worst());
    }
    rec.check("transform of stopped martingale is a G-martingale", jy, s.tol.identity);
    rec.check("pre-default transform is a G-martingale", pd, s.tol.identity);
}

void measure_change(const Scenario& s, std::size_t, const CaseSpec& c, Rng& rng, Recorder& rec) {
    const ExtendedSpace ext = ExtendedSpace::cox_extend(c.tree, c.lab_hazard);
    const StoppingTime T = StoppingTime::at_horizon(c.tree);
    double hz = 0.0, comp = 0.0, mart = 0.0, surv = 0.0, dens = 0.0, inv = 0.0, routes = 0.0;
    std::size_t invalid = 0;
    const auto list = controls(s, ext, rng);
    for (const auto& [kind, phi] : list) {
        if (!validate_phi(ext, phi).valid) {
            ++invalid;
            continue;
        }
        const HazardComparison h = hazard_under_phi(ext, phi);
        hz = std::max(hz, h.max_residual);
        comp = std::max(comp, h.compensator_residual);
        mart = std::max(mart, h.martingale_residual);
        surv = std::max(surv, g_under_phi(ext, phi).max_residual);
        const DensityBundle d = density_eta(ext, phi);
        dens = std::max(dens, d.martingale_residual);
        const AdaptedProcess base = reduced_price_from_projections(ext, d.qphi, c.payoff.P, c.payoff.R, T);
        routes = std::max(routes, sup_distance(base, reduced_price_under_phi(ext, phi, c.payoff.P, c.payoff.R, T)));
        PhiControl other = phi;
        other.phi_pr = random_centered_phi_pr(rng, ext);
        const DensityBundle d2 = density_eta(ext, other);
        inv = std::max(inv, sup_distance(base, reduced_price_from_projections(ext, d2.qphi, c.payoff.P, c.payoff.R, T)));
    }
    rec.check_flag("controls admissible", invalid == 0, static_cast<double>(invalid), 0.0);
    rec.check("optional hazard under Q^phi, two routes", hz, s.tol.identity);
    rec.check("compensator of A under Q^phi", comp, s.tol.identity);
    rec.check("A - Lambda^theta is a Q^phi-martingale", mart, s.tol.identity);
    rec.check("survival process under Q^phi, two routes", surv, s.tol.identity);
    rec.check("density is a martingale", dens, s.tol.identity);
    rec.check("reduced price, hazard route versus projection route", routes, s.tol.identity);
    rec.check("reduced price invariant to phi_pr", inv, s.tol.identity);
}

void european_duality_suite(const Scenario& s, std::size_t, const CaseSpec& c, Rng&, Recorder& rec) {
    const DualitySweep sw = european_duality(c.tree, c.payoff, c.hz, s.ladder);
    double drop = 0.0;
    AdaptedProcess prev;
    for (double n : s.ladder) {
        const AdaptedProcess v = penalized_european(c.tree, n, c.payoff, c.hz).value;
        if (prev.size() != 0)
            for (NodeId k = 0; k < v.size(); ++k) drop = std::max(drop, prev[k] - v[k]);
        prev = v;
    }
    for (const ConvergencePoint& p : sw.trace) rec.trace("penalized european versus constrained Snell", p.n, p.gap);
    rec.check_flag("penalized value nondecreasing in n", sw.monotone, drop, 0.0);
    rec.check("gap to constrained Snell at last n", sw.trace.back().gap, s.tol.penalized);
    const double brute = brute_max(c.tree, european_reward(c.tree, c.payoff), c.hz.support(c.tree), s.enumeration_cap);
    rec.check("constrained Snell versus enumeration over S-bar", std::abs(sw.limit.value[0] - brute), s.tol.exact);
    double sup_gap = 0.0;
    for (double n : {1.0, 4.0, 16.0})
        sup_gap = std::max(sup_gap, sup_distance(sup_over_phi(c.tree, n, c.payoff, c.hz, SupMode::closed_form).value,
                                                 penalized_european(c.tree, n, c.payoff, c.hz).value));
    rec.check("per-node sup over controls equals penalized value", sup_gap, s.tol.exact);
}

void dirac_suite(const Scenario& s, std::size_t, const CaseSpec& c, Rng&, Recorder& rec) {
    // nu: first time the path enters a node with hazard mass, else the horizon.
    NodeMask d = terminal_mask(c.tree);
    bool any = false;
    for (NodeId v = 0; v < c.tree.node_count(); ++v)
        if (c.hz.delta[v] > 0.0) d[v] = 1, any = true;
    if (!any) {
        rec.check("no hazard mass: gap identically zero", 0.0, s.tol.dirac);
        return;
    }
    const auto table = dirac_convergence_check(c.tree, c.payoff, c.hz, StoppingTime::from_decisions(c.tree, d), s.ladder);
    // Strict decrease is asymptotic: small n can move the continuation value away from R_nu.
    // It is required on the upper half of the ladder until the gap reaches rounding level.
    double scale = 1.0;
    for (NodeId v = 0; v < c.tree.node_count(); ++v)
        scale = std::max({scale, std::abs(c.payoff.P[v]), std::abs(c.payoff.R[v])});
    const double floor = 1e-14 * scale;
    std::size_t bad = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        rec.trace("Dirac gap", table[i].n, table[i].gap);
        if (2 * i >= table.size() && i > 0 && table[i - 1].gap > floor && !(table[i].gap < table[i - 1].gap)) ++bad;
    }
    rec.check_flag("gap strictly decreasing over the upper half of the ladder", bad == 0, static_cast<double>(bad), 0.0);
    rec.check("gap at last n", table.back().gap, s.tol.dirac);
}

void rbsde_suite(const Scenario& s, std::size_t, const CaseSpec& c, Rng&, Recorder& rec) {
    const WeightedComparison w = rbsde_vs_weighted_optstop(c.tree, c.payoff, synthetic_weighting(c.tree, c.hz));
    rec.check("weighted optimal stopping versus reflected solve", w.max_gap, s.tol.rbsde);
    rec.check("Skorokhod complementarity", w.max_skorokhod, s.tol.skorokhod);
    if (c.lab_nodewise) {
        const ExtendedSpace ext = ExtendedSpace::cox_extend(c.tree, c.lab_hazard);
        const Weighting lw = weighting_from_projections(c.tree, projections(ext));
        const WeightedComparison l = rbsde_vs_weighted_optstop(c.tree, c.payoff, lw);
        rec.check("lab weighting: weighted versus reflected", l.max_gap, s.tol.rbsde);
        rec.check("lab weighting: Skorokhod complementarity", l.max_skorokhod, s.tol.skorokhod);
    }
}

void american_upper_suite(const Scenario& s, std::size_t, const CaseSpec& c, Rng&, Recorder& rec) {
    const SnellResult up = american_upper_price(c.tree, c.payoff, c.hz);
    double drop = 0.0, gap = kNaN;
    AdaptedProcess prev;
    for (double n : s.ladder) {
        const AdaptedProcess v = penalized_american_upper(c.tree, n, c.payoff, c.hz).value;
        gap = sup_distance(v, up.value);
        rec.trace("penalized upper versus Snell of upper reward", n, gap);
        if (prev.size() != 0)
            for (NodeId k = 0; k < v.size(); ++k) drop = std::max(drop, prev[k] - v[k]);
        prev = v;
    }
    rec.check("penalized upper nondecreasing in n", drop, 1e-15);
    rec.check("gap to Snell of upper reward at last n", gap, s.tol.penalized);
    const double brute = brute_max(c.tree, upper_reward(c.tree, c.payoff, c.hz), all_nodes_mask(c.tree), s.enumeration_cap);
    rec.check("Snell of upper reward versus enumeration", std::abs(up.value[0] - brute), s.tol.exact);
}

void game_suite(const Scenario& s, std::size_t, const CaseSpec& c, Rng&, Recorder& rec) {
    if (!upper_dominates_on_support(c.tree, c.payoff, c.hz)) {
        rec.check("P <= R on the support", kInf, 0.0);
        return;
    }
    const GameValueReport g = constrained_dynkin_game(c.tree, c.payoff, c.hz);
    const GameValueReport b = brute_force_game(c.tree, c.payoff, c.hz, s.enumeration_cap);
    rec.check("enumerated infsup equals supinf", std::abs(b.infsup - b.supinf), s.tol.exact);
    rec.check("game recursion versus enumerated infsup", std::abs(g.value[0] - b.infsup), s.tol.exact);
    rec.check("game recursion versus enumerated supinf", std::abs(g.value[0] - b.supinf), s.tol.exact);
    double gap = kNaN, rise = 0.0;
    AdaptedProcess prev;
    for (double n : s.ladder) {
        const AdaptedProcess v = penalized_american_lower(c.tree, n, c.payoff, c.hz).value;
        gap = sup_distance(v, g.value);
        rec.trace("penalized lower versus game value", n, gap);
        if (prev.size() != 0)
            for (NodeId k = 0; k < v.size(); ++k) rise = std::max(rise, v[k] - prev[k]);
        prev = v;
    }
    rec.check("penalized lower nonincreasing in n", rise, 1e-15);
    rec.check("gap to game value at last n", gap, s.tol.penalized);
}

void oracle_suite(const Scenario& s, std::size_t, const CaseSpec& c, Rng&, Recorder& rec) {
    const FiniteTree& t = c.tree;
    const NodeMask all = all_nodes_mask(t);
    const double snell_p = snell_envelope(t, c.payoff.P, t.q(), all).value[0];
    rec.check("Snell of P versus enumeration", std::abs(snell_p - brute_max(t, c.payoff.P, all, s.enumeration_cap)),
              s.tol.exact);
    const double cs = constrained_snell(t, c.payoff, c.hz).value[0];
    rec.check("constrained Snell versus enumeration over S-bar",
              std::abs(cs - brute_max(t, european_reward(t, c.payoff), c.hz.support(t), s.enumeration_cap)),
              s.tol.exact);
    const double up = american_upper_price(t, c.payoff, c.hz).value[0];
    rec.check("upper price versus enumeration",
              std::abs(up - brute_max(t, upper_reward(t, c.payoff, c.hz), all, s.enumeration_cap)), s.tol.exact);
    if (upper_dominates_on_support(t, c.payoff, c.hz)) {
        const GameValueReport g = constrained_dynkin_game(t, c.payoff, c.hz);
        const GameValueReport b = brute_force_game(t, c.payoff, c.hz, s.enumeration_cap);
        rec.check("game value versus enumeration", std::max(std::abs(g.value[0] - b.infsup), std::abs(g.value[0] - b.supinf)),
                  s.tol.exact);
    }
    const AdaptedProcess lam = AdaptedProcess::constant(t, 1.0);
    rec.check("closed form versus linear recursion",
              sup_distance(reduced_price_linear(t, lam, c.payoff, c.hz).value,
                           reduced_price_closed_form(t, lam, c.payoff, c.hz).value),
              s.tol.exact);
}

using SuiteFn = std::function<void(const Scenario&, std::size_t, const CaseSpec&, Rng&, Recorder&)>;

SuiteFn suite_fn(const std::string& name) {
    if (name == "projection-identities") return projection_identities;
    if (name == "martingale-transforms") return martingale_transforms;
    if (name == "measure-change") return measure_change;
    if (name == "european-duality") return european_duality_suite;
    if (name == "dirac-convergence") return dirac_suite;
    if (name == "rbsde-vs-optstop") return rbsde_suite;
    if (name == "american-upper") return american_upper_suite;
    if (name == "game-duality") return game_suite;
    if (name == "oracle-equivalence") return oracle_suite;
    throw ValidationError("unknown suite '" + name + "'");
}

std::size_t suite_index(const std::string& name) {
    const auto& k = known_suites();
    return static_cast<std::size_t>(std::find(k.begin(), k.end(), name) - k.begin());
}

// Runs task(i) for i in [0, count) on up to `threads` workers. Each task writes its own slot.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& task) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) task(i);
        });
    for (auto& th : pool) th.join();
}

std::string describe_failure(const Scenario& s, const CheckRow& r) {
    std::ostringstream os;
    os << "case " << r.case_index << " (" << s.cases[r.case_index].label << "): " << r.check << ": residual "
       << format_real(r.residual) << " exceeds tolerance " << format_real(r.tolerance);
    return os.str();
}

}  // namespace

RunReport run_suites(const Scenario& s, std::size_t threads) {
    RunReport report;
    report.scenario = s.name;
    report.warnings = s.warnings;
    const std::size_t nc = s.cases.size(), ns = s.suites.size();

    std::vector<CaseResult> results(ns * nc);
    std::vector<double> seconds(ns * nc, 0.0);
    std::vector<std::string> errors(ns * nc);
    std::vector<std::vector<ValueRow>> per_case(nc);

    parallel_for(ns * nc + nc, threads, [&](std::size_t task) {
        if (task >= ns * nc) {
            // Value tables, one task per case.
            const std::size_t ci = task - ns * nc;
            const CaseSpec& c = s.cases[ci];
            std::vector<ValueRow>& rows = per_case[ci];
            try {
                const AdaptedProcess eu = constrained_snell(c.tree, c.payoff, c.hz).value;
                const AdaptedProcess up = american_upper_price(c.tree, c.payoff, c.hz).value;
                AdaptedProcess lo = AdaptedProcess::constant(c.tree, kNaN);
                if (upper_dominates_on_support(c.tree, c.payoff, c.hz))
                    lo = constrained_dynkin_game(c.tree, c.payoff, c.hz).value;
                for (NodeId v = 0; v < c.tree.node_count(); ++v)
                    rows.push_back({ci, v, c.tree.time_of(v), c.hz.delta[v], c.payoff.P[v], c.payoff.R[v], eu[v], up[v],
                                    lo[v]});
            } catch (const Error&) {
                rows.clear();
            }
            return;
        }
        const std::size_t si = task / nc, ci = task % nc;
        Recorder rec(ci);
        Rng rng = task_rng(s.seed, suite_index(s.suites[si]), ci);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            suite_fn(s.suites[si])(s, ci, s.cases[ci], rng, rec);
        } catch (const std::exception& e) {
            errors[task] = e.what();
        }
        seconds[task] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        results[task] = rec.take();
    });

    for (std::size_t si = 0; si < ns; ++si) {
        SuiteResult r;
        r.name = s.suites[si];
        for (std::size_t ci = 0; ci < nc; ++ci) {
            const std::size_t task = si * nc + ci;
            r.seconds += seconds[task];
            for (CheckRow& row : results[task].checks) {
                if (std::isfinite(row.residual)) r.max_residual = std::max(r.max_residual, row.residual);
                else r.max_residual = kInf;
                if (!row.passed) r.failures.push_back(describe_failure(s, row));
                r.checks.push_back(std::move(row));
            }
            for (TraceRow& t : results[task].traces) r.traces.push_back(std::move(t));
            if (!errors[task].empty()) {
                r.checks.push_back({ci, "error: " + errors[task], kInf, 0.0, false});
                r.failures.push_back("case " + std::to_string(ci) + " (" + s.cases[ci].label + "): " + errors[task]);
                r.max_residual = kInf;
            }
        }
        r.passed = r.failures.empty();
        report.passed = report.passed && r.passed;
        report.suites.push_back(std::move(r));
    }
    for (auto& rows : per_case)
        for (ValueRow& v : rows) report.values.push_back(v);
    return report;
}

std::vector<EnumerationSummary> enumeration_summary(const Scenario& s) {
    std::vector<EnumerationSummary> out;
    for (std::size_t i = 0; i < s.cases.size(); ++i) {
        const CaseSpec& c = s.cases[i];
        out.push_back({i, count_stopping_times(c.tree, all_nodes_mask(c.tree), s.enumeration_cap),
                       count_stopping_times(c.tree, c.hz.support(c.tree), s.enumeration_cap)});
    }
    return out;
}

}  // namespace vulnlab::runner
