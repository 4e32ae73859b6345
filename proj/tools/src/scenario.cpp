#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "vulnlab/error.hpp"
#include "vulnlab/instances.hpp"
#include "vulnlab/runner.hpp"

namespace vulnlab::runner {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& source, const std::string& where, const std::string& msg) {
    throw ScenarioError(source + ": " + where + ": " + msg);
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

double positive(const json& j, const std::string& src, const std::string& where) {
    const double x = j.get<double>();
    if (!(x > 0.0) || !std::isfinite(x)) fail(src, where, "must be a positive finite number");
    return x;
}

std::vector<double> real_vector(const json& j) { return j.get<std::vector<double>>(); }

bool is_flat_row(const json& j) { return j.is_array() && !j.empty() && j.front().is_number(); }

TreeSpec parse_tree(const json& j, const std::string& src) {
    TreeSpec s;
    try {
        if (j.contains("grid")) {
            s.grid = TimeGrid(real_vector(j.at("grid")));
        } else if (j.contains("steps")) {
            const std::size_t steps = j.at("steps").get<std::size_t>();
            const double horizon = j.contains("horizon") ? j.at("horizon").get<double>() : static_cast<double>(steps);
            s.grid = TimeGrid::uniform(steps, horizon);
        } else {
            fail(src, "/tree", "needs either grid or steps");
        }
        // p and q are either one row per nonterminal node or a single row shared by all nodes.
        if (!j.contains("p")) fail(src, "/tree", "needs p (rows of transition probabilities)");
        const bool flat_q = j.contains("q") && is_flat_row(j.at("q"));
        if (is_flat_row(j.at("p"))) {
            if (j.contains("q") && !flat_q) fail(src, "/tree/q", "a shared p row needs a shared q row");
            s = TreeSpec::uniform(s.grid, real_vector(j.at("p")), flat_q ? real_vector(j.at("q")) : std::vector<double>{});
        } else {
            if (flat_q) fail(src, "/tree/q", "a shared q row needs a shared p row");
            s.p = j.at("p").get<std::vector<std::vector<double>>>();
            if (j.contains("q")) s.q = j.at("q").get<std::vector<std::vector<double>>>();
        }
        if (j.contains("zf")) s.zf = real_vector(j.at("zf"));
    } catch (const json::exception& e) {
        fail(src, "/tree", e.what());
    } catch (const ScenarioError&) {
        throw;
    } catch (const Error& e) {
        fail(src, "/tree", e.what());
    }
    return s;
}

std::vector<double> per_node(const json& j, const FiniteTree& t, const std::string& src, const std::string& where) {
    if (j.is_number()) return std::vector<double>(t.node_count(), j.get<double>());
    if (j.is_array()) {
        std::vector<double> v = real_vector(j);
        if (v.size() != t.node_count()) {
            std::ostringstream os;
            os << "has " << v.size() << " entries for " << t.node_count() << " nodes";
            fail(src, where, os.str());
        }
        return v;
    }
    if (j.is_object() && j.contains("by_time")) {
        const std::vector<double> by = real_vector(j.at("by_time"));
        if (by.size() != t.steps() + 1) fail(src, where + "/by_time", "needs one value per time point");
        std::vector<double> v(t.node_count());
        for (NodeId n = 0; n < t.node_count(); ++n) v[n] = by[t.time_of(n)];
        return v;
    }
    fail(src, where, "expected a number, a per-node array or {\"by_time\": [...]}");
}

struct HazardPair {
    HazardSpec lab;
    bool nodewise = true;
    ReducedHazard hz;
};

HazardPair parse_hazard(const json& j, const FiniteTree& t, const std::string& src, const std::string& where) {
    HazardPair out;
    try {
        if (j.contains("survive_past_horizon")) out.lab.survive_past_horizon = j.at("survive_past_horizon").get<bool>();
        const bool lab_given = j.contains("h") || j.contains("path_h");
        if (j.contains("delta") && !lab_given) {
            std::vector<double> d = per_node(j.at("delta"), t, src, where + "/delta");
            out.hz = ReducedHazard::make(t, d);
            out.lab.node_h.assign(t.node_count(), 0.0);
            for (NodeId v = 0; v < t.node_count(); ++v)
                if (!t.is_terminal(v)) out.lab.node_h[v] = out.hz.delta[v] / (1.0 + out.hz.delta[v]);
            (void)ExtendedSpace::cox_extend(t, out.lab);
            return out;
        }
        if (j.contains("h")) {
            out.lab.node_h = per_node(j.at("h"), t, src, where + "/h");
            for (NodeId v = 0; v < t.node_count(); ++v)
                if (t.is_terminal(v)) out.lab.node_h[v] = 0.0;
        } else if (j.contains("path_h")) {
            out.lab.path_h = j.at("path_h").get<std::vector<std::vector<double>>>();
            out.nodewise = false;
        } else {
            fail(src, where, "needs h, path_h or delta");
        }
        const ExtendedSpace ext = ExtendedSpace::cox_extend(t, out.lab);
        // An explicit delta next to a lab hazard decouples the reduced side from the lab.
        out.hz = j.contains("delta") ? ReducedHazard::make(t, per_node(j.at("delta"), t, src, where + "/delta"))
                                     : reduced_hazard_from_projections(t, projections(ext));
    } catch (const json::exception& e) {
        fail(src, where, e.what());
    } catch (const ScenarioError&) {
        throw;
    } catch (const Error& e) {
        fail(src, where, e.what());
    }
    return out;
}

PayoffSpec parse_payoff(const json& j, const FiniteTree& t, const ReducedHazard& hz, Rng& rng,
                        const std::string& src, const std::string& where) {
    try {
        if (j.contains("random")) {
            const bool dominated = j.at("random").value("dominated", true);
            return random_payoff(rng, t, hz, dominated);
        }
        if (!j.contains("P") || !j.contains("R")) fail(src, where, "needs P and R");
        PayoffSpec p{AdaptedProcess(per_node(j.at("P"), t, src, where + "/P")),
                     AdaptedProcess(per_node(j.at("R"), t, src, where + "/R"))};
        p.validate(t);
        return p;
    } catch (const json::exception& e) {
        fail(src, where, e.what());
    } catch (const ScenarioError&) {
        throw;
    } catch (const Error& e) {
        fail(src, where, e.what());
    }
}

InstanceOptions random_options(const json& r) {
    InstanceOptions o;
    o.min_periods = r.value("min_periods", o.min_periods);
    o.max_periods = r.value("max_periods", o.max_periods);
    o.max_branching = r.value("max_branching", o.max_branching);
    o.max_stopping_times = r.value("max_stopping_times", o.max_stopping_times);
    o.distinct_pricing_measure = r.value("distinct_pricing_measure", o.distinct_pricing_measure);
    o.zero_hazard_probability = r.value("zero_hazard_probability", o.zero_hazard_probability);
    o.max_h = r.value("max_h", o.max_h);
    o.path_dependent_hazard = r.value("path_dependent_hazard", o.path_dependent_hazard);
    return o;
}

void parse_block(const json& blk, std::size_t block_index, std::uint64_t seed, const std::string& src,
                 const std::string& where, std::vector<CaseSpec>& cases) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block_index), 0x5eedu};
    Rng rng(seq);
    const json* random = nullptr;
    if (blk.contains("random")) random = &blk.at("random");
    if (blk.contains("tree") && blk.at("tree").is_object() && blk.at("tree").contains("random"))
        random = &blk.at("tree").at("random");
    if (random != nullptr) {
        InstanceOptions opt;
        std::size_t count = 1;
        bool dominated = true;
        try {
            opt = random_options(*random);
            count = random->value("count", std::size_t{1});
            dominated = random->value("dominated", true);
        } catch (const json::exception& e) {
            fail(src, where + "/random", e.what());
        }
        if (count == 0) fail(src, where + "/random/count", "must be at least 1");
        if (opt.min_periods < 1 || opt.max_periods < opt.min_periods || opt.max_branching < 1)
            fail(src, where + "/random", "needs 1 <= min_periods <= max_periods and max_branching >= 1");
        for (std::size_t i = 0; i < count; ++i) {
            CaseSpec c{.label = "", .tree = random_tree(rng, opt), .lab_hazard = {}, .lab_nodewise = true,
                       .hz = {}, .payoff = {}};
            c.label = blk.value("label", std::string("random")) + "#" + std::to_string(i);
            c.lab_hazard = random_hazard_spec(rng, c.tree, opt);
            c.lab_nodewise = c.lab_hazard.path_h.empty();
            c.hz = random_reduced_hazard(rng, c.tree, opt);
            c.payoff = random_payoff(rng, c.tree, c.hz, dominated);
            cases.push_back(std::move(c));
        }
        return;
    }
    if (!blk.contains("tree")) fail(src, where, "needs a tree section");
    if (!blk.contains("hazard")) fail(src, where, "needs a hazard section");
    if (!blk.contains("payoff")) fail(src, where, "needs a payoff section");
    FiniteTree t = [&] {
        try {
            return FiniteTree::build(parse_tree(blk.at("tree"), src));
        } catch (const ScenarioError&) {
            throw;
        } catch (const Error& e) {
            fail(src, where + "/tree", e.what());
        }
    }();
    HazardPair h = parse_hazard(blk.at("hazard"), t, src, where + "/hazard");
    PayoffSpec p = parse_payoff(blk.at("payoff"), t, h.hz, rng, src, where + "/payoff");
    CaseSpec c{.label = blk.value("label", std::string("case")),
               .tree = std::move(t),
               .lab_hazard = std::move(h.lab),
               .lab_nodewise = h.nodewise,
               .hz = std::move(h.hz),
               .payoff = std::move(p)};
    cases.push_back(std::move(c));
}

std::vector<double> parse_ladder(const json& j, const std::string& src) {
    std::vector<double> ladder;
    try {
        if (j.is_object()) {
            ladder = default_penalty_ladder(j.at("max_exponent").get<std::size_t>());
        } else {
            ladder = real_vector(j);
        }
    } catch (const json::exception& e) {
        fail(src, "/penalty_ladder", e.what());
    }
    if (ladder.empty()) fail(src, "/penalty_ladder", "must not be empty");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (!(ladder[i] >= 1.0) || !std::isfinite(ladder[i]))
            fail(src, "/penalty_ladder/" + std::to_string(i), "penalty must be a finite number >= 1");
        if (i > 0 && !(ladder[i] > ladder[i - 1]))
            fail(src, "/penalty_ladder/" + std::to_string(i), "ladder must be strictly increasing");
    }
    return ladder;
}

}  // namespace

json load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError(path + ": cannot open scenario file");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte);
        std::ostringstream os;
        os << path << ":" << line << ":" << col << ": parse error: " << e.what();
        throw ScenarioError(os.str());
    }
}

Scenario parse_scenario(const std::string& path) {
    const json doc = load_json(path);
    Scenario s = scenario_from_json(doc, path);
    if (s.name.empty()) s.name = std::filesystem::path(path).stem().string();
    return s;
}

Scenario scenario_from_json(const json& doc, const std::string& src) {
    if (!doc.is_object()) fail(src, "/", "scenario must be a JSON object");
    static const std::set<std::string> sections = {"name",     "seed",    "instances",      "tree",   "hazard",
                                                   "payoff",   "phi",     "suites",         "tolerances",
                                                   "penalty_ladder", "output", "faults", "enumeration_cap", "comment"};
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (!sections.count(key)) fail(src, "/" + key, "unknown section");
    }
    Scenario s;
    s.source = src;
    try {
        s.name = doc.value("name", std::string());
        s.seed = doc.value("seed", std::uint64_t{1});
        s.enumeration_cap = doc.value("enumeration_cap", s.enumeration_cap);
    } catch (const json::exception& e) {
        fail(src, "/", e.what());
    }

    if (doc.contains("instances")) {
        if (doc.contains("tree") || doc.contains("hazard") || doc.contains("payoff"))
            fail(src, "/instances", "use either instances or top-level tree/hazard/payoff, not both");
        const json& inst = doc.at("instances");
        if (!inst.is_array() || inst.empty()) fail(src, "/instances", "must be a nonempty array");
        for (std::size_t i = 0; i < inst.size(); ++i)
            parse_block(inst[i], i, s.seed, src, "/instances/" + std::to_string(i), s.cases);
    } else {
        parse_block(doc, 0, s.seed, src, "", s.cases);
    }
    for (const CaseSpec& c : s.cases)
        for (const std::string& w : c.hz.warnings) s.warnings.push_back(c.label + ": " + w);

    if (doc.contains("suites")) {
        try {
            s.suites = doc.at("suites").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            fail(src, "/suites", e.what());
        }
        if (s.suites.size() == 1 && s.suites[0] == "all") s.suites = known_suites();
        std::set<std::string> seen;
        for (std::size_t i = 0; i < s.suites.size(); ++i) {
            const auto& k = known_suites();
            if (std::find(k.begin(), k.end(), s.suites[i]) == k.end())
                fail(src, "/suites/" + std::to_string(i), "unknown suite '" + s.suites[i] + "'");
            if (!seen.insert(s.suites[i]).second)
                fail(src, "/suites/" + std::to_string(i), "suite '" + s.suites[i] + "' listed twice");
        }
    }
    if (s.suites.empty()) s.warnings.push_back("empty suite list: nothing to run");

    if (doc.contains("tolerances")) {
        const json& t = doc.at("tolerances");
        if (!t.is_object()) fail(src, "/tolerances", "must be an object");
        for (const auto& [key, value] : t.items()) {
            const std::string where = "/tolerances/" + key;
            const double x = positive(value, src, where);
            if (key == "identity") s.tol.identity = x;
            else if (key == "exact") s.tol.exact = x;
            else if (key == "penalized") s.tol.penalized = x;
            else if (key == "rbsde") s.tol.rbsde = x;
            else if (key == "skorokhod") s.tol.skorokhod = x;
            else if (key == "dirac") s.tol.dirac = x;
            else fail(src, where, "unknown tolerance");
        }
    }

    s.ladder = doc.contains("penalty_ladder") ? parse_ladder(doc.at("penalty_ladder"), src) : default_penalty_ladder(20);

    if (doc.contains("phi")) {
        const json& p = doc.at("phi");
        try {
            s.phi.random_count = p.value("random_per_instance", std::size_t{0});
            s.phi.include_zero = p.value("include_zero", true);
            if (p.contains("phi_o")) {
                if (s.cases.size() != 1) fail(src, "/phi/phi_o", "an explicit control needs exactly one instance");
                const CaseSpec& c = s.cases.front();
                PhiControl phi;
                phi.phi_o = AdaptedProcess(per_node(p.at("phi_o"), c.tree, src, "/phi/phi_o"));
                const ExtendedSpace ext = ExtendedSpace::cox_extend(c.tree, c.lab_hazard);
                phi.phi_pr = p.contains("phi_pr") ? real_vector(p.at("phi_pr")) : std::vector<double>(ext.atom_count(), 0.0);
                if (p.contains("bound_n")) phi.bound_n = p.at("bound_n").get<double>();
                const PhiValidation v = validate_phi(ext, phi);
                if (!v.valid) fail(src, "/phi", v.message);
                s.phi.fixed = std::move(phi);
            }
        } catch (const json::exception& e) {
            fail(src, "/phi", e.what());
        }
    }

    if (doc.contains("output")) {
        const json& o = doc.at("output");
        try {
            s.out_dir = o.value("dir", std::string());
            if (o.contains("formats")) s.formats = o.at("formats").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            fail(src, "/output", e.what());
        }
        for (const std::string& f : s.formats)
            if (f != "csv" && f != "json") fail(src, "/output/formats", "unknown format '" + f + "'");
    }
    if (s.formats.empty()) s.formats = {"csv", "json"};

    if (doc.contains("faults")) {
        const json& f = doc.at("faults");
        if (f.contains("perturb_Ao")) {
            const json& a = f.at("perturb_Ao");
            try {
                s.faults.ao_case = a.value("case", std::size_t{0});
                s.faults.ao_node = a.at("node").get<NodeId>();
                s.faults.ao_amount = a.at("amount").get<double>();
            } catch (const json::exception& e) {
                fail(src, "/faults/perturb_Ao", e.what());
            }
            if (*s.faults.ao_case >= s.cases.size()) fail(src, "/faults/perturb_Ao/case", "no such instance");
            if (s.faults.ao_node >= s.cases[*s.faults.ao_case].tree.node_count())
                fail(src, "/faults/perturb_Ao/node", "no such node");
        }
    }
    return s;
}

}  // namespace vulnlab::runner
