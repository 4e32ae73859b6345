#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vulnlab/error.hpp"
#include "vulnlab/european.hpp"
#include "vulnlab/measure_change.hpp"
#include "vulnlab/random_time.hpp"
#include "vulnlab/tree.hpp"

namespace vulnlab::runner {

// Scenario problems are reported with the file and a line or JSON-pointer location.
class ScenarioError : public Error {
public:
    using Error::Error;
};

inline const std::vector<std::string>& known_suites() {
    static const std::vector<std::string> names = {
        "projection-identities", "martingale-transforms", "measure-change",
        "european-duality",      "dirac-convergence",     "rbsde-vs-optstop",
        "american-upper",        "game-duality",          "oracle-equivalence",
    };
    return names;
}

struct Tolerances {
    double identity = 1e-12;   // projection, transform and measure-change identities
    double exact = 1e-12;      // recursion versus enumeration
    double penalized = 1e-5;   // penalized value at the last ladder rung versus its limit
    double rbsde = 1e-10;      // weighted optimal stopping versus reflected solve
    double skorokhod = 1e-12;  // complementarity residual
    double dirac = 1e-4;       // Dirac gap at the last ladder rung
};

struct CaseSpec {
    std::string label;
    FiniteTree tree;
    HazardSpec lab_hazard;
    bool lab_nodewise = true;  // hazard depends on the current node only
    ReducedHazard hz;
    PayoffSpec payoff;
};

struct PhiPlan {
    std::size_t random_count = 0;
    bool include_zero = true;
    std::optional<PhiControl> fixed;
};

struct FaultPlan {
    // Adds amount to A^o at a node of one case before the identities are checked.
    std::optional<std::size_t> ao_case;
    NodeId ao_node = 0;
    double ao_amount = 0.0;
};

struct Scenario {
    std::string name;
    std::string source;
    std::uint64_t seed = 0;
    std::vector<CaseSpec> cases;
    std::vector<std::string> suites;
    Tolerances tol;
    std::vector<double> ladder;
    PhiPlan phi;
    FaultPlan faults;
    std::uint64_t enumeration_cap = 10'000'000;
    std::string out_dir;               // empty: decided by the caller
    std::vector<std::string> formats;  // "csv", "json"
    std::vector<std::string> warnings;
};

Scenario parse_scenario(const std::string& path);
Scenario scenario_from_json(const nlohmann::json& doc, const std::string& source);
nlohmann::json load_json(const std::string& path);

struct CheckRow {
    std::size_t case_index = 0;
    std::string check;
    double residual = 0.0;
    double tolerance = 0.0;
    bool passed = true;
};

struct TraceRow {
    std::size_t case_index = 0;
    std::string series;
    double n = 0.0;
    double gap = 0.0;
};

struct SuiteResult {
    std::string name;
    bool passed = true;
    double max_residual = 0.0;
    std::vector<CheckRow> checks;
    std::vector<TraceRow> traces;
    std::vector<std::string> failures;
    double seconds = 0.0;  // wall time, kept out of the emitted files
};

struct ValueRow {
    std::size_t case_index = 0;
    NodeId node = 0;
    std::size_t time = 0;
    double delta = 0.0;
    double P = 0.0;
    double R = 0.0;
    double european = 0.0;  // constrained Snell envelope
    double upper = 0.0;     // American upper price
    double lower = 0.0;     // game value, NaN when P <= R fails on the support
};

struct RunReport {
    std::string scenario;
    std::vector<SuiteResult> suites;
    std::vector<ValueRow> values;
    std::vector<std::string> warnings;
    bool passed = true;
};

RunReport run_suites(const Scenario& s, std::size_t threads = 1);

struct EmittedFiles {
    std::vector<std::string> paths;
};

EmittedFiles emit_reports(const RunReport& r, const std::string& dir, const std::vector<std::string>& formats);

nlohmann::json report_to_json(const RunReport& r);
RunReport report_from_json(const nlohmann::json& j);
std::string format_real(double x);

// Stopping-time count per case over all nodes and over the support.
struct EnumerationSummary {
    std::size_t case_index = 0;
    std::uint64_t all_nodes = 0;
    std::uint64_t support = 0;
};
std::vector<EnumerationSummary> enumeration_summary(const Scenario& s);

}  // namespace vulnlab::runner
