#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vulnlab/runner.hpp"

namespace {

using namespace vulnlab::runner;
using nlohmann::json;

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

std::string resolve_out(const std::string& flag, const Scenario& s) {
    if (!flag.empty()) return flag;
    if (!s.out_dir.empty()) return s.out_dir;
    if (const char* env = std::getenv("VULNLAB_OUT_DIR"); env != nullptr && *env != '\0') return env;
    return "vulnlab_out";
}

void print_warnings(const std::vector<std::string>& w) {
    for (const std::string& line : w) std::cerr << "warning: " << line << "\n";
}

bool print_report(const RunReport& r) {
    for (const SuiteResult& s : r.suites) {
        std::cout << (s.passed ? "PASS " : "FAIL ") << s.name << "  max_residual=" << format_real(s.max_residual)
                  << "  checks=" << s.checks.size() << "\n";
        for (const std::string& f : s.failures) std::cout << "  " << f << "\n";
        std::cerr << "time " << s.name << " " << s.seconds << " s\n";
    }
    std::cout << (r.passed ? "all suites passed" : "some suites failed") << "\n";
    return r.passed;
}

int run_once(Scenario s, std::size_t threads, const std::string& out) {
    print_warnings(s.warnings);
    const RunReport r = run_suites(s, threads);
    const EmittedFiles files = emit_reports(r, out, s.formats);
    for (const std::string& p : files.paths) std::cerr << "wrote " << p << "\n";
    return print_report(r) ? 0 : kExitFail;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

json parse_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return text;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vulnerable claim lab: scenario runner"};
    app.require_subcommand(1);

    std::string scenario_path, out_flag, param;
    std::size_t threads = 1;
    std::vector<std::string> values;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("scenario", scenario_path, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", out_flag, "Output directory (default: scenario output.dir, then $VULNLAB_OUT_DIR)");
    };
    CLI::App* run = app.add_subcommand("run", "Run the suites selected in a scenario");
    add_common(run);
    CLI::App* sweep = app.add_subcommand("sweep", "Run a scenario once per value of one parameter");
    add_common(sweep);
    sweep->add_option("--param", param, "JSON pointer into the scenario, e.g. /tolerances/dirac")->required();
    sweep->add_option("--values", values, "Values, each parsed as JSON")->required();
    CLI::App* oracle = app.add_subcommand("oracle", "Exhaustive enumeration oracles only");
    add_common(oracle);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            Scenario s = parse_scenario(scenario_path);
            return run_once(s, threads, resolve_out(out_flag, s));
        }
        if (oracle->parsed()) {
            Scenario s = parse_scenario(scenario_path);
            for (const EnumerationSummary& e : enumeration_summary(s))
                std::cout << "case " << e.case_index << ": " << e.all_nodes << " stopping times, " << e.support
                          << " valued in S-bar\n";
            s.suites = {"oracle-equivalence"};
            return run_once(s, threads, resolve_out(out_flag, s));
        }
        const json base = load_json(scenario_path);
        const json::json_pointer ptr(param);
        Scenario first = scenario_from_json(base, scenario_path);
        const std::filesystem::path root = resolve_out(out_flag, first);
        std::string summary = "index,value,suite,passed,max_residual\n";
        bool all = true;
        for (std::size_t i = 0; i < values.size(); ++i) {
            json doc = base;
            doc[ptr] = parse_value(values[i]);
            Scenario s = scenario_from_json(doc, scenario_path + " [" + param + " = " + values[i] + "]");
            if (s.name.empty()) s.name = std::filesystem::path(scenario_path).stem().string();
            std::cout << "== " << param << " = " << values[i] << "\n";
            print_warnings(s.warnings);
            const RunReport r = run_suites(s, threads);
            emit_reports(r, (root / ("sweep_" + std::to_string(i))).string(), s.formats);
            all = print_report(r) && all;
            for (const SuiteResult& sr : r.suites)
                summary += std::to_string(i) + "," + csv_field(doc[ptr].dump()) + "," + sr.name + "," + (sr.passed ? "1" : "0") +
                           "," + format_real(sr.max_residual) + "\n";
        }
        std::filesystem::create_directories(root);
        std::ofstream(root / "sweep.csv", std::ios::binary) << summary;
        return all ? 0 : kExitFail;
    } catch (const ScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFail;
    }
}
