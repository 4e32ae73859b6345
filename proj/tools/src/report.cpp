#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "vulnlab/runner.hpp"

namespace vulnlab::runner {

using nlohmann::json;

std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

// Non-finite reals become strings so that the document stays valid JSON and round-trips.
json real(double x) {
    if (std::isfinite(x)) return x;
    return format_real(x);
}

double from_real(const json& j) {
    if (j.is_number()) return j.get<double>();
    const std::string s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ValidationError("not a real: " + s);
}

void write_file(const std::filesystem::path& p, const std::string& text, EmittedFiles& out) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + p.string());
    f << text;
    f.close();
    if (!f) throw Error("cannot write " + p.string());
    out.paths.push_back(p.string());
}

}  // namespace

json report_to_json(const RunReport& r) {
    json j;
    j["scenario"] = r.scenario;
    j["passed"] = r.passed;
    j["warnings"] = r.warnings;
    j["suites"] = json::array();
    for (const SuiteResult& s : r.suites) {
        json js;
        js["name"] = s.name;
        js["passed"] = s.passed;
        js["max_residual"] = real(s.max_residual);
        js["failures"] = s.failures;
        js["checks"] = json::array();
        for (const CheckRow& c : s.checks)
            js["checks"].push_back({{"case", c.case_index},
                                    {"check", c.check},
                                    {"residual", real(c.residual)},
                                    {"tolerance", real(c.tolerance)},
                                    {"passed", c.passed}});
        js["traces"] = json::array();
        for (const TraceRow& t : s.traces)
            js["traces"].push_back({{"case", t.case_index}, {"series", t.series}, {"n", real(t.n)}, {"gap", real(t.gap)}});
        j["suites"].push_back(std::move(js));
    }
    j["values"] = json::array();
    for (const ValueRow& v : r.values)
        j["values"].push_back({{"case", v.case_index},
                               {"node", v.node},
                               {"time", v.time},
                               {"delta", real(v.delta)},
                               {"P", real(v.P)},
                               {"R", real(v.R)},
                               {"european", real(v.european)},
                               {"upper", real(v.upper)},
                               {"lower", real(v.lower)}});
    return j;
}

RunReport report_from_json(const json& j) {
    RunReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.passed = j.at("passed").get<bool>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const json& js : j.at("suites")) {
        SuiteResult s;
        s.name = js.at("name").get<std::string>();
        s.passed = js.at("passed").get<bool>();
        s.max_residual = from_real(js.at("max_residual"));
        s.failures = js.at("failures").get<std::vector<std::string>>();
        for (const json& c : js.at("checks"))
            s.checks.push_back({c.at("case").get<std::size_t>(), c.at("check").get<std::string>(),
                                from_real(c.at("residual")), from_real(c.at("tolerance")), c.at("passed").get<bool>()});
        for (const json& t : js.at("traces"))
            s.traces.push_back({t.at("case").get<std::size_t>(), t.at("series").get<std::string>(), from_real(t.at("n")),
                                from_real(t.at("gap"))});
        r.suites.push_back(std::move(s));
    }
    for (const json& v : j.at("values"))
        r.values.push_back({v.at("case").get<std::size_t>(), v.at("node").get<NodeId>(), v.at("time").get<std::size_t>(),
                            from_real(v.at("delta")), from_real(v.at("P")), from_real(v.at("R")),
                            from_real(v.at("european")), from_real(v.at("upper")), from_real(v.at("lower"))});
    return r;
}

EmittedFiles emit_reports(const RunReport& r, const std::string& dir, const std::vector<std::string>& formats) {
    namespace fs = std::filesystem;
    EmittedFiles out;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());
    const fs::path base(dir);
    for (const std::string& fmt : formats) {
        if (fmt == "json") {
            write_file(base / "report.json", report_to_json(r).dump(2) + "\n", out);
        } else if (fmt == "csv") {
            std::string suites = "suite,passed,max_residual,checks,failures\n";
            std::string checks = "suite,case,check,residual,tolerance,passed\n";
            std::string traces = "suite,case,series,n,gap\n";
            for (const SuiteResult& s : r.suites) {
                suites += csv_field(s.name) + "," + (s.passed ? "1" : "0") + "," + format_real(s.max_residual) + "," +
                          std::to_string(s.checks.size()) + "," + std::to_string(s.failures.size()) + "\n";
                for (const CheckRow& c : s.checks)
                    checks += csv_field(s.name) + "," + std::to_string(c.case_index) + "," + csv_field(c.check) + "," +
                              format_real(c.residual) + "," + format_real(c.tolerance) + "," + (c.passed ? "1" : "0") +
                              "\n";
                for (const TraceRow& t : s.traces)
                    traces += csv_field(s.name) + "," + std::to_string(t.case_index) + "," + csv_field(t.series) + "," +
                              format_real(t.n) + "," + format_real(t.gap) + "\n";
            }
            std::string values = "case,node,time,delta,P,R,european,upper,lower\n";
            for (const ValueRow& v : r.values)
                values += std::to_string(v.case_index) + "," + std::to_string(v.node) + "," + std::to_string(v.time) +
                          "," + format_real(v.delta) + "," + format_real(v.P) + "," + format_real(v.R) + "," +
                          format_real(v.european) + "," + format_real(v.upper) + "," + format_real(v.lower) + "\n";
            write_file(base / "suites.csv", suites, out);
            write_file(base / "checks.csv", checks, out);
            write_file(base / "traces.csv", traces, out);
            write_file(base / "values.csv", values, out);
        } else {
            throw ValidationError("unknown report format '" + fmt + "'");
        }
    }
    return out;
}

}  // namespace vulnlab::runner
