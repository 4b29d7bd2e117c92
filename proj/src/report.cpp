#include "adns/report.hpp"

#include "adns/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace adns {

using nlohmann::ordered_json;

bool operator==(const RunRecord& a, const RunRecord& b) {
    auto same_bound = [](const BoundReport& x, const BoundReport& y) {
        return x.theorem == y.theorem && x.lhs == y.lhs && x.rhs == y.rhs && x.slack == y.slack &&
               x.lipschitz == y.lipschitz && x.eta == y.eta && x.steps == y.steps && x.sigma == y.sigma &&
               x.terms == y.terms && x.precondition_met == y.precondition_met &&
               x.premise_held == y.premise_held && x.premise_rate == y.premise_rate;
    };
    return a.method == b.method && a.seed == b.seed && a.k0 == b.k0 && a.alpha_max == b.alpha_max &&
           a.alpha_min == b.alpha_min && a.beta == b.beta && a.accuracy == b.accuracy && a.acc == b.acc &&
           a.bwt == b.bwt && a.la == b.la && a.bounds.size() == b.bounds.size() &&
           std::equal(a.bounds.begin(), a.bounds.end(), b.bounds.begin(), same_bound);
}

void compute_metrics(RunRecord& record) {
    record.acc = acc(record.accuracy);
    record.la = la(record.accuracy);
    record.bwt = record.accuracy.tasks() >= 2 ? std::optional<double>(bwt(record.accuracy)) : std::nullopt;
}

ResultFormat parse_result_format(const std::string& name) {
    if (name == "csv") return ResultFormat::Csv;
    if (name == "json") return ResultFormat::Json;
    throw ValidationError("unknown result format '" + name + "' (expected csv or json)");
}

std::string to_string(ResultFormat f) { return f == ResultFormat::Csv ? "csv" : "json"; }

namespace {

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
    return buf;
}

// Shortest text that parses back to the same double.
std::string number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

ordered_json bound_to_json(const BoundReport& b) {
    ordered_json j;
    j["theorem"] = to_string(b.theorem);
    j["lhs"] = b.lhs;
    j["rhs"] = b.rhs;
    j["slack"] = b.slack;
    j["L_f"] = b.lipschitz;
    j["eta"] = b.eta;
    j["S"] = b.steps;
    j["sigma"] = b.sigma;
    ordered_json terms = ordered_json::object();
    for (const auto& [k, v] : b.terms) terms[k] = v;
    j["terms"] = terms;
    j["precondition_met"] = b.precondition_met;
    j["premise_held"] = b.premise_held ? ordered_json(*b.premise_held) : ordered_json(nullptr);
    j["premise_rate"] = b.premise_rate ? ordered_json(*b.premise_rate) : ordered_json(nullptr);
    return j;
}

BoundReport bound_from_json(const ordered_json& j) {
    BoundReport b;
    const std::string name = j.at("theorem").get<std::string>();
    if (name == "plasticity") b.theorem = Bound::Plasticity;
    else if (name == "stability") b.theorem = Bound::Stability;
    else throw ValidationError("results: unknown theorem '" + name + "'");
    b.lhs = j.at("lhs").get<double>();
    b.rhs = j.at("rhs").get<double>();
    b.slack = j.at("slack").get<double>();
    b.lipschitz = j.at("L_f").get<double>();
    b.eta = j.at("eta").get<double>();
    b.steps = j.at("S").get<std::size_t>();
    b.sigma = j.at("sigma").get<double>();
    for (const auto& [k, v] : j.at("terms").items()) b.terms[k] = v.get<double>();
    b.precondition_met = j.at("precondition_met").get<bool>();
    if (!j.at("premise_held").is_null()) b.premise_held = j.at("premise_held").get<bool>();
    if (!j.at("premise_rate").is_null()) b.premise_rate = j.at("premise_rate").get<double>();
    return b;
}

}  // namespace

std::string format_results_csv(const std::vector<RunRecord>& runs) {
    std::size_t tasks = 0;
    for (const RunRecord& r : runs) tasks = std::max(tasks, r.accuracy.tasks());

    std::ostringstream out;
    out << "method,seed,k0,alpha_max,alpha_min,beta,ACC,BWT,LA";
    for (std::size_t j = 1; j <= tasks; ++j)
        for (std::size_t i = 1; i <= j; ++i) out << ",A_" << j << '_' << i;
    out << '\n';

    for (const RunRecord& r : runs) {
        out << csv_field(r.method) << ',' << r.seed << ',' << number(r.k0) << ',' << number(r.alpha_max) << ','
            << number(r.alpha_min) << ',' << number(r.beta) << ',' << percent(r.acc) << ','
            << (r.bwt ? percent(*r.bwt) : std::string()) << ',' << percent(r.la);
        for (std::size_t j = 0; j < tasks; ++j) {
            for (std::size_t i = 0; i <= j; ++i) {
                out << ',';
                if (const auto v = r.accuracy.get(j, i)) out << percent(*v);
            }
        }
        out << '\n';
    }
    return out.str();
}

std::string format_results_json(const std::vector<RunRecord>& runs) {
    ordered_json doc;
    doc["runs"] = ordered_json::array();
    for (const RunRecord& r : runs) {
        ordered_json j;
        j["method"] = r.method;
        j["seed"] = r.seed;
        j["k0"] = r.k0;
        j["alpha_max"] = r.alpha_max;
        j["alpha_min"] = r.alpha_min;
        j["beta"] = r.beta;
        j["ACC"] = r.acc;
        j["BWT"] = r.bwt ? ordered_json(*r.bwt) : ordered_json(nullptr);
        j["LA"] = r.la;
        j["tasks"] = r.accuracy.tasks();
        ordered_json rows = ordered_json::array();
        for (std::size_t a = 0; a < r.accuracy.tasks(); ++a) {
            ordered_json row = ordered_json::array();
            for (std::size_t b = 0; b <= a; ++b) {
                const auto v = r.accuracy.get(a, b);
                row.push_back(v ? ordered_json(*v) : ordered_json(nullptr));
            }
            rows.push_back(row);
        }
        j["accuracy"] = rows;
        ordered_json bounds = ordered_json::array();
        for (const BoundReport& b : r.bounds) bounds.push_back(bound_to_json(b));
        j["bounds"] = bounds;
        doc["runs"].push_back(j);
    }
    return doc.dump(2) + "\n";
}

std::vector<RunRecord> parse_results_json(const std::string& text) {
    std::vector<RunRecord> runs;
    try {
        const ordered_json doc = ordered_json::parse(text);
        for (const ordered_json& j : doc.at("runs")) {
            RunRecord r;
            r.method = j.at("method").get<std::string>();
            r.seed = j.at("seed").get<std::uint64_t>();
            r.k0 = j.at("k0").get<double>();
            r.alpha_max = j.at("alpha_max").get<double>();
            r.alpha_min = j.at("alpha_min").get<double>();
            r.beta = j.at("beta").get<double>();
            r.acc = j.at("ACC").get<double>();
            if (!j.at("BWT").is_null()) r.bwt = j.at("BWT").get<double>();
            r.la = j.at("LA").get<double>();
            const auto tasks = j.at("tasks").get<std::size_t>();
            r.accuracy = AccuracyMatrix(tasks);
            const ordered_json& rows = j.at("accuracy");
            if (rows.size() != tasks) throw ValidationError("results: accuracy rows do not match tasks");
            for (std::size_t a = 0; a < tasks; ++a) {
                const ordered_json& row = rows.at(a);
                if (row.size() != a + 1) throw ValidationError("results: accuracy row has the wrong length");
                for (std::size_t b = 0; b <= a; ++b)
                    if (!row.at(b).is_null()) r.accuracy.set(a, b, row.at(b).get<double>());
            }
            for (const ordered_json& b : j.at("bounds")) r.bounds.push_back(bound_from_json(b));
            runs.push_back(std::move(r));
        }
    } catch (const ordered_json::exception& e) {
        throw ValidationError(std::string("results: malformed JSON: ") + e.what());
    }
    return runs;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    if (path.empty()) throw IoError(path, "empty output path");
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(path, std::string("cannot open for writing: ") + std::strerror(errno));
        out << contents;
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError(path, "write failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw IoError(path, "cannot replace file: " + ec.message());
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(path, "read failed");
    return ss.str();
}

void emit_results(const std::vector<RunRecord>& runs, ResultFormat format, const std::string& path) {
    write_file_atomic(path, format == ResultFormat::Csv ? format_results_csv(runs) : format_results_json(runs));
}

}  // namespace adns
