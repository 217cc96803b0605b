#include "mmrmx/csv.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mmrmx {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("IoError", "cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error("IoError", "short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_number(const std::string& s, int line_no, const char* what) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw CsvError("line " + std::to_string(line_no) + ": cannot parse " + what +
                       " from '" + s + "'");
    return v;
}

int parse_int(const std::string& s, int line_no, const char* what) {
    const double v = parse_number(s, line_no, what);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw CsvError("line " + std::to_string(line_no) + ": " + what +
                       " must be an integer, got '" + s + "'");
    return i;
}

}  // namespace

TrialDataset read_long_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw CsvError("empty input");
    const auto header = split_line(line);
    if (header.size() < 4 || header[0] != "subject_id" || header[1] != "treatment" ||
        header[header.size() - 2] != "time" || header.back() != "y")
        throw CsvError("header must be subject_id,treatment,x1,...,xK,time,y");
    const int K = static_cast<int>(header.size()) - 4;
    if (K < 1) throw CsvError("need at least one covariate column");
    for (int k = 0; k < K; ++k)
        if (header[2 + k] != "x" + std::to_string(k + 1))
            throw CsvError("covariate column " + std::to_string(k + 3) +
                           " must be named x" + std::to_string(k + 1));

    std::vector<LongRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_line(line);
        if (fields.size() != header.size())
            throw CsvError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
        LongRecord r;
        r.subject_id = parse_int(fields[0], line_no, "subject_id");
        r.treatment = parse_int(fields[1], line_no, "treatment");
        if (r.treatment != 0 && r.treatment != 1)
            throw CsvError("line " + std::to_string(line_no) + ": treatment must be 0 or 1");
        r.covariates.resize(K);
        for (int k = 0; k < K; ++k)
            r.covariates[k] = parse_number(fields[2 + k], line_no, "covariate");
        r.time = parse_int(fields[2 + K], line_no, "time");
        if (!fields[3 + K].empty())
            r.outcome = parse_number(fields[3 + K], line_no, "y");
        records.push_back(std::move(r));
    }
    return from_long_records(records);
}

TrialDataset read_long_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot open " + path);
    return read_long_csv(in);
}

std::string long_csv_string(const TrialDataset& ds) {
    std::string out = "subject_id,treatment";
    for (int k = 1; k <= ds.K; ++k) out += ",x" + std::to_string(k);
    out += ",time,y\n";
    for (const auto& rec : to_long_records(ds)) {
        out += std::to_string(rec.subject_id);
        out += ',';
        out += std::to_string(rec.treatment);
        for (int k = 0; k < ds.K; ++k) {
            out += ',';
            out += format_double(rec.covariates[k]);
        }
        out += ',';
        out += std::to_string(rec.time);
        out += ',';
        if (rec.outcome) out += format_double(*rec.outcome);
        out += '\n';
    }
    return out;
}

std::string results_csv_string(const std::vector<ScenarioResult>& results) {
    std::string out = kResultsHeader;
    out += '\n';
    for (const auto& res : results) {
        for (std::size_t e = 0; e < kEstimators.size(); ++e) {
            const EstimatorSummary& s = res.by_estimator[e];
            out += format_double(res.cfg.delta);
            out += ',';
            out += format_double(res.cfg.rho);
            out += ',';
            out += format_double(res.cfg.b);
            out += ',';
            out += std::to_string(res.cfg.n);
            out += ',';
            out += std::to_string(res.cfg.n_reps);
            out += ',';
            out += variant_name(kEstimators[e]);
            out += ',';
            out += format_double(s.rejection_rate);
            out += ',';
            out += format_double(s.mc_se);
            out += ',';
            out += format_double(s.mean_tau);
            out += ',';
            out += format_double(s.sd_tau);
            out += ',';
            out += format_double(s.mean_se);
            out += ',';
            out += std::to_string(s.n_fail);
            out += '\n';
        }
    }
    return out;
}

std::vector<ResultRow> parse_results_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw CsvError("empty results csv");
    if (split_line(line) != split_line(kResultsHeader))
        throw CsvError("unexpected results csv header: " + line);
    std::vector<ResultRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_line(line);
        if (f.size() != 12)
            throw CsvError("line " + std::to_string(line_no) + ": expected 12 fields");
        ResultRow r;
        r.delta = parse_number(f[0], line_no, "delta");
        r.rho = parse_number(f[1], line_no, "rho");
        r.b = parse_number(f[2], line_no, "b");
        r.n = parse_int(f[3], line_no, "n");
        r.n_reps = parse_int(f[4], line_no, "n_reps");
        r.estimator = f[5];
        r.rejection_rate = parse_number(f[6], line_no, "rejection_rate");
        r.mc_se = parse_number(f[7], line_no, "mc_se");
        r.mean_tau = parse_number(f[8], line_no, "mean_tau");
        r.sd_tau = parse_number(f[9], line_no, "sd_tau");
        r.mean_se = parse_number(f[10], line_no, "mean_se");
        r.n_fail = parse_int(f[11], line_no, "n_fail");
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string replications_csv_string(const std::vector<ReplicationRecord>& recs) {
    std::string out =
        "scenario_id,rep_index,estimator,tau_hat,se,p_value,reject,converged,failed,"
        "n_used,error\n";
    for (const auto& rec : recs) {
        for (std::size_t e = 0; e < kEstimators.size(); ++e) {
            const EstimatorOutcome& o = rec.by_estimator[e];
            out += std::to_string(rec.scenario_id);
            out += ',';
            out += std::to_string(rec.rep_index);
            out += ',';
            out += variant_name(kEstimators[e]);
            out += ',';
            out += format_double(o.tau_hat);
            out += ',';
            out += format_double(o.se);
            out += ',';
            out += format_double(o.p_value);
            out += ',';
            out += o.reject ? '1' : '0';
            out += ',';
            out += o.converged ? '1' : '0';
            out += ',';
            out += o.failed ? '1' : '0';
            out += ',';
            out += std::to_string(o.n_used);
            out += ',';
            out += o.error;
            out += '\n';
        }
    }
    return out;
}

}  // namespace mmrmx
