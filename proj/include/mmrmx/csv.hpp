#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mmrmx/harness.hpp"
#include "mmrmx/trial_data.hpp"

namespace mmrmx {

// ---------------------------------------------------------------------------
// Long-format dataset CSV: header `subject_id,treatment,x1,...,xK,time,y`,
// one row per (subject, time), empty y for missing outcomes.
// ---------------------------------------------------------------------------

TrialDataset read_long_csv(std::istream& in);
TrialDataset read_long_csv_file(const std::string& path);

std::string long_csv_string(const TrialDataset& ds);

// ---------------------------------------------------------------------------
// Scenario results CSV: one row per (scenario, estimator) with columns
// delta,rho,b,n,n_reps,estimator,rejection_rate,mc_se,mean_tau,sd_tau,mean_se,n_fail
// ---------------------------------------------------------------------------

inline constexpr const char* kResultsHeader =
    "delta,rho,b,n,n_reps,estimator,rejection_rate,mc_se,mean_tau,sd_tau,mean_se,n_fail";

std::string results_csv_string(const std::vector<ScenarioResult>& results);

struct ResultRow {
    double delta = 0.0, rho = 0.0, b = 0.0;
    int n = 0, n_reps = 0;
    std::string estimator;
    double rejection_rate = 0.0, mc_se = 0.0, mean_tau = 0.0, sd_tau = 0.0,
           mean_se = 0.0;
    int n_fail = 0;
};

std::vector<ResultRow> parse_results_csv(const std::string& text);

// Replication-level audit CSV.
std::string replications_csv_string(const std::vector<ReplicationRecord>& recs);

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

// Shortest round-trip decimal representation (std::to_chars).
std::string format_double(double v);

// Writes via a temp file in the same directory plus an atomic rename.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

}  // namespace mmrmx
