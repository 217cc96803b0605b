// Command-line front end: scenario-grid simulation, single-dataset fits,
// reproduction of the power and type-I-error figures, and the large-n
// asymptotic checks.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "mmrmx/config.hpp"
#include "mmrmx/csv.hpp"
#include "mmrmx/estimators.hpp"
#include "mmrmx/harness.hpp"
#include "mmrmx/svg.hpp"

namespace {

using namespace mmrmx;

constexpr std::uint64_t kDefaultPowerSeed = 20260809;
constexpr std::uint64_t kDefaultErrorSeed = 20260810;

int default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

int run_simulate(const std::string& config_path, const std::string& out_path,
                 int workers, std::optional<std::uint64_t> seed,
                 const std::string& audit_path) {
    std::vector<ScenarioConfig> grid;
    try {
        grid = load_grid_config_file(config_path, seed);
    } catch (const Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }
    const auto results = run_grid(grid, workers);
    write_file_atomic(out_path, results_csv_string(results));

    if (!audit_path.empty()) {
        std::vector<ReplicationRecord> recs;
        for (std::size_t s = 0; s < grid.size(); ++s)
            for (int r = 0; r < grid[s].n_reps; ++r)
                recs.push_back(run_replication(grid[s], r, static_cast<int>(s)));
        write_file_atomic(audit_path, replications_csv_string(recs));
    }
    return 0;
}

int run_fit(const std::string& data_path, const std::string& model,
            const std::string& se, bool no_centering, double tol, int max_iter) {
    ModelSpec spec;
    if (model == "ancova")
        spec.variant = ModelVariant::Ancova;
    else if (model == "mmrm")
        spec.variant = ModelVariant::Mmrm;
    else
        spec.variant = ModelVariant::MmrmInteract;
    spec.se_kind = se == "sandwich" ? SeKind::Sandwich : SeKind::ModelBased;
    spec.centering = !no_centering;
    spec.tol = tol;
    spec.max_iter = max_iter;

    TrialDataset ds;
    try {
        ds = read_long_csv_file(data_path);
    } catch (const Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }

    FitResult result;
    try {
        result = fit(ds, spec);
    } catch (const NonMonotoneMissingness& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
    std::printf("%s\n", fit_result_json(result, 2).c_str());
    return result.converged ? 0 : 3;
}

int run_reproduce(bool power, const std::string& out_dir, int reps,
                  std::uint64_t seed, int workers) {
    const auto grid = power ? default_power_grid(reps, seed)
                            : default_error_grid(reps, seed);
    const auto results = run_grid(grid, workers);
    const std::string csv_path =
        out_dir + (power ? "/power.csv" : "/type1.csv");
    write_file_atomic(csv_path, results_csv_string(results));

    // Render from the file just written so the figure is a pure function of
    // the CSV contents.
    const auto rows = parse_results_csv(read_file(csv_path));
    RatePlotOptions opts;
    if (power) {
        opts.title = "Power by dropout rate (n=400, tau=1/3)";
        opts.y_max = 1.0;
    } else {
        opts.title = "Type I error under MAR dropout (n=400, tau=0)";
        double top = 0.0;
        for (const auto& r : rows) top = std::max(top, r.rejection_rate);
        opts.y_max = std::max(0.15, std::ceil((top + 0.01) / 0.05) * 0.05);
        opts.reference_line = 0.05;
    }
    write_file_atomic(out_dir + (power ? "/power.svg" : "/type1.svg"),
                      render_rates_svg(rows, opts));
    return 0;
}

int run_asymptotics(int n_large, double rho, double b, std::uint64_t seed) {
    ScenarioConfig cfg = default_scenario();
    cfg.rho = rho;
    cfg.b = b;
    cfg.seed = seed;
    const AsymptoticReport rep = asymptotic_check(cfg, n_large);
    nlohmann::json j;
    j["n"] = rep.n;
    j["max_beta_interact_gap"] = rep.max_beta_interact_gap;
    j["max_beta_shared_gap"] = rep.max_beta_shared_gap;
    j["se_tau_rel_gap_mmrm"] = rep.se_tau_rel_gap_mmrm;
    j["se_tau_rel_gap_mmrmx"] = rep.se_tau_rel_gap_mmrmx;
    j["mmrm_beta_vs_final_cov_gap"] = rep.mmrm_beta_vs_final_cov_gap;
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Longitudinal trial estimators (ANCOVA / MMRM / MMRMx) and "
                 "Monte Carlo power and type-I-error studies"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run a scenario grid from a JSON config");
    std::string config_path, out_path = "results.csv", audit_path;
    int workers = default_workers();
    std::optional<std::uint64_t> seed_override;
    sim->add_option("--config", config_path, "JSON grid config")->required();
    sim->add_option("--out", out_path, "Output results CSV");
    sim->add_option("--workers", workers, "Worker threads");
    sim->add_option("--seed", seed_override, "Override the base seed");
    sim->add_option("--audit", audit_path, "Also dump per-replication records");

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit one estimator to a long-format CSV");
    std::string data_path, model = "mmrm", se = "model";
    bool no_centering = false;
    double tol = 1e-8;
    int max_iter = 200;
    fit_cmd->add_option("data", data_path, "Long-format dataset CSV")->required();
    fit_cmd->add_option("--model", model, "ancova|mmrm|mmrmx")
        ->check(CLI::IsMember({"ancova", "mmrm", "mmrmx"}));
    fit_cmd->add_option("--se", se, "model|sandwich")
        ->check(CLI::IsMember({"model", "sandwich"}));
    fit_cmd->add_flag("--no-centering", no_centering, "Skip covariate centering");
    fit_cmd->add_option("--tol", tol, "Convergence tolerance");
    fit_cmd->add_option("--max-iter", max_iter, "Iteration cap");

    // reproduce-power / reproduce-error
    std::string out_dir = ".";
    int reps = 1000;
    std::uint64_t power_seed = kDefaultPowerSeed;
    std::uint64_t error_seed = kDefaultErrorSeed;
    int rep_workers = default_workers();
    auto* rp = app.add_subcommand("reproduce-power",
                                  "Power study grid -> power.csv + power.svg");
    rp->add_option("--out", out_dir, "Output directory");
    rp->add_option("--reps", reps, "Replications per scenario");
    rp->add_option("--seed", power_seed, "Base seed");
    rp->add_option("--workers", rep_workers, "Worker threads");

    auto* re = app.add_subcommand("reproduce-error",
                                  "Type-I-error grid -> type1.csv + type1.svg");
    re->add_option("--out", out_dir, "Output directory");
    re->add_option("--reps", reps, "Replications per scenario");
    re->add_option("--seed", error_seed, "Base seed");
    re->add_option("--workers", rep_workers, "Worker threads");

    // asymptotics
    auto* as = app.add_subcommand("asymptotics", "Large-n asymptotic limit report");
    int n_large = 200000;
    double rho = 0.6, b = 1.0;
    std::uint64_t as_seed = 424242;
    as->add_option("--n", n_large, "Simulated subject count");
    as->add_option("--rho", rho, "Residual correlation");
    as->add_option("--b", b, "Final-timepoint coefficient multiplier");
    as->add_option("--seed", as_seed, "Seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return run_simulate(config_path, out_path, workers, seed_override, audit_path);
        if (fit_cmd->parsed())
            return run_fit(data_path, model, se, no_centering, tol, max_iter);
        if (rp->parsed()) return run_reproduce(true, out_dir, reps, power_seed, rep_workers);
        if (re->parsed()) return run_reproduce(false, out_dir, reps, error_seed, rep_workers);
        if (as->parsed()) return run_asymptotics(n_large, rho, b, as_seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
    return 1;
}
