#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mcbet/core.hpp"
#include "mcbet/engine.hpp"
#include "mcbet/strategies.hpp"

namespace mcbet {

enum class ResponseModel { normal, lognormal };

/// One competitor in an experiment: a betting strategy (optionally with
/// stochastic rounding at the stop), Besag-Clifford, or the fixed-T permutation test.
struct MethodConfig {
    enum class Kind { betting, besag_clifford, permutation };
    Kind kind = Kind::betting;
    StrategyConfig strategy;
    bool rounding = false;
    std::uint64_t h = 0;  // Besag-Clifford loss budget; 0 means alpha * T
    std::string name;

    static MethodConfig betting(StrategyConfig strategy, bool rounding = false);
    static MethodConfig besag_clifford(std::uint64_t h = 0);
    static MethodConfig permutation();
    std::string display_name() const;
};

void to_json(nlohmann::json& j, const MethodConfig& m);
void from_json(const nlohmann::json& j, MethodConfig& m);

struct TrialConfig {
    std::uint64_t m = 500;
    std::uint64_t n = 1000;
    double mu = 0.0;
    ResponseModel response = ResponseModel::normal;
    std::uint64_t T = 1000;
    double alpha = 0.05;
    std::vector<MethodConfig> methods;
    std::uint64_t seed = 1;
    bool futility = true;
    TiePolicy ties = TiePolicy::randomized;
    double treat_probability = 0.5;

    void validate() const;
};

/// Result of one method on one trial.
struct MethodOutcome {
    std::uint64_t stop_time = 0;
    StopReason stop_reason = StopReason::exhausted;
    bool rejected = false;  // final decision, after rounding when enabled
    double p_value = 1.0;
    double e_value = 1.0;
};

struct TrialResult {
    std::uint64_t trial_index = 0;
    double observed = 0.0;
    std::uint64_t permutations_drawn = 0;
    std::vector<MethodOutcome> outcomes;  // parallel to TrialConfig::methods
};

/// Draws one treatment-vs-control dataset and runs every method on one shared
/// indicator stream of label permutations (with replacement across draws).
/// Empty treatment or control groups are redrawn.
TrialResult run_two_sample_trial(const TrialConfig& config, std::uint64_t trial_index);

struct ExperimentRow {
    std::string method;
    double mu = 0.0;
    std::uint64_t m = 0;
    std::uint64_t T = 0;
    double power = 0.0;
    double mean_stop = 0.0;
    double median_stop = 0.0;
    double mean_stop_rejected = 0.0;  // tau-bar_1
    double mean_stop_futility = 0.0;  // tau-bar_0
    std::uint64_t m_rejected = 0;     // m_1: stopped for rejection
    std::uint64_t m_futility = 0;     // m_0: stopped for futility

    /// (tau1 m1 + tau0 m0 + T (m - m1 - m0)) / m
    double accounting_mean() const;
};

using ExperimentTable = std::vector<ExperimentRow>;

/// Summarizes outcomes of one method. Runs neither rejected nor stopped for
/// futility count as reaching the cap T.
ExperimentRow aggregate(std::span<const MethodOutcome> outcomes, std::uint64_t T, std::string method = {},
                        double mu = 0.0);

/// All trials of one configuration; `jobs` worker threads (results do not depend on it).
std::vector<TrialResult> run_trials(const TrialConfig& config, unsigned jobs = 1);
ExperimentTable summarize(const TrialConfig& config, std::span<const TrialResult> trials);

struct SimulationConfig {
    TrialConfig trial;
    std::vector<double> mu_grid;
};

SimulationConfig parse_simulation_config(const nlohmann::json& j);
nlohmann::json simulation_config_to_json(const SimulationConfig& cfg);
ExperimentTable run_simulation(const SimulationConfig& cfg, unsigned jobs = 1);

void write_table_csv(std::ostream& os, const ExperimentTable& table);
nlohmann::json table_to_json(const ExperimentTable& table);

// ---------------------------------------------------------------------------

struct CountTableConfig {
    std::uint64_t treated_successes = 18;
    std::uint64_t treated_total = 32;
    std::uint64_t control_successes = 5;
    std::uint64_t control_total = 21;

    void validate() const;
};

struct CountExperimentOptions {
    double alpha = 0.05;
    std::uint64_t repeats = 1000;
    std::uint64_t max_permutations = 5000;
    bool futility = false;
    TiePolicy ties = TiePolicy::conservative;
    std::uint64_t seed = 2024;
};

/// Repeats the permutation test on a fixed 2x2 table: labels are permuted, the
/// statistic is the treated-minus-control success proportion.
ExperimentTable run_count_table_experiment(const CountTableConfig& config, std::span<const MethodConfig> methods,
                                           const CountExperimentOptions& options);

// ---------------------------------------------------------------------------

struct RiskOptions {
    std::uint64_t runs = 1000;
    std::uint64_t cap = kDefaultMaxSteps;
    std::uint64_t seed = 7;
    bool futility = false;
    /// Randomized variant: stop once W >= (1 - epsilon)/alpha, then round stochastically.
    std::optional<double> epsilon;
};

struct RiskEstimate {
    double q = 0.0;
    double risk = 0.0;
    double standard_error = 0.0;
    std::uint64_t runs = 0;
    std::uint64_t rejections = 0;
    double mean_stop = 0.0;
};

/// Resampling risk under i.i.d. Bernoulli(q) indicators: the fraction of runs
/// whose decision disagrees with 1{q <= alpha}.
RiskEstimate estimate_resampling_risk(const StrategyConfig& strategy, double q, Alpha alpha,
                                      const RiskOptions& options);

/// Build identifier baked in at configure time (git describe).
std::string build_version();
nlohmann::json run_manifest(const nlohmann::json& config, std::uint64_t seed);

}  // namespace mcbet
