#include "mcbet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <mutex>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <thread>

#include "mcbet/classical.hpp"

#ifndef MCBET_BUILD_VERSION
#define MCBET_BUILD_VERSION "unknown"
#endif

namespace mcbet {

namespace {

bool at_most_alpha(const Fraction& p, double alpha) { return p.value() <= alpha * (1.0 + 1e-12); }

std::uint64_t default_bc_h(double alpha, std::uint64_t T) {
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(alpha * static_cast<double>(T))));
}

// Stream ids inside one trial. Indicator-side ids keep the top bit clear.
std::uint64_t data_stream(std::uint64_t trial) { return 2 * trial; }
std::uint64_t permutation_stream(std::uint64_t trial) { return 2 * trial + 1; }
std::uint64_t rounding_stream(std::uint64_t trial, std::size_t method) {
    return rounding_stream_id(trial * 1024 + method);
}

MethodOutcome run_method(const MethodConfig& method, const std::shared_ptr<IndicatorTape>& tape, double alpha,
                         std::uint64_t T, bool futility, std::uint64_t seed, std::uint64_t rounding_id) {
    MethodOutcome out;
    auto stream = tape->replay();
    switch (method.kind) {
        case MethodConfig::Kind::betting: {
            const auto rule = StoppingRule::level(Alpha{alpha}, futility, T);
            const auto result = run_test(stream, method.strategy, rule);
            out.stop_time = result.stop_time;
            out.stop_reason = result.stop_reason;
            out.p_value = result.p_value();
            out.e_value = result.e_value();
            out.rejected = result.rejected();
            if (method.rounding && !out.rejected) {
                RandomSource rng(seed, rounding_id);
                out.rejected = stochastic_round(out.e_value, Alpha{alpha}, rng).reject;
            }
            break;
        }
        case MethodConfig::Kind::besag_clifford: {
            const std::uint64_t h = method.h ? method.h : default_bc_h(alpha, T);
            const auto result = bc_pvalue(stream, h, T);
            out.stop_time = result.stop_time;
            out.p_value = result.p.value();
            out.e_value = 1.0 / out.p_value;
            out.rejected = at_most_alpha(result.p, alpha);
            if (out.rejected) out.stop_reason = StopReason::rejected;
            else if (result.losses == h && result.stop_time < T) out.stop_reason = StopReason::futility;
            else out.stop_reason = StopReason::exhausted;
            break;
        }
        case MethodConfig::Kind::permutation: {
            std::uint64_t losses = 0, t = 0;
            for (; t < T; ++t) {
                auto i = stream.next();
                if (!i) break;
                losses += static_cast<std::uint64_t>(as_int(*i));
            }
            if (t == 0) throw StreamExhausted();
            const auto p = perm_pvalue(losses, t);
            out.stop_time = t;
            out.p_value = p.value();
            out.e_value = 1.0 / out.p_value;
            out.rejected = at_most_alpha(p, alpha);
            out.stop_reason = out.rejected ? StopReason::rejected : StopReason::exhausted;
            break;
        }
    }
    return out;
}

struct TwoSampleData {
    std::vector<double> response;
    std::size_t treated = 0;
    double total = 0.0;
    double observed = 0.0;
};

double mean_difference(double treated_sum, double total, std::size_t treated, std::size_t n) {
    return treated_sum / static_cast<double>(treated) - (total - treated_sum) / static_cast<double>(n - treated);
}

TwoSampleData draw_two_sample(const TrialConfig& cfg, RandomSource& rng) {
    TwoSampleData d;
    std::vector<bool> label(cfg.n);
    do {
        d.treated = 0;
        for (std::size_t i = 0; i < cfg.n; ++i) {
            label[i] = rng.bernoulli(cfg.treat_probability);
            d.treated += label[i];
        }
    } while (d.treated == 0 || d.treated == cfg.n);

    d.response.resize(cfg.n);
    double treated_sum = 0.0;
    for (std::size_t i = 0; i < cfg.n; ++i) {
        double z = rng.normal() + (label[i] ? cfg.mu : 0.0);
        if (cfg.response == ResponseModel::lognormal) z = std::exp(z);
        d.response[i] = z;
        d.total += z;
        if (label[i]) treated_sum += z;
    }
    d.observed = mean_difference(treated_sum, d.total, d.treated, cfg.n);
    return d;
}

// Uniformly random treated subset of fixed size per call (partial Fisher-Yates);
// successive calls are independent draws.
class LabelPermuter {
public:
    LabelPermuter(std::size_t n, std::size_t treated, RandomSource rng)
        : index_(n), treated_(treated), rng_(rng) {
        for (std::size_t i = 0; i < n; ++i) index_[i] = static_cast<std::uint32_t>(i);
    }
    template <class F>
    void draw(F&& visit_treated) {
        const std::size_t n = index_.size();
        for (std::size_t i = 0; i < treated_; ++i) {
            const std::size_t j = i + rng_.below(n - i);
            std::swap(index_[i], index_[j]);
            visit_treated(index_[i]);
        }
    }

private:
    std::vector<std::uint32_t> index_;
    std::size_t treated_;
    RandomSource rng_;
};

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace

// ---------------------------------------------------------------------------

MethodConfig MethodConfig::betting(StrategyConfig strategy, bool rounding) {
    MethodConfig m;
    m.kind = Kind::betting;
    m.strategy = std::move(strategy);
    m.rounding = rounding;
    return m;
}

MethodConfig MethodConfig::besag_clifford(std::uint64_t h) {
    MethodConfig m;
    m.kind = Kind::besag_clifford;
    m.h = h;
    return m;
}

MethodConfig MethodConfig::permutation() {
    MethodConfig m;
    m.kind = Kind::permutation;
    return m;
}

std::string MethodConfig::display_name() const {
    if (!name.empty()) return name;
    switch (kind) {
        case Kind::betting: return strategy.label() + (rounding ? "+rounding" : "");
        case Kind::besag_clifford: return h ? "besag_clifford(h=" + std::to_string(h) + ")" : "besag_clifford";
        case Kind::permutation: return "permutation";
    }
    return "unknown";
}

void to_json(nlohmann::json& j, const MethodConfig& m) {
    switch (m.kind) {
        case MethodConfig::Kind::betting:
            j = m.strategy;
            if (m.rounding) j["rounding"] = true;
            break;
        case MethodConfig::Kind::besag_clifford:
            j = {{"kind", "besag_clifford"}};
            if (m.h) j["h"] = m.h;
            break;
        case MethodConfig::Kind::permutation: j = {{"kind", "permutation"}}; break;
    }
    if (!m.name.empty()) j["name"] = m.name;
}

void from_json(const nlohmann::json& j, MethodConfig& m) {
    m = MethodConfig{};
    const auto kind = j.at("kind").get<std::string>();
    m.name = j.value("name", std::string{});
    if (kind == "besag_clifford" || kind == "bc") {
        for (const auto& [key, _] : j.items())
            if (key != "kind" && key != "h" && key != "name")
                throw std::invalid_argument("unknown besag_clifford field '" + key + "'");
        m.kind = MethodConfig::Kind::besag_clifford;
        m.h = j.value("h", std::uint64_t{0});
        return;
    }
    if (kind == "permutation") {
        for (const auto& [key, _] : j.items())
            if (key != "kind" && key != "name") throw std::invalid_argument("unknown permutation field '" + key + "'");
        m.kind = MethodConfig::Kind::permutation;
        return;
    }
    auto strategy_json = j;
    strategy_json.erase("rounding");
    strategy_json.erase("name");
    m.kind = MethodConfig::Kind::betting;
    m.strategy = strategy_json.get<StrategyConfig>();
    m.rounding = j.value("rounding", false);
}

void TrialConfig::validate() const {
    if (m < 1 || n < 2 || T < 1) throw std::invalid_argument("trial config needs m >= 1, n >= 2, T >= 1");
    Alpha{alpha};
    if (!(treat_probability > 0.0 && treat_probability < 1.0))
        throw std::invalid_argument("treatment probability must lie in (0, 1)");
    if (methods.empty()) throw std::invalid_argument("trial config lists no methods");
    for (const auto& method : methods)
        if (method.kind == MethodConfig::Kind::betting) method.strategy.validate();
}

TrialResult run_two_sample_trial(const TrialConfig& cfg, std::uint64_t trial_index) {
    RandomSource data_rng(cfg.seed, data_stream(trial_index));
    auto data = draw_two_sample(cfg, data_rng);

    auto permuter = std::make_shared<LabelPermuter>(cfg.n, data.treated, RandomSource(cfg.seed, permutation_stream(trial_index)));
    StatisticGenerator generate = [permuter, &data, n = cfg.n]() -> std::optional<double> {
        double treated_sum = 0.0;
        permuter->draw([&](std::uint32_t i) { treated_sum += data.response[i]; });
        return mean_difference(treated_sum, data.total, data.treated, n);
    };
    // Tie-breakers come from a stream of their own.
    auto tape = IndicatorTape::create(IndicatorStream(StatisticSource{data.observed, std::move(generate)}, cfg.ties,
                                                      RandomSource(cfg.seed, rounding_stream_id(0) - 1 - trial_index),
                                                      cfg.T));

    TrialResult result;
    result.trial_index = trial_index;
    result.observed = data.observed;
    result.outcomes.reserve(cfg.methods.size());
    for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
        result.outcomes.push_back(run_method(cfg.methods[k], tape, cfg.alpha, cfg.T, cfg.futility, cfg.seed,
                                             rounding_stream(trial_index, k)));
    }
    result.permutations_drawn = tape->recorded();
    return result;
}

double ExperimentRow::accounting_mean() const {
    if (m == 0) return 0.0;
    const double rest = static_cast<double>(m - m_rejected - m_futility);
    return (mean_stop_rejected * static_cast<double>(m_rejected) + mean_stop_futility * static_cast<double>(m_futility) +
            static_cast<double>(T) * rest) /
           static_cast<double>(m);
}

ExperimentRow aggregate(std::span<const MethodOutcome> outcomes, std::uint64_t T, std::string method, double mu) {
    ExperimentRow row;
    row.method = std::move(method);
    row.mu = mu;
    row.T = T;
    row.m = outcomes.size();
    if (outcomes.empty()) return row;
    std::uint64_t rejections = 0;
    double sum = 0.0, sum1 = 0.0, sum0 = 0.0;
    std::vector<double> stops;
    stops.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        rejections += o.rejected;
        sum += static_cast<double>(o.stop_time);
        stops.push_back(static_cast<double>(o.stop_time));
        if (o.stop_reason == StopReason::rejected) {
            ++row.m_rejected;
            sum1 += static_cast<double>(o.stop_time);
        } else if (o.stop_reason == StopReason::futility) {
            ++row.m_futility;
            sum0 += static_cast<double>(o.stop_time);
        }
    }
    const double m = static_cast<double>(row.m);
    row.power = static_cast<double>(rejections) / m;
    row.mean_stop = sum / m;
    row.mean_stop_rejected = row.m_rejected ? sum1 / static_cast<double>(row.m_rejected) : 0.0;
    row.mean_stop_futility = row.m_futility ? sum0 / static_cast<double>(row.m_futility) : 0.0;
    std::sort(stops.begin(), stops.end());
    const std::size_t mid = stops.size() / 2;
    row.median_stop = stops.size() % 2 ? stops[mid] : 0.5 * (stops[mid - 1] + stops[mid]);
    return row;
}

std::vector<TrialResult> run_trials(const TrialConfig& config, unsigned jobs) {
    config.validate();
    std::vector<TrialResult> results(config.m);
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(config.m)));
    if (workers == 1) {
        for (std::uint64_t i = 0; i < config.m; ++i) results[i] = run_two_sample_trial(config, i);
        return results;
    }
    std::atomic<std::uint64_t> next{0};
    std::vector<std::jthread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::uint64_t i = next++; i < config.m; i = next++) {
                try {
                    results[i] = run_two_sample_trial(config, i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
    return results;
}

ExperimentTable summarize(const TrialConfig& config, std::span<const TrialResult> trials) {
    ExperimentTable table;
    for (std::size_t k = 0; k < config.methods.size(); ++k) {
        std::vector<MethodOutcome> outcomes;
        outcomes.reserve(trials.size());
        for (const auto& trial : trials) outcomes.push_back(trial.outcomes.at(k));
        table.push_back(aggregate(outcomes, config.T, config.methods[k].display_name(), config.mu));
    }
    return table;
}

SimulationConfig parse_simulation_config(const nlohmann::json& j) {
    static const std::set<std::string> known{"m",      "n",     "mu",   "response", "T",
                                             "alpha",  "methods", "strategies", "seed", "futility",
                                             "ties",   "treat_probability"};
    std::vector<std::string> unknown;
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) unknown.push_back(key);
    if (!unknown.empty()) {
        std::string msg = "unknown config keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw std::invalid_argument(msg);
    }
    SimulationConfig cfg;
    auto& t = cfg.trial;
    t.m = j.value("m", t.m);
    t.n = j.value("n", t.n);
    t.T = j.value("T", t.T);
    t.alpha = j.value("alpha", t.alpha);
    t.seed = j.value("seed", t.seed);
    t.futility = j.value("futility", t.futility);
    t.treat_probability = j.value("treat_probability", t.treat_probability);
    const auto response = j.value("response", std::string("normal"));
    if (response == "normal") t.response = ResponseModel::normal;
    else if (response == "lognormal") t.response = ResponseModel::lognormal;
    else throw std::invalid_argument("response must be normal or lognormal");
    const auto ties = j.value("ties", std::string("randomized"));
    if (ties == "randomized") t.ties = TiePolicy::randomized;
    else if (ties == "conservative") t.ties = TiePolicy::conservative;
    else throw std::invalid_argument("ties must be randomized or conservative");
    if (j.contains("mu")) {
        if (j.at("mu").is_array()) cfg.mu_grid = j.at("mu").get<std::vector<double>>();
        else cfg.mu_grid = {j.at("mu").get<double>()};
    } else {
        cfg.mu_grid = {0.0};
    }
    const char* methods_key = j.contains("methods") ? "methods" : "strategies";
    if (!j.contains(methods_key)) throw std::invalid_argument("config needs a methods list");
    for (auto entry : j.at(methods_key)) {
        if (!entry.contains("alpha") && entry.value("kind", std::string{}) != "besag_clifford" &&
            entry.value("kind", std::string{}) != "bc" && entry.value("kind", std::string{}) != "permutation")
            entry["alpha"] = t.alpha;
        t.methods.push_back(entry.get<MethodConfig>());
    }
    if (cfg.mu_grid.empty()) throw std::invalid_argument("mu grid is empty");
    t.validate();
    return cfg;
}

nlohmann::json simulation_config_to_json(const SimulationConfig& cfg) {
    const auto& t = cfg.trial;
    return {{"m", t.m},
            {"n", t.n},
            {"mu", cfg.mu_grid},
            {"response", t.response == ResponseModel::normal ? "normal" : "lognormal"},
            {"T", t.T},
            {"alpha", t.alpha},
            {"methods", t.methods},
            {"seed", t.seed},
            {"futility", t.futility},
            {"ties", t.ties == TiePolicy::randomized ? "randomized" : "conservative"},
            {"treat_probability", t.treat_probability}};
}

ExperimentTable run_simulation(const SimulationConfig& cfg, unsigned jobs) {
    ExperimentTable table;
    for (std::size_t k = 0; k < cfg.mu_grid.size(); ++k) {
        TrialConfig trial = cfg.trial;
        trial.mu = cfg.mu_grid[k];
        // Distinct data per grid point: shift the seed deterministically.
        trial.seed = derive_stream_seed(cfg.trial.seed, 0x6d75ULL + k);
        const auto results = run_trials(trial, jobs);
        for (auto& row : summarize(trial, results)) table.push_back(std::move(row));
    }
    return table;
}

void write_table_csv(std::ostream& os, const ExperimentTable& table) {
    os << "mu,method,m,T,power,mean_stop,median_stop,mean_stop_rejected,mean_stop_futility,m_rejected,m_futility\n";
    auto num = [](double v) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, res.ptr);
    };
    for (const auto& r : table) {
        os << num(r.mu) << ',' << csv_field(r.method) << ',' << r.m << ',' << r.T << ',' << num(r.power) << ','
           << num(r.mean_stop) << ',' << num(r.median_stop) << ',' << num(r.mean_stop_rejected) << ','
           << num(r.mean_stop_futility) << ',' << r.m_rejected << ',' << r.m_futility << '\n';
    }
}

nlohmann::json table_to_json(const ExperimentTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table) {
        rows.push_back({{"mu", r.mu},
                        {"method", r.method},
                        {"m", r.m},
                        {"T", r.T},
                        {"power", r.power},
                        {"mean_stop", r.mean_stop},
                        {"median_stop", r.median_stop},
                        {"mean_stop_rejected", r.mean_stop_rejected},
                        {"mean_stop_futility", r.mean_stop_futility},
                        {"m_rejected", r.m_rejected},
                        {"m_futility", r.m_futility}});
    }
    return rows;
}

// ---------------------------------------------------------------------------

void CountTableConfig::validate() const {
    if (treated_successes > treated_total || control_successes > control_total)
        throw std::invalid_argument("successes cannot exceed totals");
    if (treated_total == 0 || control_total == 0) throw std::invalid_argument("both groups need observations");
}

ExperimentTable run_count_table_experiment(const CountTableConfig& config, std::span<const MethodConfig> methods,
                                           const CountExperimentOptions& options) {
    config.validate();
    Alpha{options.alpha};
    const std::size_t n = config.treated_total + config.control_total;
    const std::uint64_t successes = config.treated_successes + config.control_successes;
    std::vector<std::uint8_t> outcome(n, 0);
    for (std::size_t i = 0; i < config.treated_successes; ++i) outcome[i] = 1;
    for (std::size_t i = 0; i < config.control_successes; ++i) outcome[config.treated_total + i] = 1;
    auto proportion_gap = [&](std::uint64_t treated_successes) {
        return static_cast<double>(treated_successes) / static_cast<double>(config.treated_total) -
               static_cast<double>(successes - treated_successes) / static_cast<double>(config.control_total);
    };
    const double observed = proportion_gap(config.treated_successes);

    std::vector<std::vector<MethodOutcome>> per_method(methods.size());
    for (std::uint64_t r = 0; r < options.repeats; ++r) {
        auto permuter =
            std::make_shared<LabelPermuter>(n, config.treated_total, RandomSource(options.seed, permutation_stream(r)));
        StatisticGenerator generate = [permuter, &outcome, &proportion_gap]() -> std::optional<double> {
            std::uint64_t s = 0;
            permuter->draw([&](std::uint32_t i) { s += outcome[i]; });
            return proportion_gap(s);
        };
        auto tape = IndicatorTape::create(IndicatorStream(StatisticSource{observed, std::move(generate)}, options.ties,
                                                          RandomSource(options.seed, data_stream(r)),
                                                          options.max_permutations));
        for (std::size_t k = 0; k < methods.size(); ++k) {
            const auto& method = methods[k];
            // Besag-Clifford keeps its own horizon; betting methods run to the permutation cap.
            const std::uint64_t T = method.kind == MethodConfig::Kind::betting ? options.max_permutations
                                    : method.kind == MethodConfig::Kind::besag_clifford && method.h
                                        ? static_cast<std::uint64_t>(std::llround(static_cast<double>(method.h) / options.alpha))
                                        : options.max_permutations;
            per_method[k].push_back(
                run_method(method, tape, options.alpha, T, options.futility, options.seed, rounding_stream(r, k)));
        }
    }
    ExperimentTable table;
    for (std::size_t k = 0; k < methods.size(); ++k) {
        const auto& method = methods[k];
        const std::uint64_t T = method.kind == MethodConfig::Kind::besag_clifford && method.h
                                    ? static_cast<std::uint64_t>(std::llround(static_cast<double>(method.h) / options.alpha))
                                    : options.max_permutations;
        table.push_back(aggregate(per_method[k], T, method.display_name()));
    }
    return table;
}

// ---------------------------------------------------------------------------

RiskEstimate estimate_resampling_risk(const StrategyConfig& strategy, double q, Alpha alpha,
                                      const RiskOptions& options) {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("q must lie in [0, 1]");
    if (options.runs == 0) throw std::invalid_argument("runs must be positive");
    StoppingRule rule = StoppingRule::level(alpha, options.futility, options.cap);
    if (options.epsilon) {
        const double eps = *options.epsilon;
        if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
        rule.reject_threshold = (1.0 - eps) / alpha.value();
    }
    RiskEstimate est;
    est.q = q;
    est.runs = options.runs;
    double stop_sum = 0.0;
    for (std::uint64_t i = 0; i < options.runs; ++i) {
        auto stream = IndicatorStream::bernoulli(q, options.seed, i, options.cap);
        const auto outcome = run_test(stream, strategy, rule);
        stop_sum += static_cast<double>(outcome.stop_time);
        bool reject = outcome.rejected();
        if (reject && options.epsilon) {
            RandomSource rng(options.seed, rounding_stream_id(i));
            reject = stochastic_round(outcome.e_value(), alpha, rng).reject;
        }
        est.rejections += reject;
    }
    const double n = static_cast<double>(options.runs);
    const double reject_rate = static_cast<double>(est.rejections) / n;
    est.risk = q <= alpha.value() ? 1.0 - reject_rate : reject_rate;
    est.standard_error = std::sqrt(est.risk * (1.0 - est.risk) / n);
    est.mean_stop = stop_sum / n;
    return est;
}

std::string build_version() { return MCBET_BUILD_VERSION; }

nlohmann::json run_manifest(const nlohmann::json& config, std::uint64_t seed) {
    return {{"config", config}, {"seed", seed}, {"build", build_version()}};
}

}  // namespace mcbet
