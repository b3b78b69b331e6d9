#include "doctest.h"

#include <cmath>
#include <sstream>

#include "mcbet/harness.hpp"

using namespace mcbet;

namespace {

MethodOutcome outcome(std::uint64_t stop, StopReason reason) {
    MethodOutcome o;
    o.stop_time = stop;
    o.stop_reason = reason;
    o.rejected = reason == StopReason::rejected;
    return o;
}

TrialConfig small_trial(double mu, std::uint64_t m) {
    TrialConfig c;
    c.m = m;
    c.n = 100;
    c.T = 200;
    c.mu = mu;
    c.seed = 31;
    c.methods = {MethodConfig::betting(StrategyConfig::binomial(Alpha{0.05}), true),
                 MethodConfig::betting(StrategyConfig::mixture_uniform(Alpha{0.05}), true),
                 MethodConfig::betting(StrategyConfig::aggressive()), MethodConfig::besag_clifford(),
                 MethodConfig::permutation()};
    return c;
}

}  // namespace

TEST_CASE("aggregate: all runs reject at 10") {
    std::vector<MethodOutcome> v(7, outcome(10, StopReason::rejected));
    const auto row = aggregate(v, 100);
    CHECK(row.power == 1.0);
    CHECK(row.mean_stop == 10.0);
    CHECK(row.mean_stop_rejected == 10.0);
    CHECK(row.median_stop == 10.0);
    CHECK(row.m_futility == 0);
    CHECK(row.m_rejected == 7);
}

TEST_CASE("aggregate: nothing stops before T") {
    std::vector<MethodOutcome> v(5, outcome(100, StopReason::exhausted));
    const auto row = aggregate(v, 100);
    CHECK(row.power == 0.0);
    CHECK(row.mean_stop == 100.0);
    CHECK(row.accounting_mean() == 100.0);
}

TEST_CASE("aggregate: mixed outcomes satisfy the accounting identity") {
    std::vector<MethodOutcome> v{outcome(12, StopReason::rejected), outcome(40, StopReason::futility),
                                 outcome(100, StopReason::exhausted), outcome(33, StopReason::rejected),
                                 outcome(3, StopReason::futility), outcome(100, StopReason::exhausted)};
    const auto row = aggregate(v, 100, "x", 0.1);
    CHECK(row.m_rejected == 2);
    CHECK(row.m_futility == 2);
    CHECK(row.mean_stop_rejected == doctest::Approx(22.5));
    CHECK(row.mean_stop_futility == doctest::Approx(21.5));
    CHECK(row.median_stop == doctest::Approx(36.5));
    CHECK(std::abs(row.accounting_mean() - row.mean_stop) <= 1e-12);
    CHECK(row.method == "x");
}

TEST_CASE("trial config validation") {
    auto c = small_trial(0.0, 1);
    c.m = 0;
    CHECK_THROWS(c.validate());
    c = small_trial(0.0, 1);
    c.alpha = 1.5;
    CHECK_THROWS(c.validate());
    CHECK_NOTHROW(small_trial(0.0, 1).validate());
}

TEST_CASE("results do not depend on the worker count") {
    const auto c = small_trial(0.3, 24);
    const auto a = run_trials(c, 1), b = run_trials(c, 3);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].observed == b[i].observed);
        for (std::size_t k = 0; k < a[i].outcomes.size(); ++k) {
            CHECK(a[i].outcomes[k].stop_time == b[i].outcomes[k].stop_time);
            CHECK(a[i].outcomes[k].rejected == b[i].outcomes[k].rejected);
            CHECK(a[i].outcomes[k].p_value == b[i].outcomes[k].p_value);
        }
    }
}

TEST_CASE("methods within a trial share one indicator stream") {
    auto c = small_trial(0.0, 60);
    c.methods = {MethodConfig::betting(StrategyConfig::aggressive()), MethodConfig::besag_clifford(1),
                 MethodConfig::betting(StrategyConfig::binomial(0.05)),
                 MethodConfig::betting(StrategyConfig::binomial(0.05), true)};
    for (const auto& r : run_trials(c)) {
        const auto& agg = r.outcomes[0];
        const auto& bc = r.outcomes[1];
        if (!agg.rejected) {
            CHECK(agg.stop_time == bc.stop_time);
            CHECK(agg.p_value == doctest::Approx(bc.p_value));
        }
        CHECK(r.outcomes[2].stop_time == r.outcomes[3].stop_time);
        CHECK(r.outcomes[2].e_value == r.outcomes[3].e_value);
    }
}

TEST_CASE("reject rates under the null stay within the Monte Carlo band") {
    const std::uint64_t m = 400;
    const auto c = small_trial(0.0, m);
    const auto table = summarize(c, run_trials(c, 2));
    for (const auto& row : table) {
        INFO(row.method);
        CHECK(row.power <= 0.05 + 3.0 * std::sqrt(0.05 / m));
    }
}

TEST_CASE("smoke simulation gives one row per method") {
    SimulationConfig s;
    s.trial = small_trial(0.0, 1);
    s.trial.methods.resize(1);
    s.mu_grid = {0.5};
    const auto table = run_simulation(s);
    REQUIRE(table.size() == 1);
    CHECK(table[0].m == 1);
    std::ostringstream a, b;
    write_table_csv(a, table);
    write_table_csv(b, run_simulation(s));
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("mu,method,m,T,power,mean_stop,median_stop", 0) == 0);
    CHECK(table_to_json(table).size() == 1);
}

TEST_CASE("simulation config parsing") {
    const auto j = nlohmann::json::parse(R"({"m": 3, "n": 50, "mu": [0, 0.1], "T": 100, "alpha": 0.1,
        "methods": [{"kind": "binomial"}, {"kind": "bc", "h": 5}, {"kind": "permutation"}], "seed": 9})");
    const auto cfg = parse_simulation_config(j);
    CHECK(cfg.mu_grid.size() == 2);
    CHECK(cfg.trial.methods.size() == 3);
    CHECK(cfg.trial.methods[0].strategy.p == doctest::Approx(1.0 / 28.0));
    CHECK(cfg.trial.methods[1].h == 5);
    const auto again = parse_simulation_config(simulation_config_to_json(cfg));
    CHECK(simulation_config_to_json(again) == simulation_config_to_json(cfg));

    auto bad = j;
    bad["colour"] = 1;
    bad["size"] = 2;
    try {
        parse_simulation_config(bad);
        FAIL("expected a throw");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("colour") != std::string::npos);
        CHECK(msg.find("size") != std::string::npos);
    }
    CHECK_THROWS(parse_simulation_config(nlohmann::json::parse(R"({"m": 3})")));
}

TEST_CASE("method JSON round trip") {
    for (const auto& m : small_trial(0, 1).methods) {
        const nlohmann::json j = m;
        const auto back = j.get<MethodConfig>();
        CHECK(back.display_name() == m.display_name());
        CHECK(back.rounding == m.rounding);
    }
}

TEST_CASE("resampling risk") {
    SUBCASE("aggressive strategy follows 1 - (1 - q)^19") {
        RiskOptions o;
        o.runs = 20000;
        const auto r = estimate_resampling_risk(StrategyConfig::aggressive(), 0.02, Alpha{0.05}, o);
        const double expect = 1.0 - std::pow(0.98, 19.0);
        CHECK(std::abs(r.risk - expect) <= 3.0 * std::sqrt(expect * (1 - expect) / o.runs));
    }
    SUBCASE("uniform mixture with q below c always rejects") {
        RiskOptions o;
        o.runs = 20;
        const auto r = estimate_resampling_risk(StrategyConfig::mixture_uniform(0.045), 0.04, Alpha{0.05}, o);
        CHECK(r.risk == 0.0);
        CHECK(r.rejections == 20);
    }
    SUBCASE("q above alpha: risk is the rejection rate") {
        RiskOptions o;
        o.runs = 200;
        const auto r = estimate_resampling_risk(StrategyConfig::binomial(Alpha{0.05}), 0.2, Alpha{0.05}, o);
        CHECK(r.risk == doctest::Approx(r.rejections / 200.0));
    }
}

TEST_CASE("run manifest") {
    const auto m = run_manifest({{"m", 1}}, 42);
    CHECK(m.at("seed") == 42);
    CHECK(m.at("config").at("m") == 1);
    CHECK_FALSE(m.at("build").get<std::string>().empty());
}
