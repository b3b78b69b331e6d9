#include "doctest.h"

#include <cmath>

#include "mcbet/classical.hpp"
#include "mcbet/engine.hpp"
#include "oracles.hpp"

using namespace mcbet;

namespace {

StoppingRule no_thresholds(std::uint64_t max_steps = kDefaultMaxSteps) {
    StoppingRule r;
    r.reject_threshold = std::numeric_limits<double>::infinity();
    r.futility_threshold = 0.0;
    r.max_steps = max_steps;
    return r;
}

}  // namespace

TEST_CASE("aggressive path on 0,0,0,1") {
    const int seq[] = {0, 0, 0, 1};
    auto stream = IndicatorStream::list(std::span<const int>(seq));
    const auto out = run_test(stream, StrategyConfig::aggressive(), no_thresholds(), {true, 1});
    REQUIRE(out.trajectory.size() == 4);
    const double expect[] = {2.0, 3.0, 4.0, 0.0};
    for (int i = 0; i < 4; ++i) CHECK(std::exp(out.trajectory[i].log_wealth) == doctest::Approx(expect[i]));
    CHECK(out.p_value() == doctest::Approx(0.25));
    CHECK(out.stop_time == 4);
    CHECK(out.stop_reason == StopReason::futility);
    CHECK(out.e_value() == 0.0);
}

TEST_CASE("uniform mixture rejects an all-win stream at 39") {
    auto stream = IndicatorStream::list(std::vector<Indicator>(1000, Indicator::win));
    const auto out = run_test(stream, StrategyConfig::mixture_uniform(0.04), StoppingRule::level(Alpha{0.05}));
    CHECK(out.rejected());
    CHECK(out.stop_time == 39);
    CHECK(out.e_value() >= 20.0);
    CHECK(out.p_value() <= 0.05);
}

TEST_CASE("passive never stops") {
    auto stream = IndicatorStream::polya(3, 0, 5000);
    const auto out = run_test(stream, StrategyConfig::passive(), StoppingRule::level(Alpha{0.05}, true, 3000));
    CHECK(out.stop_time == 3000);
    CHECK(out.stop_reason == StopReason::exhausted);
    CHECK(out.log_wealth == 0.0);
    CHECK(out.p_value() == 1.0);
}

TEST_CASE("exhausted stream ends with its current state") {
    const int seq[] = {0, 0, 1, 0};
    auto stream = IndicatorStream::list(std::span<const int>(seq));
    const auto out = run_test(stream, StrategyConfig::binomial(0.2), StoppingRule::level(Alpha{0.05}));
    CHECK(out.stop_time == 4);
    CHECK(out.losses == 1);
    CHECK(out.stop_reason == StopReason::exhausted);
}

TEST_CASE("external stop") {
    auto rule = no_thresholds();
    rule.external_stop = [](const TestState& s) { return s.t == 17; };
    auto stream = IndicatorStream::polya(1, 1);
    const auto out = run_test(stream, StrategyConfig::binomial(0.1), rule);
    CHECK(out.stop_time == 17);
    CHECK(out.stop_reason == StopReason::external);
}

TEST_CASE("stopping rule validation") {
    StoppingRule r;
    r.reject_threshold = 0.5;
    CHECK_THROWS(r.validate());
    r = StoppingRule{};
    r.futility_threshold = 1.5;
    CHECK_THROWS(r.validate());
    CHECK_NOTHROW(StoppingRule::level(Alpha{0.01}).validate());
}

TEST_CASE("binomial futility override keeps the wealth above the threshold") {
    for (std::uint64_t id = 0; id < 200; ++id) {
        auto stream = IndicatorStream::polya(11, id, 20000);
        const auto rule = StoppingRule::level(Alpha{0.05});
        const auto out = run_test(stream, StrategyConfig::binomial(Alpha{0.05}), rule, {true, 1});
        for (std::size_t k = 0; k + 1 < out.trajectory.size(); ++k)
            CHECK(out.trajectory[k].log_wealth >= std::log(rule.futility_threshold));
        if (out.stop_reason == StopReason::futility) {
            CHECK(out.e_value() < rule.futility_threshold);
        }
    }
}

TEST_CASE("trajectory decimation keeps the last step") {
    auto stream = IndicatorStream::polya(2, 0, 1000);
    const auto out = run_test(stream, StrategyConfig::passive(), no_thresholds(1000), {true, 100});
    REQUIRE_FALSE(out.trajectory.empty());
    CHECK(out.trajectory.back().t == 1000);
    CHECK(out.trajectory.size() == 10);
}

TEST_CASE("incremental mixture wealth matches the closed form at every step") {
    for (auto cfg : {StrategyConfig::mixture_uniform(0.045), StrategyConfig::mixture_beta(1.0, 20.0)}) {
        auto stream = IndicatorStream::bernoulli(0.03, 4, 0, 2000);
        const auto out = run_test(stream, cfg, no_thresholds(2000), {true, 1});
        REQUIRE(out.trajectory.size() == 2000);
        for (const auto& pt : out.trajectory)
            CHECK(pt.log_wealth == doctest::Approx(*closed_form_log_wealth(cfg, pt.t, pt.losses)).epsilon(1e-10));
    }
}

TEST_CASE("p-value invariants") {
    for (std::uint64_t id = 0; id < 300; ++id) {
        auto stream = IndicatorStream::bernoulli(0.02, 8, id, 3000);
        const auto out = run_test(stream, StrategyConfig::mixture_uniform(Alpha{0.05}), StoppingRule::level(Alpha{0.05}));
        CHECK(out.p_value() > 0.0);
        CHECK(out.p_value() <= 1.0);
        CHECK((out.p_value() <= 0.05 * (1 + 1e-12)) == out.rejected());
        if (out.rejected()) {
            CHECK(out.e_value() >= 20.0 * (1 - 1e-12));
        }
    }
}

TEST_CASE("p_process_value") {
    const double a[] = {2.0, 1.5, 4.0};
    CHECK(p_process_value(a) == doctest::Approx(0.25));
    const double b[] = {0.5, 0.8};
    CHECK(p_process_value(b) == 1.0);
    for (std::uint64_t k = 1; k <= 30; ++k) {
        std::vector<Indicator> seq(k - 1, Indicator::win);
        seq.push_back(Indicator::loss);
        auto stream = IndicatorStream::list(seq);
        const auto out = run_test(stream, StrategyConfig::aggressive(), no_thresholds());
        CHECK(out.p_value() == doctest::Approx(k == 1 ? 1.0 : 1.0 / double(k)));
    }
}

TEST_CASE("aggressive p-value equals Besag-Clifford with h = 1") {
    const std::uint64_t T = 12;
    for (std::uint64_t code = 0; code < (1ULL << T); ++code) {
        const auto seq = oracle::bits(code, T);
        auto stream = IndicatorStream::list(seq);
        const auto out = run_test(stream, StrategyConfig::aggressive(), no_thresholds(T));
        const auto bc = bc_pvalue(std::span<const Indicator>(seq), 1, T);
        CHECK(out.p_value() == doctest::Approx(bc.p.value()).epsilon(1e-12));
        CHECK(out.stop_time == bc.stop_time);
    }
}

TEST_CASE("stochastic rounding") {
    SUBCASE("W >= 1/alpha keeps the wealth") {
        RandomSource rng(1, rounding_stream_id(0));
        const auto r = stochastic_round(25.0, Alpha{0.05}, rng);
        CHECK(r.value == 25.0);
        CHECK(r.reject);
    }
    SUBCASE("zero never rejects") {
        RandomSource rng(1, rounding_stream_id(1));
        const auto r = stochastic_round(0.0, Alpha{0.05}, rng);
        CHECK(r.value == 0.0);
        CHECK_FALSE(r.reject);
    }
    SUBCASE("W = 16 rejects iff the draw is at most 0.8") {
        int rejects = 0;
        for (std::uint64_t i = 0; i < 20000; ++i) {
            RandomSource rng(2, rounding_stream_id(i));
            const auto r = stochastic_round(16.0, Alpha{0.05}, rng);
            CHECK(r.reject == (r.uniform_draw <= 0.8));
            CHECK((r.value == 0.0 || r.value == doctest::Approx(20.0)));
            CHECK(r.reject == (r.value >= 20.0 * (1 - 1e-12)));
            rejects += r.reject;
        }
        CHECK(std::abs(rejects / 20000.0 - 0.8) < 0.01);
    }
    SUBCASE("a spent stream is refused") {
        RandomSource rng(3, rounding_stream_id(5));
        stochastic_round(10.0, Alpha{0.05}, rng);
        CHECK_THROWS_AS(stochastic_round(10.0, Alpha{0.05}, rng), RoundingStreamReused);
    }
    CHECK((rounding_stream_id(12345) >> 63) == 1);
}

TEST_CASE("Ville bound and rounding validity under the exchangeable null") {
    const double alpha = 0.05;
    const std::uint64_t runs = 10000;
    const double bound = alpha + 3.0 * std::sqrt(alpha * (1 - alpha) / runs);
    for (auto cfg : {StrategyConfig::binomial(Alpha{alpha}), StrategyConfig::mixture_uniform(Alpha{alpha}),
                     StrategyConfig::aggressive()}) {
        std::uint64_t hits = 0, rounded = 0;
        for (std::uint64_t i = 0; i < runs; ++i) {
            auto stream = IndicatorStream::polya(77, i, 10000);
            const auto out = run_test(stream, cfg, StoppingRule::level(Alpha{alpha}, true, 10000));
            hits += out.rejected();
            RandomSource rng(77, rounding_stream_id(i));
            rounded += stochastic_round(out.e_value(), Alpha{alpha}, rng).reject;
        }
        INFO(cfg.label());
        CHECK(hits / double(runs) <= bound);
        CHECK(rounded / double(runs) <= bound);
    }
}
