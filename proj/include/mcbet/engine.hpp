#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "mcbet/core.hpp"
#include "mcbet/strategies.hpp"

namespace mcbet {

/// When a sequential test stops.
///
/// Rejection fires on W_t >= 1/alpha, futility on W_t < futility_threshold
/// (0 disables it), and max_steps caps the run. A wealth of exactly zero is
/// absorbing and always ends the run as a futility stop.
struct StoppingRule {
    double reject_threshold = 20.0;
    double futility_threshold = 0.05;
    std::uint64_t max_steps = kDefaultMaxSteps;
    std::function<bool(const TestState&)> external_stop;

    static StoppingRule level(Alpha alpha, bool futility = true, std::uint64_t max_steps = kDefaultMaxSteps);
    void validate() const;
};

enum class StopReason { rejected, futility, exhausted, external };
std::string_view to_string(StopReason reason);

struct TrajectoryPoint {
    std::uint64_t t;
    std::uint64_t losses;
    double log_wealth;
};

struct TrajectoryOptions {
    bool record = false;
    /// Keep every k-th step (the final step is always kept).
    std::uint64_t decimation = 1;
};

struct TestOutcome {
    std::uint64_t stop_time = 0;
    StopReason stop_reason = StopReason::exhausted;
    std::uint64_t losses = 0;
    double log_wealth = 0.0;
    double max_log_wealth = 0.0;
    std::optional<std::uint64_t> seed;
    std::vector<TrajectoryPoint> trajectory;

    /// W_tau
    double e_value() const;
    /// 1 / max_{s <= tau} W_s, at most 1.
    double p_value() const;
    bool rejected() const noexcept { return stop_reason == StopReason::rejected; }
};

void to_json(nlohmann::json& j, const TestOutcome& outcome);

/// Drives one strategy through the rounds of a sequential test.
///
/// bet() only looks at the state before the round; update() applies the
/// revealed indicator. Closed-form kinds take their log-wealth straight from
/// (t, L_t). The binomial kind switches its loss probability to zero for a
/// round whenever losing it would drop the wealth below the futility threshold.
class BettingProcess {
public:
    BettingProcess(StrategyConfig config, double futility_threshold);

    Bet bet(const TestState& state) const;
    double update(const TestState& state, const Bet& bet, Indicator outcome) const;
    const StrategyConfig& config() const noexcept { return config_; }

private:
    StrategyConfig config_;
    double log_futility_;
};

TestOutcome run_test(IndicatorStream& stream, const StrategyConfig& config, const StoppingRule& rule,
                     TrajectoryOptions trajectory = {});

/// anytime-valid p-value from a wealth path: 1 / sup W, clamped to at most 1.
double p_process_value(std::span<const double> wealth_path);

class RoundingStreamReused : public std::logic_error {
public:
    RoundingStreamReused() : std::logic_error("stochastic rounding stream already used") {}
};

struct RoundedEValue {
    double value = 0.0;
    double uniform_draw = 0.0;
    bool reject = false;
};

/// Randomized rounding of a stopped wealth onto {0} or [1/alpha, inf).
///
/// The uniform comes from `rng`, which must be fresh; the source is spent
/// afterwards and a second call with it throws RoundingStreamReused.
RoundedEValue stochastic_round(double final_wealth, Alpha alpha, RandomSource& rng);

/// Stream id reserved for the rounding uniform of trial `index`; disjoint from
/// every indicator stream id the library derives (those keep the top bit clear).
constexpr std::uint64_t rounding_stream_id(std::uint64_t index) noexcept { return index | (1ULL << 63); }

}  // namespace mcbet
