#include "mcbet/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcbet {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Log-space slack for the rejection comparison. Closed forms and bet products
// that equal 1/alpha exactly in real arithmetic may land a few ulps low.
constexpr double kRejectSlack = 1e-12;
}  // namespace

StoppingRule StoppingRule::level(Alpha alpha, bool futility, std::uint64_t max_steps) {
    StoppingRule rule;
    rule.reject_threshold = alpha.threshold();
    rule.futility_threshold = futility ? alpha.value() : 0.0;
    rule.max_steps = max_steps;
    return rule;
}

void StoppingRule::validate() const {
    if (!(reject_threshold > 1.0)) throw std::invalid_argument("reject threshold must exceed 1");
    if (!(futility_threshold >= 0.0 && futility_threshold < 1.0))
        throw std::invalid_argument("futility threshold must lie in [0, 1)");
    if (max_steps == 0) throw std::invalid_argument("max_steps must be positive");
}

std::string_view to_string(StopReason reason) {
    switch (reason) {
        case StopReason::rejected: return "rejected";
        case StopReason::futility: return "futility";
        case StopReason::exhausted: return "exhausted";
        case StopReason::external: return "external";
    }
    return "unknown";
}

double TestOutcome::e_value() const { return std::exp(log_wealth); }

double TestOutcome::p_value() const { return std::min(1.0, std::exp(-max_log_wealth)); }

void to_json(nlohmann::json& j, const TestOutcome& o) {
    j = nlohmann::json{{"stop_time", o.stop_time}, {"stop_reason", to_string(o.stop_reason)},
                       {"e_value", o.e_value()},   {"p_value", o.p_value()},
                       {"losses", o.losses}};
    if (o.seed) j["seed"] = *o.seed;
    else j["seed"] = nullptr;
}

// ---------------------------------------------------------------------------

BettingProcess::BettingProcess(StrategyConfig config, double futility_threshold)
    : config_(std::move(config)),
      log_futility_(futility_threshold > 0.0 ? std::log(futility_threshold) : kNegInf) {
    config_.validate();
}

Bet BettingProcess::bet(const TestState& s) const {
    const std::uint64_t t = s.t + 1;
    if (config_.kind == StrategyKind::binomial) {
        // Look-ahead: if a loss this round would land below the futility
        // threshold anyway, put everything on a win.
        bool override = false;
        if (config_.p > 0.0 && log_futility_ > kNegInf) {
            const double log_after_loss = s.log_wealth + std::log(config_.p) +
                                          std::log(static_cast<double>(t) + 1.0) -
                                          std::log(static_cast<double>(s.losses) + 1.0);
            override = log_after_loss < log_futility_;
        }
        return binomial_bet(t, s.losses, config_.p, override);
    }
    return strategy_bet(config_, t, s.losses);
}

double BettingProcess::update(const TestState& s, const Bet& bet, Indicator outcome) const {
    const std::uint64_t t = s.t + 1;
    const std::uint64_t losses = s.losses + static_cast<std::uint64_t>(as_int(outcome));
    switch (config_.kind) {
        case StrategyKind::passive:
        case StrategyKind::aggressive:
        case StrategyKind::mixture_uniform:
        case StrategyKind::mixture_beta: return *closed_form_log_wealth(config_, t, losses);
        default: {
            const double factor = bet.payoff(outcome);
            return factor > 0.0 ? s.log_wealth + std::log(factor) : kNegInf;
        }
    }
}

TestOutcome run_test(IndicatorStream& stream, const StrategyConfig& config, const StoppingRule& rule,
                     TrajectoryOptions trajectory) {
    rule.validate();
    const BettingProcess process(config, rule.futility_threshold);
    const double log_reject = std::log(rule.reject_threshold);
    const double log_futility = rule.futility_threshold > 0.0 ? std::log(rule.futility_threshold) : kNegInf;
    const std::uint64_t decimation = std::max<std::uint64_t>(trajectory.decimation, 1);

    TestState state;
    TestOutcome out;
    auto finish = [&](StopReason reason) {
        out.stop_time = state.t;
        out.stop_reason = reason;
        out.losses = state.losses;
        out.log_wealth = state.log_wealth;
        out.max_log_wealth = state.max_log_wealth;
        if (trajectory.record && (out.trajectory.empty() || out.trajectory.back().t != state.t) && state.t > 0)
            out.trajectory.push_back({state.t, state.losses, state.log_wealth});
        return out;
    };

    while (state.t < rule.max_steps) {
        const Bet bet = process.bet(state);
        const auto outcome = stream.next();
        if (!outcome) return finish(StopReason::exhausted);
        state.advance(*outcome, process.update(state, bet, *outcome));
        if (trajectory.record && state.t % decimation == 0)
            out.trajectory.push_back({state.t, state.losses, state.log_wealth});

        if (state.log_wealth >= log_reject - kRejectSlack) return finish(StopReason::rejected);
        if (state.absorbed() || state.log_wealth < log_futility) return finish(StopReason::futility);
        if (rule.external_stop && rule.external_stop(state)) return finish(StopReason::external);
    }
    return finish(StopReason::exhausted);
}

double p_process_value(std::span<const double> wealth_path) {
    if (wealth_path.empty()) throw std::invalid_argument("p_process_value: empty wealth path");
    const double sup = *std::max_element(wealth_path.begin(), wealth_path.end());
    return sup <= 1.0 ? 1.0 : 1.0 / sup;
}

RoundedEValue stochastic_round(double final_wealth, Alpha alpha, RandomSource& rng) {
    if (!(final_wealth >= 0.0)) throw std::invalid_argument("stochastic_round: wealth must be nonnegative");
    if (rng.draws() != 0) throw RoundingStreamReused();
    RoundedEValue out;
    out.uniform_draw = rng.uniform();
    if (final_wealth >= alpha.threshold()) {
        out.value = final_wealth;
    } else {
        out.value = out.uniform_draw <= final_wealth * alpha.value() ? alpha.threshold() : 0.0;
    }
    out.reject = out.value >= alpha.threshold();
    return out;
}

}  // namespace mcbet
