#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"

#include "mcbet/core.hpp"

namespace mcbet {

/// Payoff factors for one round: wealth is multiplied by b0 on a win and b1 on a loss.
struct Bet {
    double b0 = 1.0;
    double b1 = 1.0;

    double payoff(Indicator i) const noexcept { return i == Indicator::loss ? b1 : b0; }
    /// Null expectation b0 (t-l)/(t+1) + b1 (l+1)/(t+1) for round t after l losses.
    double null_expectation(std::uint64_t t, std::uint64_t losses) const noexcept;
};

bool satisfies_null_constraint(const Bet& bet, std::uint64_t t, std::uint64_t losses, double tol = 1e-12);

/// Bet requested after the wealth has been absorbed at zero.
class AbsorbedWealth : public std::logic_error {
public:
    AbsorbedWealth() : std::logic_error("aggressive strategy cannot bet after a loss") {}
};

/// Posterior over the limiting p-value carries no mass (normalizer underflowed).
class DegeneratePosterior : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Working priors
// ---------------------------------------------------------------------------

struct PointPrior {
    double p;
};
struct UniformPrior {
    double lo = 0.0;
    double hi = 1.0;
};
struct BetaPrior {
    double a = 1.0;
    double b = 1.0;
};
using Prior = std::variant<PointPrior, UniformPrior, BetaPrior>;

/// Posterior mean of the loss probability after `losses` losses in `trials` rounds.
double posterior_mean(std::uint64_t trials, std::uint64_t losses, const Prior& prior);

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class StrategyKind { passive, aggressive, binomial, mixture_uniform, mixture_beta, mimicked_logopt };

std::string_view to_string(StrategyKind kind);
StrategyKind strategy_kind_from(std::string_view name);

/// 1 / ceil(sqrt(2 pi e^{1/6}) / alpha); guarantees rejection whenever the
/// fixed-T permutation p-value falls below p.
double default_binomial_p(Alpha alpha);
/// 0.9 alpha.
double default_mixture_c(Alpha alpha);

struct StrategyConfig {
    StrategyKind kind = StrategyKind::passive;
    double p = 0.0;
    double c = 0.0;
    double a = 1.0;
    double b = 1.0;
    Prior prior = UniformPrior{};
    std::optional<double> alpha;

    static StrategyConfig of(StrategyKind kind) {
        StrategyConfig cfg;
        cfg.kind = kind;
        return cfg;
    }
    static StrategyConfig passive() { return of(StrategyKind::passive); }
    static StrategyConfig aggressive() { return of(StrategyKind::aggressive); }
    static StrategyConfig binomial(double p);
    static StrategyConfig binomial(Alpha alpha);
    static StrategyConfig mixture_uniform(double c);
    static StrategyConfig mixture_uniform(Alpha alpha);
    static StrategyConfig mixture_beta(double a, double b);
    static StrategyConfig mimicked_logopt(Prior prior);

    /// Throws std::invalid_argument when a parameter is out of range.
    void validate() const;
    std::string label() const;
};

void to_json(nlohmann::json& j, const StrategyConfig& cfg);
void from_json(const nlohmann::json& j, StrategyConfig& cfg);

// ---------------------------------------------------------------------------
// Per-round bets. `t` is the round about to be played, `losses` = L_{t-1}.
// ---------------------------------------------------------------------------

Bet passive_bet(std::uint64_t t, std::uint64_t losses);
Bet aggressive_bet(std::uint64_t t, std::uint64_t losses);
/// Kelly bet with loss probability p; with futility_override the loss side gets nothing.
Bet binomial_bet(std::uint64_t t, std::uint64_t losses, double p, bool futility_override = false);
/// Kelly bet at the posterior mean of the working prior.
Bet mimicked_logopt_bet(std::uint64_t t, std::uint64_t losses, const Prior& prior);

// ---------------------------------------------------------------------------
// Closed-form log-wealth after T rounds with `losses` losses.
// ---------------------------------------------------------------------------

/// log[(T+1) p^l (1-p)^(T-l) C(T,l)]
double binomial_log_wealth(std::uint64_t T, std::uint64_t losses, double p);
/// log[(1 - Bin(l; T+1, c)) / c]
double mixture_uniform_log_wealth(std::uint64_t T, std::uint64_t losses, double c);
/// log[Beta(a+l, b+T-l) / (Beta(l+1, T-l+1) Beta(a, b))]
double mixture_beta_log_wealth(std::uint64_t T, std::uint64_t losses, double a, double b);

/// log P(X > l) for X ~ Bin(n, c), stable in both tails.
double log_binomial_survival(std::uint64_t l, std::uint64_t n, double c);

/// Closed-form log-wealth for kinds whose wealth depends only on (T, losses);
/// std::nullopt for mimicked_logopt.
std::optional<double> closed_form_log_wealth(const StrategyConfig& cfg, std::uint64_t T, std::uint64_t losses);

/// Bet for round t given L_{t-1} under any configured strategy (no futility override).
Bet strategy_bet(const StrategyConfig& cfg, std::uint64_t t, std::uint64_t losses);

}  // namespace mcbet
