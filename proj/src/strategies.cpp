#include "mcbet/strategies.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace mcbet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lgam(double x) { return boost::math::lgamma(x); }

double log_beta_fn(double a, double b) { return lgam(a) + lgam(b) - lgam(a + b); }

double log_choose(std::uint64_t n, std::uint64_t k) {
    return lgam(static_cast<double>(n) + 1.0) - lgam(static_cast<double>(k) + 1.0) -
           lgam(static_cast<double>(n - k) + 1.0);
}

// x log y with the 0 log 0 = 0 convention.
double xlogy(double x, double y) {
    if (x == 0.0) return 0.0;
    return x * std::log(y);
}

void require_round(std::uint64_t t, std::uint64_t losses) {
    if (t == 0 || losses >= t) throw std::invalid_argument("bet requires t >= 1 and losses <= t-1");
}

void require_unit(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
}

}  // namespace

double Bet::null_expectation(std::uint64_t t, std::uint64_t losses) const noexcept {
    const double n = static_cast<double>(t) + 1.0;
    return b0 * static_cast<double>(t - losses) / n + b1 * (static_cast<double>(losses) + 1.0) / n;
}

bool satisfies_null_constraint(const Bet& bet, std::uint64_t t, std::uint64_t losses, double tol) {
    return bet.b0 >= 0.0 && bet.b1 >= 0.0 && std::abs(bet.null_expectation(t, losses) - 1.0) <= tol;
}

// ---------------------------------------------------------------------------

std::string_view to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::passive: return "passive";
        case StrategyKind::aggressive: return "aggressive";
        case StrategyKind::binomial: return "binomial";
        case StrategyKind::mixture_uniform: return "mixture_uniform";
        case StrategyKind::mixture_beta: return "mixture_beta";
        case StrategyKind::mimicked_logopt: return "mimicked_logopt";
    }
    return "unknown";
}

StrategyKind strategy_kind_from(std::string_view name) {
    if (name == "passive") return StrategyKind::passive;
    if (name == "aggressive") return StrategyKind::aggressive;
    if (name == "binomial") return StrategyKind::binomial;
    if (name == "mixture_uniform" || name == "mixture") return StrategyKind::mixture_uniform;
    if (name == "mixture_beta" || name == "beta") return StrategyKind::mixture_beta;
    if (name == "mimicked_logopt") return StrategyKind::mimicked_logopt;
    throw std::invalid_argument("unknown strategy kind '" + std::string(name) + "'");
}

double default_binomial_p(Alpha alpha) {
    const double k = std::sqrt(2.0 * boost::math::constants::pi<double>() * std::exp(1.0 / 6.0));
    return 1.0 / std::ceil(k / alpha.value());
}

double default_mixture_c(Alpha alpha) { return 0.9 * alpha.value(); }

StrategyConfig StrategyConfig::binomial(double p) {
    auto cfg = of(StrategyKind::binomial);
    cfg.p = p;
    return cfg;
}

StrategyConfig StrategyConfig::binomial(Alpha alpha) {
    auto cfg = binomial(default_binomial_p(alpha));
    cfg.alpha = alpha.value();
    return cfg;
}

StrategyConfig StrategyConfig::mixture_uniform(double c) {
    auto cfg = of(StrategyKind::mixture_uniform);
    cfg.c = c;
    return cfg;
}

StrategyConfig StrategyConfig::mixture_uniform(Alpha alpha) {
    auto cfg = mixture_uniform(default_mixture_c(alpha));
    cfg.alpha = alpha.value();
    return cfg;
}

StrategyConfig StrategyConfig::mixture_beta(double a, double b) {
    auto cfg = of(StrategyKind::mixture_beta);
    cfg.a = a;
    cfg.b = b;
    return cfg;
}

StrategyConfig StrategyConfig::mimicked_logopt(Prior prior) {
    auto cfg = of(StrategyKind::mimicked_logopt);
    cfg.prior = prior;
    return cfg;
}

void StrategyConfig::validate() const {
    if (alpha) Alpha{*alpha};
    switch (kind) {
        case StrategyKind::binomial: require_unit(p, "binomial p"); break;
        case StrategyKind::mixture_uniform:
            if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("mixture c must lie in (0, 1)");
            break;
        case StrategyKind::mixture_beta:
            if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("beta prior needs a, b > 0");
            break;
        case StrategyKind::mimicked_logopt:
            std::visit(
                [](const auto& pr) {
                    using P = std::decay_t<decltype(pr)>;
                    if constexpr (std::is_same_v<P, PointPrior>) {
                        require_unit(pr.p, "point prior p");
                    } else if constexpr (std::is_same_v<P, UniformPrior>) {
                        if (!(pr.lo >= 0.0 && pr.lo < pr.hi && pr.hi <= 1.0))
                            throw std::invalid_argument("uniform prior needs 0 <= lo < hi <= 1");
                    } else {
                        if (!(pr.a > 0.0 && pr.b > 0.0)) throw std::invalid_argument("beta prior needs a, b > 0");
                    }
                },
                prior);
            break;
        default: break;
    }
}

std::string StrategyConfig::label() const {
    char buf[96];
    switch (kind) {
        case StrategyKind::binomial: std::snprintf(buf, sizeof buf, "binomial(p=%.6g)", p); return buf;
        case StrategyKind::mixture_uniform: std::snprintf(buf, sizeof buf, "mixture(c=%.6g)", c); return buf;
        case StrategyKind::mixture_beta: std::snprintf(buf, sizeof buf, "beta(a=%.6g,b=%.6g)", a, b); return buf;
        default: return std::string(to_string(kind));
    }
}

namespace {

nlohmann::json prior_to_json(const Prior& prior) {
    return std::visit(
        [](const auto& pr) -> nlohmann::json {
            using P = std::decay_t<decltype(pr)>;
            if constexpr (std::is_same_v<P, PointPrior>) return {{"type", "point"}, {"p", pr.p}};
            else if constexpr (std::is_same_v<P, UniformPrior>) return {{"type", "uniform"}, {"lo", pr.lo}, {"hi", pr.hi}};
            else return {{"type", "beta"}, {"a", pr.a}, {"b", pr.b}};
        },
        prior);
}

Prior prior_from_json(const nlohmann::json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "point") return PointPrior{j.at("p").get<double>()};
    if (type == "uniform") return UniformPrior{j.value("lo", 0.0), j.value("hi", 1.0)};
    if (type == "beta") return BetaPrior{j.at("a").get<double>(), j.at("b").get<double>()};
    throw std::invalid_argument("unknown prior type '" + type + "'");
}

}  // namespace

void to_json(nlohmann::json& j, const StrategyConfig& cfg) {
    j = nlohmann::json{{"kind", to_string(cfg.kind)}};
    switch (cfg.kind) {
        case StrategyKind::binomial: j["p"] = cfg.p; break;
        case StrategyKind::mixture_uniform: j["c"] = cfg.c; break;
        case StrategyKind::mixture_beta:
            j["a"] = cfg.a;
            j["b"] = cfg.b;
            break;
        case StrategyKind::mimicked_logopt: j["prior"] = prior_to_json(cfg.prior); break;
        default: break;
    }
    if (cfg.alpha) j["alpha"] = *cfg.alpha;
}

// Missing p / c fall back to the alpha-derived defaults when alpha is present.
void from_json(const nlohmann::json& j, StrategyConfig& cfg) {
    static constexpr std::array known{"kind", "p", "c", "a", "b", "alpha", "prior"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw std::invalid_argument("unknown strategy field '" + key + "'");
    }
    cfg = StrategyConfig{};
    cfg.kind = strategy_kind_from(j.at("kind").get<std::string>());
    if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("p")) cfg.p = j.at("p").get<double>();
    else if (cfg.kind == StrategyKind::binomial && cfg.alpha) cfg.p = default_binomial_p(Alpha{*cfg.alpha});
    else if (cfg.kind == StrategyKind::binomial) throw std::invalid_argument("binomial strategy needs p or alpha");
    if (j.contains("c")) cfg.c = j.at("c").get<double>();
    else if (cfg.kind == StrategyKind::mixture_uniform && cfg.alpha) cfg.c = default_mixture_c(Alpha{*cfg.alpha});
    else if (cfg.kind == StrategyKind::mixture_uniform) throw std::invalid_argument("mixture strategy needs c or alpha");
    cfg.a = j.value("a", 1.0);
    cfg.b = j.value("b", 1.0);
    if (j.contains("prior")) cfg.prior = prior_from_json(j.at("prior"));
    cfg.validate();
}

// ---------------------------------------------------------------------------

Bet passive_bet(std::uint64_t t, std::uint64_t losses) {
    require_round(t, losses);
    return {1.0, 1.0};
}

Bet aggressive_bet(std::uint64_t t, std::uint64_t losses) {
    if (losses != 0) throw AbsorbedWealth();
    require_round(t, losses);
    return {(static_cast<double>(t) + 1.0) / static_cast<double>(t), 0.0};
}

Bet binomial_bet(std::uint64_t t, std::uint64_t losses, double p, bool futility_override) {
    require_round(t, losses);
    require_unit(p, "binomial p");
    const double pt = futility_override ? 0.0 : p;
    const double n = static_cast<double>(t) + 1.0;
    return {(1.0 - pt) * n / static_cast<double>(t - losses), pt * n / (static_cast<double>(losses) + 1.0)};
}

double posterior_mean(std::uint64_t trials, std::uint64_t losses, const Prior& prior) {
    if (losses > trials) throw std::invalid_argument("posterior_mean: losses exceed trials");
    const double l = static_cast<double>(losses);
    const double w = static_cast<double>(trials - losses);
    return std::visit(
        [&](const auto& pr) -> double {
            using P = std::decay_t<decltype(pr)>;
            if constexpr (std::is_same_v<P, PointPrior>) {
                return pr.p;
            } else {
                // Integrand exponents: p^ea (1-p)^eb on [lo, hi].
                double lo = 0.0, hi = 1.0, ea = l, eb = w;
                if constexpr (std::is_same_v<P, UniformPrior>) {
                    lo = pr.lo;
                    hi = pr.hi;
                } else {
                    ea += pr.a - 1.0;
                    eb += pr.b - 1.0;
                }
                auto log_kernel = [&](double p) { return xlogy(ea, p) + xlogy(eb, 1.0 - p); };
                // Shift by the log-kernel maximum on [lo, hi] so the peak evaluates to 1.
                double mode = (ea + eb > 0.0) ? ea / (ea + eb) : 0.5;
                if (ea < 0.0 || eb < 0.0) mode = 0.5;  // singular endpoint; any interior shift works
                mode = std::clamp(mode, lo, hi);
                double shift = log_kernel(mode);
                if (!std::isfinite(shift)) shift = log_kernel(0.5 * (lo + hi));
                boost::math::quadrature::tanh_sinh<double> integrator(15);
                auto kernel = [&](double p) {
                    const double v = log_kernel(p) - shift;
                    return std::isfinite(v) ? std::exp(v) : 0.0;
                };
                const double tol = 1e-13;
                const double den = integrator.integrate(kernel, lo, hi, tol);
                const double num = integrator.integrate([&](double p) { return p * kernel(p); }, lo, hi, tol);
                if (!(den > std::numeric_limits<double>::min()) || !std::isfinite(num)) {
                    throw DegeneratePosterior("posterior normalizer underflowed");
                }
                return std::clamp(num / den, 0.0, 1.0);
            }
        },
        prior);
}

Bet mimicked_logopt_bet(std::uint64_t t, std::uint64_t losses, const Prior& prior) {
    require_round(t, losses);
    return binomial_bet(t, losses, posterior_mean(t - 1, losses, prior));
}

// ---------------------------------------------------------------------------

double binomial_log_wealth(std::uint64_t T, std::uint64_t losses, double p) {
    if (losses > T) throw std::invalid_argument("binomial_log_wealth: losses exceed T");
    require_unit(p, "binomial p");
    const double l = static_cast<double>(losses);
    const double w = static_cast<double>(T - losses);
    return std::log(static_cast<double>(T) + 1.0) + xlogy(l, p) + xlogy(w, 1.0 - p) + log_choose(T, losses);
}

double log_binomial_survival(std::uint64_t l, std::uint64_t n, double c) {
    if (l >= n) return kNegInf;
    if (c <= 0.0) return kNegInf;
    if (c >= 1.0) return 0.0;
    const double a = static_cast<double>(l) + 1.0;
    const double b = static_cast<double>(n - l);
    // P(X > l) = I_c(l+1, n-l); its complement is the CDF at l.
    const double survival = boost::math::ibeta(a, b, c);
    if (survival > 0.5) return std::log1p(-boost::math::ibetac(a, b, c));
    if (survival > std::numeric_limits<double>::min()) return std::log(survival);
    // Far upper tail: log-sum-exp of the pmf terms k = l+1..n.
    const double lc = std::log(c), l1c = std::log1p(-c);
    auto log_pmf = [&](std::uint64_t k) {
        return log_choose(n, k) + static_cast<double>(k) * lc + static_cast<double>(n - k) * l1c;
    };
    const double peak = log_pmf(l + 1);
    double acc = 0.0;
    for (std::uint64_t k = l + 1; k <= n; ++k) {
        const double term = std::exp(log_pmf(k) - peak);
        acc += term;
        if (term < 1e-18 * acc) break;
    }
    return peak + std::log(acc);
}

double mixture_uniform_log_wealth(std::uint64_t T, std::uint64_t losses, double c) {
    if (losses > T) throw std::invalid_argument("mixture_uniform_log_wealth: losses exceed T");
    if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("mixture c must lie in (0, 1]");
    return log_binomial_survival(losses, T + 1, c) - std::log(c);
}

double mixture_beta_log_wealth(std::uint64_t T, std::uint64_t losses, double a, double b) {
    if (losses > T) throw std::invalid_argument("mixture_beta_log_wealth: losses exceed T");
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("beta prior needs a, b > 0");
    const double l = static_cast<double>(losses);
    const double w = static_cast<double>(T - losses);
    return log_beta_fn(a + l, b + w) - log_beta_fn(l + 1.0, w + 1.0) - log_beta_fn(a, b);
}

std::optional<double> closed_form_log_wealth(const StrategyConfig& cfg, std::uint64_t T, std::uint64_t losses) {
    if (losses > T) throw std::invalid_argument("closed_form_log_wealth: losses exceed T");
    switch (cfg.kind) {
        case StrategyKind::passive: return 0.0;
        case StrategyKind::aggressive: return losses == 0 ? std::log(static_cast<double>(T) + 1.0) : kNegInf;
        case StrategyKind::binomial: return binomial_log_wealth(T, losses, cfg.p);
        case StrategyKind::mixture_uniform: return mixture_uniform_log_wealth(T, losses, cfg.c);
        case StrategyKind::mixture_beta: return mixture_beta_log_wealth(T, losses, cfg.a, cfg.b);
        case StrategyKind::mimicked_logopt: return std::nullopt;
    }
    return std::nullopt;
}

namespace {
// Bet implied by a closed-form wealth: ratios of consecutive wealths.
Bet ratio_bet(const StrategyConfig& cfg, std::uint64_t t, std::uint64_t losses) {
    const double prev = *closed_form_log_wealth(cfg, t - 1, losses);
    if (prev == kNegInf) return {0.0, 0.0};
    return {std::exp(*closed_form_log_wealth(cfg, t, losses) - prev),
            std::exp(*closed_form_log_wealth(cfg, t, losses + 1) - prev)};
}
}  // namespace

Bet strategy_bet(const StrategyConfig& cfg, std::uint64_t t, std::uint64_t losses) {
    switch (cfg.kind) {
        case StrategyKind::passive: return passive_bet(t, losses);
        case StrategyKind::aggressive: return aggressive_bet(t, losses);
        case StrategyKind::binomial: return binomial_bet(t, losses, cfg.p);
        case StrategyKind::mixture_uniform:
        case StrategyKind::mixture_beta: require_round(t, losses); return ratio_bet(cfg, t, losses);
        case StrategyKind::mimicked_logopt: return mimicked_logopt_bet(t, losses, cfg.prior);
    }
    throw std::logic_error("unhandled strategy kind");
}

}  // namespace mcbet
