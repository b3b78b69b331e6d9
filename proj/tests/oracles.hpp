#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the closed forms under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "mcbet/core.hpp"
#include "mcbet/engine.hpp"
#include "mcbet/reconstruct.hpp"
#include "mcbet/strategies.hpp"

namespace oracle {

using mcbet::Indicator;
using Rational = boost::multiprecision::cpp_rational;

inline std::vector<Indicator> bits(std::uint64_t code, unsigned t) {
    std::vector<Indicator> seq(t);
    for (unsigned i = 0; i < t; ++i) seq[i] = (code >> i) & 1 ? Indicator::loss : Indicator::win;
    return seq;
}

inline std::uint64_t count_losses(const std::vector<Indicator>& seq, std::size_t upto) {
    std::uint64_t l = 0;
    for (std::size_t i = 0; i < upto; ++i) l += seq[i] == Indicator::loss;
    return l;
}

/// Null probability of a sequence, built up step by step from the urn rule
/// P(loss | l earlier losses in t-1 draws) = (l+1)/(t+1).
template <class R>
R polya_weight(const std::vector<Indicator>& seq) {
    R w(1);
    std::uint64_t l = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const std::uint64_t t = i + 1;
        if (seq[i] == Indicator::loss) {
            w *= R(l + 1) / R(t + 1);
            ++l;
        } else {
            w *= R(t - l) / R(t + 1);
        }
    }
    return w;
}

/// Wealth after running the full sequence through the engine with no stopping.
inline double engine_wealth(const mcbet::StrategyConfig& cfg, const std::vector<Indicator>& seq) {
    mcbet::StoppingRule rule;
    rule.reject_threshold = std::numeric_limits<double>::infinity();
    rule.futility_threshold = 0.0;
    rule.max_steps = seq.size();
    auto stream = mcbet::IndicatorStream::list(seq);
    const auto out = mcbet::run_test(stream, cfg, rule);
    return std::exp(out.log_wealth);
}

/// E[W_t] under the exchangeable null by enumerating all 2^t sequences.
inline double null_expectation(const mcbet::StrategyConfig& cfg, unsigned t) {
    double total = 0.0;
    for (std::uint64_t code = 0; code < (1ULL << t); ++code) {
        const auto seq = bits(code, t);
        total += polya_weight<double>(seq) * engine_wealth(cfg, seq);
    }
    return total;
}

/// (T+1) C(T,l) p^l (1-p)^(T-l) evaluated directly.
inline double binomial_wealth(std::uint64_t T, std::uint64_t l, double p) {
    const double n = static_cast<double>(T), k = static_cast<double>(l);
    double log_w = std::log(n + 1.0) + std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    if (l > 0) log_w += k * std::log(p);
    if (l < T) log_w += (n - k) * std::log1p(-p);
    return std::exp(log_w);
}

/// Average of the binomial wealth over p ~ Uniform[0, c], by Gauss-Kronrod.
inline double uniform_mixture_wealth_quadrature(std::uint64_t T, std::uint64_t l, double c) {
    auto f = [&](double p) { return binomial_wealth(T, l, p); };
    double err = 0.0;
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, c, 15, 1e-12, &err);
    return integral / c;
}

/// Q_t defined as an infimum over candidate levels: the smallest alpha whose
/// reconstructed level-alpha bets reached 1/alpha at some r <= t. For each
/// alpha the target is the most powerful fixed-horizon e-value at horizon
/// horizon_for(alpha); wealth stops changing after that horizon.
class InfimumPValue {
public:
    template <class HorizonFn>
    InfimumPValue(std::vector<Rational> candidates, HorizonFn horizon_for) {
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
        for (const auto& alpha : candidates) {
            Level level{alpha, horizon_for(alpha), {}};
            const auto table = mcbet::backward_reconstruct(mcbet::perm_target_evalue<Rational>(level.T, alpha));
            const Rational threshold = Rational(1) / alpha;
            for (const auto& row : table.levels) {
                std::vector<bool> hit;
                for (const auto& v : row) hit.push_back(v >= threshold);
                level.hit.push_back(std::move(hit));
            }
            levels_.push_back(std::move(level));
        }
    }

    Rational operator()(const std::vector<Indicator>& seq, std::size_t t) const {
        for (const auto& level : levels_) {
            for (std::size_t r = 1; r <= t; ++r) {
                const std::size_t s = std::min<std::size_t>(r, level.T);
                if (level.hit[s][count_losses(seq, s)]) return level.alpha;
            }
        }
        return Rational(1);
    }

private:
    struct Level {
        Rational alpha;
        std::uint64_t T;
        std::vector<std::vector<bool>> hit;
    };
    std::vector<Level> levels_;
};

/// ceil(h / alpha) - 1 for a rational alpha.
inline std::uint64_t bc_horizon(std::uint64_t h, const Rational& alpha) {
    const Rational q = Rational(h) / alpha;
    const boost::multiprecision::cpp_int num = boost::multiprecision::numerator(q);
    const boost::multiprecision::cpp_int den = boost::multiprecision::denominator(q);
    boost::multiprecision::cpp_int c = num / den;
    if (c * den != num) ++c;
    return static_cast<std::uint64_t>(c) - 1;
}

}  // namespace oracle
