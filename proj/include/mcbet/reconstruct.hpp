#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "json.hpp"

#include "mcbet/core.hpp"

namespace mcbet {

using Rational = boost::multiprecision::cpp_rational;

namespace detail {

template <class R>
bool sums_to(const R& sum, std::uint64_t expected) {
    if constexpr (std::is_floating_point_v<R>) {
        return std::abs(sum - static_cast<R>(expected)) <= 1e-10 * std::max<R>(1, static_cast<R>(expected));
    } else {
        return sum == R(expected);
    }
}

inline long long floor_to_int(double x) { return static_cast<long long>(std::floor(x + 1e-9)); }
inline long long floor_to_int(const Rational& x) {
    boost::multiprecision::cpp_int q = numerator(x) / denominator(x);
    if (x < 0 && q * denominator(x) != numerator(x)) --q;
    return q.convert_to<long long>();
}

// 0/0 = 0; any other ratio is plain division.
template <class R>
R ratio(const R& num, const R& den) {
    if (den == R(0)) return R(0);
    return num / den;
}

}  // namespace detail

class InvalidTarget : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Betting function over the loss count after a fixed horizon t:
/// values[l] is the wealth when L_t = l. Valid iff nonnegative with sum t+1.
template <class R>
struct EValueVector {
    std::vector<R> values;

    std::uint64_t horizon() const { return values.empty() ? 0 : values.size() - 1; }
    R sum() const { return std::accumulate(values.begin(), values.end(), R(0)); }
    bool valid() const {
        if (values.empty()) return false;
        for (const auto& v : values)
            if (v < R(0)) return false;
        return detail::sums_to(sum(), values.size());
    }
};

template <class R>
struct BetPair {
    R b0;
    R b1;
};

/// Sequential bets reproducing a loss-count e-value.
///
/// levels[r] is the intermediate betting function E_r (r = 0..t, levels[t] the
/// target, levels[0] = {1}). bets[r-1][l] is the round-r bet after l losses.
template <class R>
struct ReconstructionTable {
    std::vector<std::vector<R>> levels;
    std::vector<std::vector<BetPair<R>>> bets;

    std::uint64_t horizon() const { return bets.size(); }
    const BetPair<R>& bet(std::uint64_t round, std::uint64_t losses) const { return bets.at(round - 1).at(losses); }

    /// Product of the bets along a sequence (length at most the horizon).
    R wealth(std::span<const Indicator> seq) const {
        if (seq.size() > horizon()) throw std::invalid_argument("sequence longer than reconstruction horizon");
        R w(1);
        std::uint64_t losses = 0;
        for (std::size_t r = 0; r < seq.size(); ++r) {
            const auto& b = bets[r][losses];
            if (seq[r] == Indicator::loss) {
                w *= b.b1;
                ++losses;
            } else {
                w *= b.b0;
            }
        }
        return w;
    }
};

/// Backward recursion E_{r-1}(l) = ((l+1) E_r(l+1) + (r-l) E_r(l)) / (r+1) with
/// bets B_{r|l}(0) = E_r(l)/E_{r-1}(l) and B_{r|l}(1) = E_r(l+1)/E_{r-1}(l).
template <class R>
ReconstructionTable<R> backward_reconstruct(const EValueVector<R>& target) {
    if (!target.valid()) throw InvalidTarget("target betting function must be nonnegative and sum to t+1");
    const std::uint64_t t = target.horizon();
    ReconstructionTable<R> table;
    table.levels.resize(t + 1);
    table.bets.resize(t);
    table.levels[t] = target.values;
    for (std::uint64_t r = t; r >= 1; --r) {
        const auto& cur = table.levels[r];
        auto& prev = table.levels[r - 1];
        auto& bets = table.bets[r - 1];
        prev.assign(r, R(0));
        bets.resize(r);
        for (std::uint64_t l = 0; l < r; ++l) {
            prev[l] = (R(l + 1) * cur[l + 1] + R(r - l) * cur[l]) / R(r + 1);
            bets[l] = {detail::ratio(cur[l], prev[l]), detail::ratio(cur[l + 1], prev[l])};
        }
    }
    return table;
}

/// Most powerful fixed-horizon bet at level alpha:
/// 1/alpha for l < floor((T+1) alpha), a remainder at l = floor((T+1) alpha), 0 above.
template <class R>
EValueVector<R> perm_target_evalue(std::uint64_t T, const R& alpha) {
    if (!(alpha > R(0) && alpha <= R(1))) throw std::invalid_argument("perm_target_evalue: alpha must lie in (0, 1]");
    const R inv = R(1) / alpha;
    const long long k = detail::floor_to_int(R(T + 1) * alpha);
    EValueVector<R> e;
    e.values.assign(T + 1, R(0));
    for (long long l = 0; l < k && l <= static_cast<long long>(T); ++l) e.values[l] = inv;
    if (k <= static_cast<long long>(T)) {
        R a = R(T + 1) - R(k) * inv;
        if constexpr (std::is_floating_point_v<R>) {
            if (std::abs(a) < 1e-9) a = 0;
        }
        e.values[k] = a;
    }
    return e;
}

/// Besag-Clifford style target: (T+1)/h on fewer than h losses, 0 otherwise.
/// Wealth reaches (T+1)/h exactly when the h-th loss has not occurred by T;
/// with h = 1 these are the aggressive bets.
template <class R>
EValueVector<R> bc_target_evalue(std::uint64_t T, std::uint64_t h) {
    if (h == 0 || h > T + 1) throw std::invalid_argument("bc_target_evalue: h must lie in 1..T+1");
    EValueVector<R> e;
    e.values.assign(T + 1, R(0));
    for (std::uint64_t l = 0; l < h; ++l) e.values[l] = R(T + 1) / R(h);
    return e;
}

/// Adds the deficit of a sub-e-value (sum below t+1) evenly to its zero
/// entries. Entries already positive are unchanged, so a test vector phi/alpha
/// becomes a valid target whose padded entries stay below 1/alpha.
template <class R>
EValueVector<R> complete_evalue(EValueVector<R> e) {
    const R deficit = R(e.values.size()) - e.sum();
    if (deficit < R(0)) throw InvalidTarget("complete_evalue: sum already exceeds t+1");
    std::size_t zeros = 0;
    for (const auto& v : e.values)
        if (v == R(0)) ++zeros;
    if (deficit == R(0)) return e;
    if (zeros == 0) throw InvalidTarget("complete_evalue: no zero entries to absorb the deficit");
    const R share = deficit / R(zeros);
    for (auto& v : e.values)
        if (v == R(0)) v = share;
    return e;
}

/// Reduced fraction num/den with an exact value for tests.
struct Fraction {
    std::uint64_t num = 1;
    std::uint64_t den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    Rational exact() const { return Rational(num, den); }
    friend bool operator==(const Fraction& a, const Fraction& b) {
        return static_cast<unsigned __int128>(a.num) * b.den == static_cast<unsigned __int128>(b.num) * a.den;
    }
    friend bool operator<(const Fraction& a, const Fraction& b) {
        return static_cast<unsigned __int128>(a.num) * b.den < static_cast<unsigned __int128>(b.num) * a.den;
    }
};
Fraction make_fraction(std::uint64_t num, std::uint64_t den);

constexpr std::uint64_t kUnbounded = std::numeric_limits<std::uint64_t>::max();

/// (L_tau + 1 + T - tau)/(T+1) for tau <= T. For tau > T the value is frozen:
/// `losses` is then read as L_T and the result is (L_T + 1)/(T + 1).
Fraction anytime_perm_pvalue(std::uint64_t losses, std::uint64_t tau, std::uint64_t T);

/// min(h/(tau+h-L_tau), (L_tau+1+T_max-tau)/(T_max+1)); T_max may be kUnbounded.
/// Callers stop updating after the stopping time gamma(h, T_max).
Fraction anytime_bc_pvalue(std::uint64_t losses, std::uint64_t tau, std::uint64_t T_max, std::uint64_t h);

/// Anytime p-value after each prefix of `seq` (entry i is the value at tau = i+1),
/// frozen once T (resp. gamma(h, T_max)) is reached.
std::vector<Fraction> anytime_perm_path(std::span<const Indicator> seq, std::uint64_t T);
std::vector<Fraction> anytime_bc_path(std::span<const Indicator> seq, std::uint64_t T_max, std::uint64_t h);

void to_json(nlohmann::json& j, const EValueVector<double>& e);
void from_json(const nlohmann::json& j, EValueVector<double>& e);
void to_json(nlohmann::json& j, const ReconstructionTable<double>& table);

}  // namespace mcbet
