#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mcbet {

/// Significance level, strictly inside (0, 1).
class Alpha {
public:
    explicit Alpha(double value) : value_(value) {
        if (!(value > 0.0 && value < 1.0)) {
            throw std::invalid_argument("alpha must lie in (0, 1), got " + std::to_string(value));
        }
    }
    double value() const noexcept { return value_; }
    double threshold() const noexcept { return 1.0 / value_; }

private:
    double value_;
};

/// One round's outcome: loss (1) when the generated statistic is at least the observed one.
enum class Indicator : std::uint8_t { win = 0, loss = 1 };

inline int as_int(Indicator i) noexcept { return static_cast<int>(i); }
inline Indicator indicator_from(int v) {
    if (v != 0 && v != 1) throw std::invalid_argument("indicator must be 0 or 1");
    return v ? Indicator::loss : Indicator::win;
}

enum class TiePolicy { randomized, conservative };

constexpr std::uint64_t kDefaultMaxSteps = 1'000'000;

/// Running state of a sequential test.
struct TestState {
    std::uint64_t t = 0;
    std::uint64_t losses = 0;
    double log_wealth = 0.0;
    double max_log_wealth = 0.0;

    bool absorbed() const noexcept { return log_wealth == -std::numeric_limits<double>::infinity(); }
    /// Records the outcome of step t+1 with the given log-wealth after it.
    void advance(Indicator i, double new_log_wealth);
};

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

/// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Combines a master seed and a stream id into the seed of one logical stream.
/// For a fixed master seed the map stream_id -> seed is a bijection.
constexpr std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t stream_id) noexcept {
    return mix64(mix64(master_seed) ^ stream_id);
}

/// Deterministic xoshiro256** stream keyed by (master_seed, stream_id).
/// Produces the same draws on every platform.
class RandomSource {
public:
    RandomSource(std::uint64_t master_seed, std::uint64_t stream_id);

    std::uint64_t next_u64() noexcept;
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Uniform on (0, 1), for inverse-CDF sampling.
    double open_uniform() noexcept;
    bool bernoulli(double q) noexcept { return uniform() < q; }
    /// Uniform integer in [0, bound) without modulo bias.
    std::uint64_t below(std::uint64_t bound) noexcept;
    /// Standard normal via inverse CDF of one open uniform.
    double normal();

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }
    std::uint64_t draws() const noexcept { return draws_; }

private:
    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    std::uint64_t s_[4];
    std::uint64_t draws_ = 0;
};

// ---------------------------------------------------------------------------
// Indicator streams
// ---------------------------------------------------------------------------

class StreamExhausted : public std::runtime_error {
public:
    StreamExhausted() : std::runtime_error("indicator stream exhausted") {}
};

/// Pulls generated statistics one at a time; std::nullopt ends the stream.
using StatisticGenerator = std::function<std::optional<double>()>;

struct StatisticSource {
    double observed;
    StatisticGenerator generate;
};
struct BernoulliSource {
    double q;
};
/// Exchangeable null: loss probability (l+1)/(t+1) given l earlier losses.
struct PolyaSource {};
struct ListSource {
    std::vector<Indicator> values;
};

class IndicatorTape;
struct ReplaySource {
    std::shared_ptr<IndicatorTape> tape;
};

using IndicatorSourceSpec = std::variant<StatisticSource, BernoulliSource, PolyaSource, ListSource, ReplaySource>;

/// Lazily produced win/loss indicators.
///
/// Statistic sources compare each generated statistic with the observed one.
/// Ties are losses under the conservative policy. Under the randomized policy
/// every statistic carries a uniform tie-breaker and a tie is a loss when the
/// generated tie-breaker exceeds the observed one; tie-breakers are drawn only
/// when a tie actually occurs (the observed one at the first tie).
class IndicatorStream {
public:
    IndicatorStream(IndicatorSourceSpec source, TiePolicy ties, RandomSource rng,
                    std::uint64_t max_length = kDefaultMaxSteps);

    static IndicatorStream statistics(double observed, StatisticGenerator gen, TiePolicy ties, std::uint64_t seed,
                                      std::uint64_t stream_id = 0, std::uint64_t max_length = kDefaultMaxSteps);
    static IndicatorStream bernoulli(double q, std::uint64_t seed, std::uint64_t stream_id = 0,
                                     std::uint64_t max_length = kDefaultMaxSteps);
    static IndicatorStream polya(std::uint64_t seed, std::uint64_t stream_id = 0,
                                 std::uint64_t max_length = kDefaultMaxSteps);
    static IndicatorStream list(std::vector<Indicator> values);
    static IndicatorStream list(std::span<const int> values);

    /// Next indicator, or std::nullopt once the source (or the length cap) is exhausted.
    std::optional<Indicator> next();
    /// Like next() but throws StreamExhausted.
    Indicator next_or_throw();

    std::uint64_t position() const noexcept { return position_; }
    std::uint64_t losses() const noexcept { return losses_; }
    std::uint64_t tie_draws() const noexcept { return tie_draws_; }
    std::uint64_t max_length() const noexcept { return max_length_; }
    TiePolicy tie_policy() const noexcept { return ties_; }

private:
    std::optional<Indicator> pull();

    IndicatorSourceSpec source_;
    TiePolicy ties_;
    RandomSource rng_;
    std::uint64_t max_length_;
    std::uint64_t position_ = 0;
    std::uint64_t losses_ = 0;
    std::uint64_t tie_draws_ = 0;
    std::optional<double> observed_tiebreak_;
};

/// Comparison of one generated statistic against the observed one. The observed
/// tie-breaker is drawn into `observed_tiebreak` on first use and reused after.
Indicator compare_statistic(double observed, double generated, TiePolicy ties, RandomSource& rng,
                            std::optional<double>& observed_tiebreak);

/// Records indicators from one underlying stream so several consumers see the
/// identical sequence. Each replay() cursor starts at position 0.
class IndicatorTape : public std::enable_shared_from_this<IndicatorTape> {
public:
    static std::shared_ptr<IndicatorTape> create(IndicatorStream upstream);

    std::optional<Indicator> at(std::size_t index);
    IndicatorStream replay();
    std::size_t recorded() const noexcept { return recorded_.size(); }

private:
    explicit IndicatorTape(IndicatorStream upstream) : upstream_(std::move(upstream)) {}
    IndicatorStream upstream_;
    std::vector<Indicator> recorded_;
    bool exhausted_ = false;
};

/// Null probability of one indicator sequence under exchangeability:
/// l!(t-l)!/(t+1)! where l counts the losses. Real may be any field type.
template <class Real>
Real polya_sequence_probability(std::span<const Indicator> seq) {
    if (seq.empty()) throw std::invalid_argument("polya_sequence_probability: empty sequence");
    Real prob = 1;
    long long losses = 0;
    long long t = 0;
    for (Indicator i : seq) {
        ++t;
        if (i == Indicator::loss) {
            prob *= Real(losses + 1) / Real(t + 1);
            ++losses;
        } else {
            prob *= Real(t - losses) / Real(t + 1);
        }
    }
    return prob;
}

inline double polya_sequence_probability(std::span<const Indicator> seq) {
    return polya_sequence_probability<double>(seq);
}

/// Expands the bits of `code` (lowest bit first) into a length-t sequence.
std::vector<Indicator> sequence_from_bits(std::uint64_t code, unsigned t);

}  // namespace mcbet
