#include "mcbet/core.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>

namespace mcbet {

void TestState::advance(Indicator i, double new_log_wealth) {
    ++t;
    losses += static_cast<std::uint64_t>(as_int(i));
    log_wealth = new_log_wealth;
    max_log_wealth = std::max(max_log_wealth, log_wealth);
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
}  // namespace

RandomSource::RandomSource(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id) {
    std::uint64_t x = derive_stream_seed(master_seed, stream_id);
    for (auto& word : s_) {
        x += 0x9e3779b97f4a7c15ULL;
        word = mix64(x);
    }
}

std::uint64_t RandomSource::next_u64() noexcept {
    ++draws_;
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RandomSource::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RandomSource::open_uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RandomSource::below(std::uint64_t bound) noexcept {
    // Lemire's multiply-shift with rejection.
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            m = static_cast<unsigned __int128>(next_u64()) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double RandomSource::normal() {
    // Phi^{-1}(u) = -sqrt(2) erfc^{-1}(2u)
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * open_uniform());
}

// ---------------------------------------------------------------------------

Indicator compare_statistic(double observed, double generated, TiePolicy ties, RandomSource& rng,
                            std::optional<double>& observed_tiebreak) {
    if (generated > observed) return Indicator::loss;
    if (generated < observed) return Indicator::win;
    if (ties == TiePolicy::conservative) return Indicator::loss;
    if (!observed_tiebreak) observed_tiebreak = rng.uniform();
    return rng.uniform() > *observed_tiebreak ? Indicator::loss : Indicator::win;
}

IndicatorStream::IndicatorStream(IndicatorSourceSpec source, TiePolicy ties, RandomSource rng,
                                 std::uint64_t max_length)
    : source_(std::move(source)), ties_(ties), rng_(rng), max_length_(max_length) {
    if (auto* b = std::get_if<BernoulliSource>(&source_); b && !(b->q >= 0.0 && b->q <= 1.0)) {
        throw std::invalid_argument("bernoulli stream: q must lie in [0, 1]");
    }
}

IndicatorStream IndicatorStream::statistics(double observed, StatisticGenerator gen, TiePolicy ties,
                                            std::uint64_t seed, std::uint64_t stream_id, std::uint64_t max_length) {
    return IndicatorStream(StatisticSource{observed, std::move(gen)}, ties, RandomSource(seed, stream_id),
                           max_length);
}

IndicatorStream IndicatorStream::bernoulli(double q, std::uint64_t seed, std::uint64_t stream_id,
                                           std::uint64_t max_length) {
    return IndicatorStream(BernoulliSource{q}, TiePolicy::conservative, RandomSource(seed, stream_id), max_length);
}

IndicatorStream IndicatorStream::polya(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t max_length) {
    return IndicatorStream(PolyaSource{}, TiePolicy::conservative, RandomSource(seed, stream_id), max_length);
}

IndicatorStream IndicatorStream::list(std::vector<Indicator> values) {
    const auto n = values.size();
    return IndicatorStream(ListSource{std::move(values)}, TiePolicy::conservative, RandomSource(0, 0),
                           std::max<std::uint64_t>(n, 1));
}

IndicatorStream IndicatorStream::list(std::span<const int> values) {
    std::vector<Indicator> out;
    out.reserve(values.size());
    for (int v : values) out.push_back(indicator_from(v));
    return list(std::move(out));
}

std::optional<Indicator> IndicatorStream::pull() {
    const std::uint64_t t = position_ + 1;
    return std::visit(
        [&](auto& src) -> std::optional<Indicator> {
            using S = std::decay_t<decltype(src)>;
            if constexpr (std::is_same_v<S, StatisticSource>) {
                auto y = src.generate();
                if (!y) return std::nullopt;
                const bool tie = *y == src.observed;
                const auto before = rng_.draws();
                auto i = compare_statistic(src.observed, *y, ties_, rng_, observed_tiebreak_);
                if (tie) tie_draws_ += rng_.draws() - before;
                return i;
            } else if constexpr (std::is_same_v<S, BernoulliSource>) {
                return rng_.bernoulli(src.q) ? Indicator::loss : Indicator::win;
            } else if constexpr (std::is_same_v<S, PolyaSource>) {
                // loss iff U < (l+1)/(t+1), evaluated without division
                const double u = rng_.uniform();
                return u * static_cast<double>(t + 1) < static_cast<double>(losses_ + 1) ? Indicator::loss
                                                                                          : Indicator::win;
            } else if constexpr (std::is_same_v<S, ListSource>) {
                if (position_ >= src.values.size()) return std::nullopt;
                return src.values[position_];
            } else {
                return src.tape->at(position_);
            }
        },
        source_);
}

std::optional<Indicator> IndicatorStream::next() {
    if (position_ >= max_length_) return std::nullopt;
    auto i = pull();
    if (!i) return std::nullopt;
    ++position_;
    losses_ += static_cast<std::uint64_t>(as_int(*i));
    return i;
}

Indicator IndicatorStream::next_or_throw() {
    auto i = next();
    if (!i) throw StreamExhausted();
    return *i;
}

// ---------------------------------------------------------------------------

std::shared_ptr<IndicatorTape> IndicatorTape::create(IndicatorStream upstream) {
    return std::shared_ptr<IndicatorTape>(new IndicatorTape(std::move(upstream)));
}

std::optional<Indicator> IndicatorTape::at(std::size_t index) {
    while (recorded_.size() <= index && !exhausted_) {
        auto i = upstream_.next();
        if (!i) {
            exhausted_ = true;
            break;
        }
        recorded_.push_back(*i);
    }
    if (index < recorded_.size()) return recorded_[index];
    return std::nullopt;
}

IndicatorStream IndicatorTape::replay() {
    return IndicatorStream(ReplaySource{shared_from_this()}, upstream_.tie_policy(), RandomSource(0, 0),
                           upstream_.max_length());
}

std::vector<Indicator> sequence_from_bits(std::uint64_t code, unsigned t) {
    std::vector<Indicator> seq(t);
    for (unsigned i = 0; i < t; ++i) seq[i] = ((code >> i) & 1U) ? Indicator::loss : Indicator::win;
    return seq;
}

}  // namespace mcbet
