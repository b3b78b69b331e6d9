#include "mcbet/classical.hpp"

#include <numeric>

namespace mcbet {

Fraction perm_pvalue(std::uint64_t losses, std::uint64_t T) {
    if (losses > T) throw std::invalid_argument("perm_pvalue: losses exceed T");
    return make_fraction(losses + 1, T + 1);
}

SequentialPValue bc_pvalue(IndicatorStream& stream, std::uint64_t h, std::uint64_t T) {
    if (h == 0) throw std::invalid_argument("bc_pvalue: h must be positive");
    if (T == 0) throw std::invalid_argument("bc_pvalue: T must be positive");
    SequentialPValue out;
    while (out.stop_time < T && out.losses < h) {
        auto i = stream.next();
        if (!i) {
            T = out.stop_time;
            break;
        }
        ++out.stop_time;
        out.losses += static_cast<std::uint64_t>(as_int(*i));
    }
    if (out.stop_time == 0) throw StreamExhausted();
    out.p = out.losses == h ? make_fraction(h, out.stop_time) : make_fraction(out.losses + 1, T + 1);
    return out;
}

SequentialPValue bc_pvalue(std::span<const Indicator> seq, std::uint64_t h, std::uint64_t T) {
    auto stream = IndicatorStream::list(std::vector<Indicator>(seq.begin(), seq.end()));
    return bc_pvalue(stream, h, T);
}

std::optional<SequentialPValue> negbin_pvalue(IndicatorStream& stream, std::uint64_t h) {
    if (h == 0) throw std::invalid_argument("negbin_pvalue: h must be positive");
    SequentialPValue out;
    while (out.losses < h) {
        auto i = stream.next();
        if (!i) return std::nullopt;
        ++out.stop_time;
        out.losses += static_cast<std::uint64_t>(as_int(*i));
    }
    out.p = make_fraction(h, out.stop_time);
    return out;
}

std::optional<SequentialPValue> negbin_pvalue(std::span<const Indicator> seq, std::uint64_t h) {
    auto stream = IndicatorStream::list(std::vector<Indicator>(seq.begin(), seq.end()));
    return negbin_pvalue(stream, h);
}

// ---------------------------------------------------------------------------

void SupportCalibrator::grow(std::uint64_t n) {
    while (harmonic_sums_.size() <= n) {
        const double i = static_cast<double>(harmonic_sums_.size());
        harmonic_sums_.push_back(harmonic_sums_.back() + 1.0 / i);
        sqrt_sums_.push_back(sqrt_sums_.back() + 1.0 / std::sqrt(i));
    }
}

double SupportCalibrator::harmonic(std::uint64_t r, std::uint64_t T) {
    if (r < 1 || r > T + 1) throw OffSupport("harmonic calibrator: r must lie in 1..T+1");
    grow(T + 1);
    return static_cast<double>(T + 1) / (static_cast<double>(r) * harmonic_sums_[T + 1]);
}

double SupportCalibrator::sqrt_rule(std::uint64_t r, std::uint64_t T) {
    if (r < 1 || r > T + 1) throw OffSupport("sqrt calibrator: r must lie in 1..T+1");
    grow(T + 1);
    return (static_cast<double>(T + 1) / std::sqrt(static_cast<double>(r))) / sqrt_sums_[T + 1];
}

std::uint64_t SupportCalibrator::support_index(double p, std::uint64_t T) {
    const double scaled = p * static_cast<double>(T + 1);
    const double r = std::round(scaled);
    if (!(r >= 1.0 && r <= static_cast<double>(T + 1)) || std::abs(scaled - r) > 1e-9 * static_cast<double>(T + 1))
        throw OffSupport("p-value is not on the grid {1/(T+1), ..., 1}");
    return static_cast<std::uint64_t>(r);
}

namespace {
SupportCalibrator& thread_calibrator() {
    thread_local SupportCalibrator calibrator;
    return calibrator;
}
}  // namespace

double calibrate_harmonic(std::uint64_t r, std::uint64_t T) { return thread_calibrator().harmonic(r, T); }
double calibrate_sqrt(std::uint64_t r, std::uint64_t T) { return thread_calibrator().sqrt_rule(r, T); }

bool check_admissible(std::span<const double> values, std::uint64_t T, double tol) {
    if (values.size() != T + 1) throw std::invalid_argument("check_admissible: expected T+1 values");
    for (double v : values)
        if (!(v >= 0.0)) throw std::invalid_argument("check_admissible: calibrator values must be nonnegative");
    const double sum = std::accumulate(values.begin(), values.end(), 0.0);
    return std::abs(sum - static_cast<double>(T + 1)) <= tol * std::max(1.0, static_cast<double>(T + 1));
}

std::vector<double> power_calibrator_on_support(double kappa, std::uint64_t T) {
    if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("kappa must lie in (0, 1)");
    std::vector<double> out;
    out.reserve(T + 1);
    for (std::uint64_t r = 1; r <= T + 1; ++r) {
        const double p = static_cast<double>(r) / static_cast<double>(T + 1);
        out.push_back(kappa * std::pow(p, kappa - 1.0));
    }
    return out;
}

}  // namespace mcbet
