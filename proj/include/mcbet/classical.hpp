#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mcbet/core.hpp"
#include "mcbet/reconstruct.hpp"

namespace mcbet {

/// (1 + losses)/(T + 1)
Fraction perm_pvalue(std::uint64_t losses, std::uint64_t T);

struct SequentialPValue {
    Fraction p;
    std::uint64_t stop_time = 0;
    std::uint64_t losses = 0;
};

/// Besag-Clifford: stop at the h-th loss or after T draws, whichever is first.
/// p = h/gamma when h losses were seen, else (L+1)/(T+1). A stream shorter
/// than T is treated as if T were its length.
SequentialPValue bc_pvalue(IndicatorStream& stream, std::uint64_t h, std::uint64_t T);
SequentialPValue bc_pvalue(std::span<const Indicator> seq, std::uint64_t h, std::uint64_t T);

/// Negative-binomial test: p = h/gamma(h) at the h-th loss; std::nullopt if the
/// stream ends first.
std::optional<SequentialPValue> negbin_pvalue(IndicatorStream& stream, std::uint64_t h);
std::optional<SequentialPValue> negbin_pvalue(std::span<const Indicator> seq, std::uint64_t h);

class OffSupport : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// p-to-e calibrators for p-values supported on {1/(T+1), ..., 1}.
///
/// Harmonic: (T+1)/(r v_{T+1}) with v_n the n-th harmonic number.
/// Square root: ((T+1)/sqrt(r))/s_{T+1} with s_n = sum_{i<=n} 1/sqrt(i).
/// Partial sums are cached up to the largest n requested so far; one instance
/// is not safe to share between threads.
class SupportCalibrator {
public:
    double harmonic(std::uint64_t r, std::uint64_t T);
    double sqrt_rule(std::uint64_t r, std::uint64_t T);
    /// Calibrates p = r/(T+1) given as a real number; throws OffSupport when p is not on the grid.
    double harmonic(double p, std::uint64_t T) { return harmonic(support_index(p, T), T); }
    double sqrt_rule(double p, std::uint64_t T) { return sqrt_rule(support_index(p, T), T); }

    static std::uint64_t support_index(double p, std::uint64_t T);

private:
    void grow(std::uint64_t n);
    std::vector<double> harmonic_sums_{0.0};
    std::vector<double> sqrt_sums_{0.0};
};

double calibrate_harmonic(std::uint64_t r, std::uint64_t T);
double calibrate_sqrt(std::uint64_t r, std::uint64_t T);

/// Harmonic calibrator values for r = 1..T+1 in any field type.
template <class R>
std::vector<R> harmonic_calibrator_values(std::uint64_t T) {
    R v(0);
    for (std::uint64_t i = 1; i <= T + 1; ++i) v += R(1) / R(i);
    std::vector<R> out;
    out.reserve(T + 1);
    for (std::uint64_t r = 1; r <= T + 1; ++r) out.push_back(R(T + 1) / (R(r) * v));
    return out;
}

/// Admissible on the uniform grid iff the values over r = 1..T+1 sum to T+1.
bool check_admissible(std::span<const double> values, std::uint64_t T, double tol = 1e-10);

/// kappa p^(kappa-1), the continuous power calibrator, sampled on the grid.
std::vector<double> power_calibrator_on_support(double kappa, std::uint64_t T);

}  // namespace mcbet
