#include "mcbet/reconstruct.hpp"

#include <algorithm>

namespace mcbet {

Fraction make_fraction(std::uint64_t num, std::uint64_t den) {
    if (den == 0) throw std::invalid_argument("fraction with zero denominator");
    const std::uint64_t g = std::gcd(num, den);
    return {num / (g ? g : 1), den / (g ? g : 1)};
}

Fraction anytime_perm_pvalue(std::uint64_t losses, std::uint64_t tau, std::uint64_t T) {
    if (T == kUnbounded) throw std::invalid_argument("anytime_perm_pvalue needs a finite T");
    if (tau > T) tau = T;
    if (losses > tau) throw std::invalid_argument("anytime_perm_pvalue: losses exceed tau");
    return make_fraction(losses + 1 + T - tau, T + 1);
}

Fraction anytime_bc_pvalue(std::uint64_t losses, std::uint64_t tau, std::uint64_t T_max, std::uint64_t h) {
    if (h == 0) throw std::invalid_argument("anytime_bc_pvalue: h must be positive");
    if (losses > tau) throw std::invalid_argument("anytime_bc_pvalue: losses exceed tau");
    if (losses > h) throw std::invalid_argument("anytime_bc_pvalue: tau is past the h-th loss");
    const Fraction negbin = make_fraction(h, tau + h - losses);
    if (T_max == kUnbounded) return negbin;
    if (tau > T_max) throw std::invalid_argument("anytime_bc_pvalue: tau exceeds T_max");
    const Fraction perm = make_fraction(losses + 1 + T_max - tau, T_max + 1);
    return std::min(negbin, perm);
}

std::vector<Fraction> anytime_perm_path(std::span<const Indicator> seq, std::uint64_t T) {
    std::vector<Fraction> out;
    out.reserve(seq.size());
    std::uint64_t losses = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const std::uint64_t tau = i + 1;
        if (tau <= T) {
            losses += static_cast<std::uint64_t>(as_int(seq[i]));
            out.push_back(anytime_perm_pvalue(losses, tau, T));
        } else {
            out.push_back(out.back());
        }
    }
    return out;
}

std::vector<Fraction> anytime_bc_path(std::span<const Indicator> seq, std::uint64_t T_max, std::uint64_t h) {
    std::vector<Fraction> out;
    out.reserve(seq.size());
    std::uint64_t losses = 0;
    bool stopped = false;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const std::uint64_t tau = i + 1;
        if (stopped) {
            out.push_back(out.back());
            continue;
        }
        losses += static_cast<std::uint64_t>(as_int(seq[i]));
        out.push_back(anytime_bc_pvalue(losses, tau, T_max, h));
        stopped = losses == h || tau == T_max;
    }
    return out;
}

void to_json(nlohmann::json& j, const EValueVector<double>& e) {
    j = nlohmann::json{{"horizon", e.horizon()}, {"values", e.values}};
}

void from_json(const nlohmann::json& j, EValueVector<double>& e) {
    if (j.is_array()) {
        e.values = j.get<std::vector<double>>();
    } else {
        e.values = j.at("values").get<std::vector<double>>();
        if (j.contains("horizon") && j.at("horizon").get<std::uint64_t>() + 1 != e.values.size())
            throw InvalidTarget("horizon does not match the number of values");
    }
}

void to_json(nlohmann::json& j, const ReconstructionTable<double>& table) {
    nlohmann::json rounds = nlohmann::json::array();
    for (std::size_t r = 0; r < table.bets.size(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t l = 0; l < table.bets[r].size(); ++l) {
            row.push_back({{"losses", l}, {"win", table.bets[r][l].b0}, {"loss", table.bets[r][l].b1}});
        }
        rounds.push_back({{"round", r + 1}, {"bets", row}});
    }
    j = nlohmann::json{{"horizon", table.horizon()}, {"rounds", rounds}, {"levels", table.levels}};
}

}  // namespace mcbet
