#include "doctest.h"

#include <bit>

#include "mcbet/classical.hpp"
#include "mcbet/reconstruct.hpp"
#include "mcbet/strategies.hpp"
#include "oracles.hpp"

using namespace mcbet;
using oracle::Rational;

namespace {

template <class R>
void check_table(const ReconstructionTable<R>& table, const EValueVector<R>& target) {
    const std::uint64_t t = target.horizon();
    for (std::uint64_t r = 0; r <= t; ++r) {
        R sum(0);
        for (const auto& v : table.levels[r]) sum += v;
        CHECK(sum == R(r + 1));
    }
    for (std::uint64_t code = 0; code < (1ULL << t); ++code) {
        const auto seq = oracle::bits(code, static_cast<unsigned>(t));
        CHECK(table.wealth(seq) == target.values[oracle::count_losses(seq, t)]);
    }
}

EValueVector<Rational> random_target(RandomSource& rng, unsigned t) {
    EValueVector<Rational> e;
    Rational total(0);
    for (unsigned l = 0; l <= t; ++l) {
        const Rational w = rng.below(4) == 0 ? Rational(0) : Rational(rng.below(50) + 1);
        e.values.push_back(w);
        total += w;
    }
    if (total == 0) {
        e.values[0] = 1;
        total = 1;
    }
    for (auto& v : e.values) v = v * Rational(t + 1) / total;
    return e;
}

}  // namespace

TEST_CASE("one-step target gives the binomial bet") {
    for (double p : {0.1, 0.35, 0.8}) {
        EValueVector<double> e{{2 - 2 * p, 2 * p}};
        const auto table = backward_reconstruct(e);
        CHECK(table.bet(1, 0).b0 == doctest::Approx(2 * (1 - p)));
        CHECK(table.bet(1, 0).b1 == doctest::Approx(2 * p));
    }
}

TEST_CASE("binomial wealth vector reconstructs the binomial bets") {
    const double p = 0.3;
    EValueVector<double> e;
    for (std::uint64_t l = 0; l <= 3; ++l) e.values.push_back(oracle::binomial_wealth(3, l, p));
    const auto table = backward_reconstruct(e);
    for (std::uint64_t r = 1; r <= 3; ++r)
        for (std::uint64_t l = 0; l < r; ++l) {
            const Bet b = binomial_bet(r, l, p);
            CHECK(table.bet(r, l).b0 == doctest::Approx(b.b0).epsilon(1e-12));
            CHECK(table.bet(r, l).b1 == doctest::Approx(b.b1).epsilon(1e-12));
        }
}

TEST_CASE("random targets: exact products and intermediate sums") {
    RandomSource rng(17, 0);
    for (unsigned t = 1; t <= 12; ++t)
        for (int rep = 0; rep < 3; ++rep) {
            const auto target = random_target(rng, t);
            REQUIRE(target.valid());
            check_table(backward_reconstruct(target), target);
        }
}

TEST_CASE("reconstructed bets satisfy the null constraint, with 0/0 = 0") {
    const auto target = perm_target_evalue<Rational>(14, Rational(1, 10));
    const auto table = backward_reconstruct(target);
    bool saw_zero_pair = false;
    for (std::uint64_t r = 1; r <= 14; ++r)
        for (std::uint64_t l = 0; l < r; ++l) {
            const auto& b = table.bet(r, l);
            const Rational lhs = b.b0 * Rational(r - l, r + 1) + b.b1 * Rational(l + 1, r + 1);
            if (table.levels[r - 1][l] == 0) {
                CHECK(b.b0 == 0);
                CHECK(b.b1 == 0);
                saw_zero_pair = true;
            } else {
                CHECK(lhs == 1);
            }
        }
    CHECK(saw_zero_pair);
}

TEST_CASE("invalid targets are refused") {
    CHECK_THROWS_AS(backward_reconstruct(EValueVector<double>{{1.0, 0.5}}), InvalidTarget);
    CHECK_THROWS_AS(backward_reconstruct(EValueVector<double>{{3.0, -1.0}}), InvalidTarget);
    CHECK_THROWS_AS(backward_reconstruct(EValueVector<double>{}), InvalidTarget);
    CHECK_THROWS_AS(complete_evalue(EValueVector<double>{{3.0, 1.0}}), InvalidTarget);
}

TEST_CASE("permutation target") {
    const auto a = perm_target_evalue<Rational>(19, Rational(1, 20));
    CHECK(a.values[0] == 20);
    for (std::size_t l = 1; l < a.values.size(); ++l) CHECK(a.values[l] == 0);

    const auto b = perm_target_evalue<Rational>(9, Rational(1, 20));
    CHECK(b.values[0] == 10);
    for (std::size_t l = 1; l < b.values.size(); ++l) CHECK(b.values[l] == 0);

    for (std::uint64_t T = 0; T <= 300; ++T)
        for (const Rational alpha : {Rational(1, 20), Rational(1, 100), Rational(3, 7), Rational(1)}) {
            const auto e = perm_target_evalue<Rational>(T, alpha);
            CHECK(e.sum() == Rational(T + 1));
            for (const auto& v : e.values) {
                CHECK(v >= 0);
                CHECK(v <= 1 / alpha);
            }
        }
    CHECK(perm_target_evalue<double>(999, 0.05).valid());
}

TEST_CASE("Besag-Clifford target: h = 1 is the aggressive strategy") {
    const auto e = bc_target_evalue<Rational>(10, 1);
    const auto table = backward_reconstruct(e);
    for (std::uint64_t r = 1; r <= 10; ++r) {
        CHECK(table.bet(r, 0).b0 == Rational(r + 1, r));
        CHECK(table.bet(r, 0).b1 == 0);
    }
    CHECK_THROWS(bc_target_evalue<double>(5, 0));
    CHECK_THROWS(bc_target_evalue<double>(5, 7));
    check_table(backward_reconstruct(bc_target_evalue<Rational>(9, 3)), bc_target_evalue<Rational>(9, 3));
}

TEST_CASE("level-alpha tests are dominated by their reconstruction") {
    for (unsigned t = 1; t <= 10; ++t)
        for (const Rational alpha : {Rational(1, 10), Rational(1, 4), Rational(1, 2)}) {
            // every 0/1 phi over l with null mass |phi|/(t+1) <= alpha
            for (std::uint64_t mask = 1; mask < (1ULL << (t + 1)); ++mask) {
                if (Rational(std::popcount(mask), t + 1) > alpha) continue;
                EValueVector<Rational> e;
                for (unsigned l = 0; l <= t; ++l) e.values.push_back((mask >> l) & 1 ? 1 / alpha : Rational(0));
                e = complete_evalue(e);
                const auto table = backward_reconstruct(e);
                for (std::uint64_t code = 0; code < (1ULL << t); ++code) {
                    const auto seq = oracle::bits(code, t);
                    const bool phi = (mask >> oracle::count_losses(seq, t)) & 1;
                    CHECK((table.wealth(seq) >= 1 / alpha) == phi);
                }
            }
        }
}

TEST_CASE("anytime permutation p-value") {
    CHECK(anytime_perm_pvalue(4, 100, 100) == make_fraction(5, 101));
    CHECK(anytime_perm_pvalue(4, 100, 100) == perm_pvalue(4, 100));
    CHECK(anytime_perm_pvalue(1, 4, 10) == make_fraction(8, 11));
    CHECK(anytime_perm_pvalue(0, 0, 10).value() == 1.0);
    CHECK(anytime_perm_pvalue(3, 50, 20) == make_fraction(4, 21));

    std::vector<Rational> grid;
    for (std::uint64_t r = 1; r <= 11; ++r) grid.emplace_back(r, 11);
    const oracle::InfimumPValue inf(grid, [](const Rational&) { return std::uint64_t{10}; });
    const auto seq = std::vector<Indicator>{Indicator::win, Indicator::loss, Indicator::win, Indicator::win};
    CHECK(inf(seq, 4) == Rational(8, 11));
}

TEST_CASE("anytime permutation path moves only on wins") {
    for (unsigned t = 1; t <= 12; ++t) {
        const std::uint64_t T = 12;
        for (std::uint64_t code = 0; code < (1ULL << t); ++code) {
            const auto seq = oracle::bits(code, t);
            const auto path = anytime_perm_path(seq, T);
            Fraction prev = make_fraction(1, 1);
            for (std::size_t i = 0; i < seq.size(); ++i) {
                if (seq[i] == Indicator::loss) {
                    CHECK(path[i] == prev);
                } else {
                    CHECK(path[i] < prev);
                }
                prev = path[i];
            }
        }
    }
}

TEST_CASE("anytime Besag-Clifford p-value") {
    CHECK(anytime_bc_pvalue(9, 100, 200, 10) == make_fraction(10, 101));
    for (std::uint64_t k = 1; k < 40; ++k) CHECK(anytime_bc_pvalue(1, k, kUnbounded, 1) == make_fraction(1, k));

    // at the stopping time the value is the classical one
    RandomSource rng(9, 0);
    for (int rep = 0; rep < 500; ++rep) {
        std::vector<Indicator> seq;
        for (int i = 0; i < 60; ++i) seq.push_back(rng.bernoulli(0.15) ? Indicator::loss : Indicator::win);
        const std::uint64_t h = 1 + rng.below(5), T = 10 + rng.below(40);
        const auto bc = bc_pvalue(std::span<const Indicator>(seq), h, T);
        const auto path = anytime_bc_path(seq, T, h);
        CHECK(path[bc.stop_time - 1] == bc.p);
        CHECK(path.back() == bc.p);
    }
}

TEST_CASE("JSON views") {
    const auto e = perm_target_evalue<double>(19, 0.05);
    const nlohmann::json j = e;
    CHECK(j.get<EValueVector<double>>().values == e.values);
    const nlohmann::json t = backward_reconstruct(e);
    CHECK(t.at("rounds").size() == 19);
    CHECK(t.at("rounds")[0].at("bets")[0].at("win").get<double>() == doctest::Approx(2.0));
    CHECK_THROWS_AS(nlohmann::json::parse(R"({"horizon": 3, "values": [1.0, 1.0]})").get<EValueVector<double>>(),
                    InvalidTarget);
}
