#include "mcbet/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mcbet/classical.hpp"
#include "mcbet/core.hpp"
#include "mcbet/engine.hpp"
#include "mcbet/harness.hpp"
#include "mcbet/reconstruct.hpp"
#include "mcbet/strategies.hpp"

namespace mcbet {

namespace {

using ojson = nlohmann::ordered_json;

class InputError : public std::runtime_error {
public:
    InputError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what) {}
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

/// Reads one numeric column of a CSV file lazily, one line per call. A first
/// line that does not parse as numbers is taken as a header; the column named
/// `column` is used, otherwise the first one.
class ColumnReader {
public:
    ColumnReader(std::istream& in, std::string column) : in_(in), column_(std::move(column)) {}

    std::optional<double> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            const auto text = trim(line);
            if (text.empty() || text[0] == '#') continue;
            const auto fields = split_fields(text);
            if (!header_checked_) {
                header_checked_ = true;
                bool numeric = true;
                for (const auto& f : fields) numeric = numeric && parse_number(f).has_value();
                if (!numeric) {
                    index_ = 0;
                    for (std::size_t i = 0; i < fields.size(); ++i)
                        if (fields[i] == column_) index_ = i;
                    if (fields.size() > 1 && fields[index_] != column_)
                        throw InputError(line_no_, "header has no '" + column_ + "' column");
                    continue;
                }
            }
            if (index_ >= fields.size()) throw InputError(line_no_, "missing column");
            const auto v = parse_number(fields[index_]);
            if (!v) throw InputError(line_no_, "not a number: '" + fields[index_] + "'");
            ++values_read_;
            return v;
        }
        return std::nullopt;
    }

    std::size_t line() const { return line_no_; }
    std::size_t values_read() const { return values_read_; }

private:
    std::istream& in_;
    std::string column_;
    std::size_t line_no_ = 0;
    std::size_t index_ = 0;
    std::size_t values_read_ = 0;
    bool header_checked_ = false;
};

std::vector<Indicator> read_indicators(std::istream& in) {
    ColumnReader reader(in, "indicator");
    std::vector<Indicator> out;
    while (auto v = reader.next()) {
        if (*v != 0.0 && *v != 1.0) throw InputError(reader.line(), "indicator must be 0 or 1");
        out.push_back(*v == 1.0 ? Indicator::loss : Indicator::win);
    }
    return out;
}

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_cell(const ojson& v) {
    if (v.is_null()) return "";
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) return format_number(v.get<double>());
    const std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

void write_rows_csv(std::ostream& os, const std::vector<ojson>& rows) {
    if (rows.empty()) return;
    bool first = true;
    for (const auto& [key, _] : rows.front().items()) {
        os << (first ? "" : ",") << key;
        first = false;
    }
    os << '\n';
    for (const auto& row : rows) {
        first = true;
        for (const auto& [_, value] : row.items()) {
            os << (first ? "" : ",") << csv_cell(value);
            first = false;
        }
        os << '\n';
    }
}

struct Globals {
    std::optional<double> alpha;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "json";
    std::string manifest;
    unsigned jobs = 1;

    std::uint64_t seed_or(std::uint64_t fallback) const { return seed.value_or(fallback); }
};

/// Output target: the --out file when given, else the stream passed to run_cli.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw std::runtime_error("cannot open output file " + path);
            os_ = file_.get();
        }
    }
    std::ostream& stream() { return *os_; }
    bool is_file() const { return file_ != nullptr; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* os_;
};

void write_manifest(const Globals& g, const nlohmann::json& config, std::uint64_t seed) {
    if (g.manifest.empty()) return;
    std::ofstream os(g.manifest);
    if (!os) throw std::runtime_error("cannot open manifest file " + g.manifest);
    os << run_manifest(config, seed).dump(2) << '\n';
}

struct StrategyFlags {
    std::string name = "binomial";
    std::optional<double> p, c, a, b;
    std::string prior = "uniform";

    void add(CLI::App* cmd) {
        cmd->add_option("--strategy", name,
                        "passive | aggressive | binomial | mixture | beta | mimicked_logopt")
            ->capture_default_str();
        cmd->add_option("--p", p, "binomial bet parameter (default from --alpha)");
        cmd->add_option("--c", c, "mixture prior upper limit (default 0.9 alpha)");
        cmd->add_option("--a", a, "beta prior first shape");
        cmd->add_option("--b", b, "beta prior second shape");
        cmd->add_option("--prior", prior, "working prior of mimicked_logopt: uniform | beta")->capture_default_str();
    }

    StrategyConfig build(const std::optional<double>& alpha) const {
        auto need_alpha = [&](const char* what) {
            if (!alpha) throw std::invalid_argument(std::string("--alpha is required to default ") + what);
            return Alpha{*alpha};
        };
        StrategyConfig cfg;
        switch (strategy_kind_from(name)) {
            case StrategyKind::passive: cfg = StrategyConfig::passive(); break;
            case StrategyKind::aggressive: cfg = StrategyConfig::aggressive(); break;
            case StrategyKind::binomial:
                cfg = p ? StrategyConfig::binomial(*p) : StrategyConfig::binomial(need_alpha("--p"));
                break;
            case StrategyKind::mixture_uniform:
                cfg = c ? StrategyConfig::mixture_uniform(*c) : StrategyConfig::mixture_uniform(need_alpha("--c"));
                break;
            case StrategyKind::mixture_beta: cfg = StrategyConfig::mixture_beta(a.value_or(1.0), b.value_or(1.0)); break;
            case StrategyKind::mimicked_logopt:
                if (prior == "beta") {
                    cfg = StrategyConfig::mimicked_logopt(BetaPrior{a.value_or(1.0), b.value_or(1.0)});
                } else if (prior == "uniform") {
                    const double hi = c ? *c : default_mixture_c(need_alpha("--c"));
                    cfg = StrategyConfig::mimicked_logopt(UniformPrior{0.0, hi});
                } else {
                    throw std::invalid_argument("--prior must be uniform or beta");
                }
                break;
        }
        cfg.alpha = alpha;
        cfg.validate();
        return cfg;
    }
};

struct StoppingFlags {
    bool no_futility = false;
    std::optional<double> futility_threshold;
    std::uint64_t max_steps = kDefaultMaxSteps;
    std::string ties = "randomized";

    void add(CLI::App* cmd) {
        cmd->add_flag("--no-futility", no_futility, "never stop for futility");
        cmd->add_option("--futility-threshold", futility_threshold, "stop once wealth falls below this (default alpha)");
        cmd->add_option("--max-steps", max_steps, "cap on the number of permutations")->capture_default_str();
        cmd->add_option("--ties", ties, "randomized | conservative")->capture_default_str();
    }

    /// Without a level there is no rejection threshold; the test runs until the
    /// input ends, the cap, or an explicit futility threshold.
    StoppingRule build(const std::optional<double>& alpha) const {
        StoppingRule rule;
        if (alpha) {
            rule = StoppingRule::level(Alpha{*alpha}, !no_futility, max_steps);
        } else {
            rule.reject_threshold = std::numeric_limits<double>::infinity();
            rule.futility_threshold = 0.0;
            rule.max_steps = max_steps;
        }
        if (futility_threshold && !no_futility) rule.futility_threshold = *futility_threshold;
        rule.validate();
        return rule;
    }

    TiePolicy tie_policy() const {
        if (ties == "randomized") return TiePolicy::randomized;
        if (ties == "conservative") return TiePolicy::conservative;
        throw std::invalid_argument("--ties must be randomized or conservative");
    }
};

std::istream& open_input(const std::string& path, std::istream& fallback, std::ifstream& file) {
    if (path.empty() || path == "-") return fallback;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open input file " + path);
    return file;
}

// ---------------------------------------------------------------------------

struct TestCommand {
    std::string input;
    StrategyFlags strategy;
    StoppingFlags stopping;
    bool trajectory = false;
};

int cmd_test(const Globals& g, const TestCommand& c, std::istream& in, std::ostream& out) {
    const auto strategy = c.strategy.build(g.alpha);
    const auto rule = c.stopping.build(g.alpha);
    const std::uint64_t seed = g.seed_or(1);

    std::ifstream file;
    auto reader = std::make_shared<ColumnReader>(open_input(c.input, in, file), "y");
    const auto y0 = reader->next();
    if (!y0) throw std::invalid_argument("empty input: expected the observed statistic y0 on the first line");
    auto stream = IndicatorStream::statistics(*y0, [reader] { return reader->next(); }, c.stopping.tie_policy(), seed,
                                              0, rule.max_steps);
    const auto outcome = run_test(stream, strategy, rule, {c.trajectory, 1});

    ojson result{{"stop_time", outcome.stop_time},
                 {"stop_reason", to_string(outcome.stop_reason)},
                 {"e_value", outcome.e_value()},
                 {"p_value", outcome.p_value()},
                 {"losses", outcome.losses},
                 {"seed", seed}};
    result["strategy"] = strategy.label();
    result["statistics_read"] = reader->values_read();

    Sink sink(g.out, out);
    if (g.format == "csv") {
        if (c.trajectory) {
            std::vector<ojson> rows;
            for (const auto& pt : outcome.trajectory)
                rows.push_back({{"t", pt.t}, {"losses", pt.losses}, {"wealth", std::exp(pt.log_wealth)}});
            write_rows_csv(sink.stream(), rows);
        } else {
            write_rows_csv(sink.stream(), {result});
        }
    } else {
        if (c.trajectory) {
            ojson path = ojson::array();
            for (const auto& pt : outcome.trajectory)
                path.push_back({{"t", pt.t}, {"losses", pt.losses}, {"wealth", std::exp(pt.log_wealth)}});
            result["trajectory"] = path;
        }
        sink.stream() << result.dump(2) << '\n';
    }
    write_manifest(g,
                   {{"command", "test"},
                    {"strategy", strategy},
                    {"reject_threshold", rule.reject_threshold},
                    {"futility_threshold", rule.futility_threshold},
                    {"max_steps", rule.max_steps},
                    {"ties", c.stopping.ties}},
                   seed);
    return outcome.rejected() ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct SimulateCommand {
    std::string config;
    bool full = false;
    std::optional<std::uint64_t> m;
};

int cmd_simulate(const Globals& g, const SimulateCommand& c, std::ostream& out, std::ostream& err) {
    std::ifstream file(c.config);
    if (!file) throw std::runtime_error("cannot open config file " + c.config);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(file);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (g.seed) j["seed"] = *g.seed;
    if (c.full) j["m"] = 2000;
    if (c.m) j["m"] = *c.m;
    const auto cfg = parse_simulation_config(j);
    const auto table = run_simulation(cfg, g.jobs);

    Sink sink(g.out, out);
    if (g.format == "csv") write_table_csv(sink.stream(), table);
    else sink.stream() << table_to_json(table).dump(2) << '\n';

    std::ostream& summary = sink.is_file() ? out : err;
    for (const auto& row : table) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "mu=%-6g %-28s power=%.3f mean_stop=%.1f median_stop=%.1f\n", row.mu,
                      row.method.c_str(), row.power, row.mean_stop, row.median_stop);
        summary << buf;
    }
    write_manifest(g, simulation_config_to_json(cfg), cfg.trial.seed);
    return 0;
}

// ---------------------------------------------------------------------------

struct RiskCommand {
    StrategyFlags strategy;
    std::vector<double> q;
    std::uint64_t runs = 1000;
    std::uint64_t cap = kDefaultMaxSteps;
    std::optional<double> epsilon;
    bool futility = false;
};

int cmd_riskscan(const Globals& g, const RiskCommand& c, std::ostream& out) {
    if (!g.alpha) throw std::invalid_argument("riskscan needs --alpha");
    const Alpha alpha{*g.alpha};
    const auto strategy = c.strategy.build(g.alpha);
    RiskOptions options;
    options.runs = c.runs;
    options.cap = c.cap;
    options.seed = g.seed_or(7);
    options.futility = c.futility;
    options.epsilon = c.epsilon;

    std::vector<ojson> rows;
    for (double q : c.q) {
        const auto est = estimate_resampling_risk(strategy, q, alpha, options);
        rows.push_back({{"q", est.q},
                        {"strategy", strategy.label()},
                        {"runs", est.runs},
                        {"rejections", est.rejections},
                        {"risk", est.risk},
                        {"standard_error", est.standard_error},
                        {"mean_stop", est.mean_stop}});
    }
    Sink sink(g.out, out);
    if (g.format == "csv") write_rows_csv(sink.stream(), rows);
    else sink.stream() << ojson(rows).dump(2) << '\n';
    nlohmann::json manifest{{"command", "riskscan"}, {"strategy", strategy}, {"q", c.q},     {"runs", c.runs},
                            {"cap", c.cap},          {"alpha", *g.alpha},    {"futility", c.futility}};
    if (c.epsilon) manifest["epsilon"] = *c.epsilon;
    write_manifest(g, manifest, options.seed);
    return 0;
}

// ---------------------------------------------------------------------------

struct ReconstructCommand {
    std::string target = "perm";
    std::optional<std::uint64_t> T;
    std::optional<std::uint64_t> h;
    std::optional<std::uint64_t> T_max;
    std::string file;
    std::string indicators;
};

int cmd_reconstruct(const Globals& g, const ReconstructCommand& c, std::istream& in, std::ostream& out) {
    EValueVector<double> target;
    std::uint64_t bc_h = 0, bc_T_max = kUnbounded;
    if (c.target == "perm") {
        if (!c.T) throw std::invalid_argument("perm target needs --T");
        if (!g.alpha) throw std::invalid_argument("perm target needs --alpha");
        target = perm_target_evalue<double>(*c.T, Alpha{*g.alpha}.value());
    } else if (c.target == "bc") {
        if (!c.h) throw std::invalid_argument("bc target needs --h");
        if (c.T) {
            target = bc_target_evalue<double>(*c.T, *c.h);
        } else {
            // level-alpha permutation target at horizon min(T_max, ceil(h/alpha) - 1)
            if (!g.alpha) throw std::invalid_argument("bc target needs --T or --alpha");
            const double alpha = Alpha{*g.alpha}.value();
            std::uint64_t T = static_cast<std::uint64_t>(std::ceil(static_cast<double>(*c.h) / alpha - 1e-9)) - 1;
            if (c.T_max) T = std::min(T, *c.T_max);
            target = perm_target_evalue<double>(T, alpha);
        }
        bc_h = *c.h;
        bc_T_max = c.T_max.value_or(kUnbounded);
    } else if (c.target == "file") {
        if (c.file.empty()) throw std::invalid_argument("file target needs --file");
        std::ifstream f(c.file);
        if (!f) throw std::runtime_error("cannot open target file " + c.file);
        try {
            target = nlohmann::json::parse(f).get<EValueVector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw InvalidTarget(std::string("malformed target file: ") + e.what());
        }
    } else {
        throw std::invalid_argument("--target must be perm, bc or file");
    }
    const auto table = backward_reconstruct(target);

    std::vector<ojson> trajectory;
    if (!c.indicators.empty()) {
        std::ifstream file;
        const auto seq = read_indicators(open_input(c.indicators, in, file));
        const std::size_t n = std::min<std::size_t>(seq.size(), table.horizon());
        std::vector<Fraction> anytime;
        if (c.target == "perm") anytime = anytime_perm_path(std::span(seq).first(n), table.horizon());
        if (c.target == "bc") anytime = anytime_bc_path(std::span(seq).first(n), bc_T_max, bc_h);
        double wealth = 1.0, max_wealth = 1.0;
        std::uint64_t losses = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& bet = table.bet(i + 1, losses);
            wealth *= seq[i] == Indicator::loss ? bet.b1 : bet.b0;
            losses += static_cast<std::uint64_t>(as_int(seq[i]));
            max_wealth = std::max(max_wealth, wealth);
            ojson row{{"t", i + 1}, {"indicator", as_int(seq[i])}, {"losses", losses}, {"wealth", wealth}};
            row["p_value"] = anytime.empty() ? std::min(1.0, 1.0 / max_wealth) : anytime[i].value();
            trajectory.push_back(std::move(row));
        }
    }

    Sink sink(g.out, out);
    if (g.format == "csv") {
        if (!trajectory.empty()) {
            write_rows_csv(sink.stream(), trajectory);
        } else {
            std::vector<ojson> rows;
            for (std::uint64_t r = 1; r <= table.horizon(); ++r)
                for (std::uint64_t l = 0; l < r; ++l)
                    rows.push_back({{"round", r}, {"losses", l}, {"win", table.bet(r, l).b0}, {"loss", table.bet(r, l).b1}});
            write_rows_csv(sink.stream(), rows);
        }
    } else {
        ojson result{{"target", nlohmann::json(target)}, {"table", nlohmann::json(table)}};
        if (!trajectory.empty()) result["trajectory"] = trajectory;
        sink.stream() << result.dump(2) << '\n';
    }
    nlohmann::json manifest{{"command", "reconstruct"}, {"target", c.target}, {"horizon", table.horizon()}};
    if (g.alpha) manifest["alpha"] = *g.alpha;
    if (c.h) manifest["h"] = *c.h;
    if (!c.file.empty()) manifest["file"] = c.file;
    write_manifest(g, manifest, g.seed_or(0));
    return 0;
}

// ---------------------------------------------------------------------------

struct CalibrateCommand {
    std::uint64_t T = 0;
    std::string rule = "harmonic";
    std::vector<double> p;
};

int cmd_calibrate(const Globals& g, const CalibrateCommand& c, std::ostream& out) {
    if (c.rule != "harmonic" && c.rule != "sqrt") throw std::invalid_argument("--rule must be harmonic or sqrt");
    SupportCalibrator cal;
    auto evaluate = [&](std::uint64_t r) { return c.rule == "harmonic" ? cal.harmonic(r, c.T) : cal.sqrt_rule(r, c.T); };
    std::vector<std::uint64_t> support;
    if (c.p.empty()) {
        for (std::uint64_t r = 1; r <= c.T + 1; ++r) support.push_back(r);
    } else {
        for (double p : c.p) support.push_back(SupportCalibrator::support_index(p, c.T));
    }
    std::vector<ojson> rows;
    std::vector<double> all;
    for (std::uint64_t r = 1; r <= c.T + 1; ++r) all.push_back(evaluate(r));
    for (auto r : support) {
        rows.push_back({{"r", r},
                        {"p_value", static_cast<double>(r) / static_cast<double>(c.T + 1)},
                        {"e_value", all[r - 1]}});
    }
    Sink sink(g.out, out);
    if (g.format == "csv") {
        write_rows_csv(sink.stream(), rows);
    } else {
        ojson result{{"rule", c.rule}, {"T", c.T}, {"admissible", check_admissible(all, c.T)}, {"values", rows}};
        sink.stream() << result.dump(2) << '\n';
    }
    write_manifest(g, {{"command", "calibrate"}, {"rule", c.rule}, {"T", c.T}}, g.seed_or(0));
    return 0;
}

// ---------------------------------------------------------------------------

struct BaselinesCommand {
    std::string indicators;
    std::optional<std::uint64_t> T;
    std::optional<std::uint64_t> h;
};

int cmd_baselines(const Globals& g, const BaselinesCommand& c, std::istream& in, std::ostream& out) {
    std::ifstream file;
    const auto seq = read_indicators(open_input(c.indicators, in, file));
    if (seq.empty()) throw std::invalid_argument("no indicators supplied");
    const std::uint64_t T = std::min<std::uint64_t>(c.T.value_or(seq.size()), seq.size());
    std::uint64_t h = 0;
    if (c.h) h = *c.h;
    else if (g.alpha) h = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(*g.alpha * static_cast<double>(T))));
    else throw std::invalid_argument("baselines needs --h or --alpha");

    std::uint64_t losses = 0;
    for (std::uint64_t i = 0; i < T; ++i) losses += static_cast<std::uint64_t>(as_int(seq[i]));
    const auto perm = perm_pvalue(losses, T);
    const auto bc = bc_pvalue(seq, h, T);
    const auto nb = negbin_pvalue(seq, h);

    ojson row{{"T", T},
              {"h", h},
              {"perm_p", perm.value()},
              {"perm_losses", losses},
              {"bc_p", bc.p.value()},
              {"bc_stop", bc.stop_time},
              {"negbin_p", nb ? ojson(nb->p.value()) : ojson(nullptr)},
              {"negbin_stop", nb ? ojson(nb->stop_time) : ojson(nullptr)}};
    if (g.alpha) {
        row["perm_reject"] = perm.value() <= *g.alpha;
        row["bc_reject"] = bc.p.value() <= *g.alpha;
    }
    Sink sink(g.out, out);
    if (g.format == "csv") write_rows_csv(sink.stream(), {row});
    else sink.stream() << row.dump(2) << '\n';
    write_manifest(g, {{"command", "baselines"}, {"T", T}, {"h", h}}, g.seed_or(0));
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Anytime-valid sequential Monte-Carlo permutation tests by betting", "mcbet"};
    app.require_subcommand(1);
    app.set_version_flag("--version", build_version());

    Globals g;
    app.add_option("--alpha", g.alpha, "significance level in (0, 1)");
    app.add_option("--seed", g.seed, "master seed");
    app.add_option("--out", g.out, "write the main output to this file instead of stdout");
    app.add_option("--format", g.format, "csv | json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app.add_option("--manifest", g.manifest, "write a JSON run manifest to this file");
    app.add_option("--jobs", g.jobs, "worker threads for simulate")->check(CLI::PositiveNumber);
    app.fallthrough();

    TestCommand test;
    auto* test_cmd = app.add_subcommand("test", "run one sequential test on a statistic stream (first value y0)");
    test_cmd->add_option("input", test.input, "CSV file with a 'y' column, or - for stdin");
    test.strategy.add(test_cmd);
    test.stopping.add(test_cmd);
    test_cmd->add_flag("--trajectory", test.trajectory, "include the wealth path");

    SimulateCommand sim;
    auto* sim_cmd = app.add_subcommand("simulate", "two-sample power and stopping-time experiment");
    sim_cmd->add_option("config", sim.config, "JSON experiment config")->required();
    sim_cmd->add_flag("--full", sim.full, "use m = 2000 trials per grid point");
    sim_cmd->add_option("--m", sim.m, "override the trial count");

    RiskCommand risk;
    auto* risk_cmd = app.add_subcommand("riskscan", "resampling risk over Bernoulli(q) indicators");
    risk.strategy.add(risk_cmd);
    risk_cmd->add_option("--q", risk.q, "loss probabilities, comma separated")->delimiter(',')->required();
    risk_cmd->add_option("--runs", risk.runs, "runs per q")->capture_default_str();
    risk_cmd->add_option("--cap", risk.cap, "maximum steps per run")->capture_default_str();
    risk_cmd->add_option("--epsilon", risk.epsilon, "stop at (1-epsilon)/alpha and round stochastically");
    risk_cmd->add_flag("--futility", risk.futility, "enable the futility stop");

    ReconstructCommand rec;
    auto* rec_cmd = app.add_subcommand("reconstruct", "bets reproducing a loss-count e-value");
    rec_cmd->set_help_flag("--help", "Print this help message and exit");
    rec_cmd->add_option("--target", rec.target, "perm | bc | file")->capture_default_str();
    rec_cmd->add_option("--T", rec.T, "horizon");
    rec_cmd->add_option("--h", rec.h, "loss budget of the bc target");
    rec_cmd->add_option("--T-max", rec.T_max, "permutation cap for the anytime Besag-Clifford p-value");
    rec_cmd->add_option("--file", rec.file, "JSON target: {\"values\": [...]} or a bare array");
    rec_cmd->add_option("--indicators", rec.indicators, "0/1 indicator file for a trajectory");

    CalibrateCommand cal;
    auto* cal_cmd = app.add_subcommand("calibrate", "p-to-e calibrators on the permutation p-value grid");
    cal_cmd->add_option("--T", cal.T, "number of permutations")->required();
    cal_cmd->add_option("--rule", cal.rule, "harmonic | sqrt")->capture_default_str();
    cal_cmd->add_option("--p", cal.p, "p-values to calibrate (default: whole grid)")->delimiter(',');

    BaselinesCommand base;
    auto* base_cmd = app.add_subcommand("baselines", "permutation, Besag-Clifford and negative-binomial p-values");
    base_cmd->set_help_flag("--help", "Print this help message and exit");
    base_cmd->add_option("indicators", base.indicators, "0/1 indicator file, or - for stdin");
    base_cmd->add_option("--T", base.T, "permutation cap (default: all indicators)");
    base_cmd->add_option("--h", base.h, "loss budget (default alpha T)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (g.alpha) Alpha{*g.alpha};
        if (*test_cmd) return cmd_test(g, test, in, out);
        if (*sim_cmd) return cmd_simulate(g, sim, out, err);
        if (*risk_cmd) return cmd_riskscan(g, risk, out);
        if (*rec_cmd) return cmd_reconstruct(g, rec, in, out);
        if (*cal_cmd) return cmd_calibrate(g, cal, out);
        if (*base_cmd) return cmd_baselines(g, base, in, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

}  // namespace mcbet
