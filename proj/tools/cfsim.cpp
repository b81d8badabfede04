// cfsim: compute-and-forward rate and scheduling simulator.
//
// Subcommands compute single rates/searches or run the Monte Carlo
// campaigns and emit plot-ready CSV (RFC 4180) or JSON tables. Rates are
// reported in bits per real channel use; all logarithms are base 2.
//
// Exit codes: 0 success, 2 usage/config error, 3 computational failure,
// 4 validation failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cf/cf.hpp"
#include "cf/table.hpp"

namespace {

using nlohmann::json;

// Every flag is bound as text; config-file values and command-line values
// go through the same parsers afterwards.
struct RawOpts {
    std::string h;
    std::string a;
    std::string users;
    std::string relays;
    std::string power;
    std::string trials;
    std::string seed;
    std::string group_size;
    std::string slots;
    std::string solver = "auto";
    std::string norm_sq;
    std::string format = "csv";
    std::string output;
    std::string config_path;
    bool progress = false;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, ','))
        parts.push_back(item);
    return parts;
}

double parse_real(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("invalid " + what + " value '" + s + "'");
    }
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("invalid " + what + " value '" + s + "'");
    }
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("invalid " + what + " value '" + s + "'");
    }
}

std::vector<double> parse_real_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const auto& p : split_list(s))
        out.push_back(parse_real(p, what));
    if (out.empty())
        throw std::invalid_argument("empty " + what + " list");
    return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
    std::vector<int> out;
    for (const auto& p : split_list(s))
        out.push_back(static_cast<int>(parse_int(p, what)));
    if (out.empty())
        throw std::invalid_argument("empty " + what + " list");
    return out;
}

cf::ChannelVector parse_channel(const std::string& s) {
    return cf::ChannelVector(parse_real_list(s, "channel"));
}

cf::CoefficientVector parse_coefficients(const std::string& s) {
    return cf::CoefficientVector(parse_int_list(s, "coefficient"));
}

// One registered option: the CLI11 handle plus how to pull the same key
// from a config file.
struct BoundOption {
    CLI::Option* option;
    std::string key;
    std::function<void(const json&)> apply;
};

std::string json_to_flag_string(const json& v) {
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_array()) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i)
                out += ',';
            out += v[i].is_string() ? v[i].get<std::string>() : v[i].dump();
        }
        return out;
    }
    return v.dump();
}

class Command {
  public:
    Command(CLI::App& app, const std::string& name, const std::string& desc)
        : cmd_(app.add_subcommand(name, desc)), name_(name) {
        cmd_->set_help_flag("--help", "print usage");  // frees -h / --h
    }

    CLI::App* cli() { return cmd_; }
    const std::string& name() const { return name_; }

    void bind(const std::string& flag, std::string& target, const std::string& desc) {
        auto* o = cmd_->add_option("--" + flag, target, desc);
        bound_.push_back({o, flag, [&target](const json& v) { target = json_to_flag_string(v); }});
    }

    void bind_flag(const std::string& flag, bool& target, const std::string& desc) {
        auto* o = cmd_->add_flag("--" + flag, target, desc);
        bound_.push_back({o, flag, [&target](const json& v) { target = v.get<bool>(); }});
    }

    // Explicit command-line values win over config-file values.
    void merge_config(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw std::invalid_argument("cannot open config file '" + path + "'");
        json doc;
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw std::invalid_argument("config file '" + path + "': " + e.what());
        }
        const json& cfg = doc.is_object() && doc.contains("config") ? doc["config"] : doc;
        if (!cfg.is_object())
            throw std::invalid_argument("config must be a flat JSON object");
        for (auto& b : bound_) {
            if (b.option->count() == 0 && cfg.contains(b.key))
                b.apply(cfg[b.key]);
        }
    }

    // Echo of the effective configuration, sufficient to reproduce the run.
    json config_echo(const RawOpts& o, bool campaign) const {
        json c = json::object();
        auto put = [&c](const std::string& k, const std::string& v) {
            if (!v.empty())
                c[k] = v;
        };
        put("h", o.h);
        put("a", o.a);
        if (campaign) {
            put("users", o.users);
            put("relays", o.relays);
            put("trials", o.trials);
            put("seed", o.seed);
            put("group-size", o.group_size);
            put("slots", o.slots);
            put("norm-sq", o.norm_sq);
        }
        put("power", o.power);
        put("solver", o.solver);
        put("format", o.format);
        return c;
    }

  private:
    CLI::App* cmd_;
    std::string name_;
    std::vector<BoundOption> bound_;
};

int env_thread_cap() {
    const char* env = std::getenv("CF_SIM_THREADS");
    if (env == nullptr || *env == '\0')
        return 0;
    return static_cast<int>(parse_int(env, "CF_SIM_THREADS"));
}

void emit(const cf::OutputTable& table, const RawOpts& o) {
    std::string text;
    if (o.format == "csv")
        text = cf::to_csv(table);
    else if (o.format == "json")
        text = cf::to_json(table);
    else
        throw std::invalid_argument("unknown format '" + o.format + "' (expected csv|json)");
    if (o.output.empty()) {
        std::cout << text;
        std::cout.flush();
    } else {
        std::ofstream out(o.output, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot open output file '" + o.output + "'");
        out << text;
    }
}

cf::RunOptions run_options(const RawOpts& o) {
    cf::RunOptions opts;
    opts.threads = env_thread_cap();
    if (o.progress)
        opts.progress = [](const std::string& msg) { std::cerr << msg << std::endl; };
    return opts;
}

json metadata_for(const Command& c, const RawOpts& o, bool campaign) {
    json meta;
    meta["command"] = c.name();
    meta["version"] = cf::kVersion;
    meta["config"] = c.config_echo(o, campaign);
    return meta;
}

// ---------------------------------------------------------------- commands

int cmd_rate(const Command& c, const RawOpts& o) {
    const cf::ChannelVector h = parse_channel(o.h);
    const cf::CoefficientVector a = parse_coefficients(o.a);
    const cf::Power P(parse_real(o.power, "power"));
    cf::OutputTable t;
    t.header = {"alpha_mmse", "f", "rate_bits"};
    t.rows.push_back({cf::alpha_mmse(h, a, P), cf::quadratic_form(h, a, P),
                      cf::computation_rate(h, a, P).bits});
    t.metadata = metadata_for(c, o, false);
    emit(t, o);
    return 0;
}

int cmd_search(const Command& c, const RawOpts& o) {
    const cf::ChannelVector h = parse_channel(o.h);
    const cf::Power P(parse_real(o.power, "power"));
    const cf::SolverPolicy policy = cf::solver_policy_from_string(o.solver);
    const cf::SearchResult res = cf::solve(h, P, policy);
    std::string a_text;
    for (std::size_t i = 0; i < res.a_opt.size(); ++i) {
        if (i)
            a_text += ' ';
        a_text += std::to_string(res.a_opt[i]);
    }
    cf::OutputTable t;
    t.header = {"a_opt", "f", "rate_bits", "candidates_examined", "unit_vector", "solver"};
    t.rows.push_back({a_text, res.f_value, res.rate.bits, res.candidates_examined,
                      cf::is_unit_vector(res.a_opt), cf::to_string(res.solver)});
    t.metadata = metadata_for(c, o, false);
    emit(t, o);
    return 0;
}

cf::ExperimentConfig campaign_config(const RawOpts& o, bool need_users) {
    cf::ExperimentConfig cfg;
    if (!o.users.empty())
        cfg.users_grid = parse_int_list(o.users, "users");
    else if (need_users)
        throw std::invalid_argument("missing --users");
    cfg.relays = static_cast<int>(parse_int(o.relays, "relays"));
    cfg.powers = parse_real_list(o.power, "power");
    cfg.trials = parse_int(o.trials, "trials");
    cfg.seed = parse_u64(o.seed, "seed");
    cfg.solver = cf::solver_policy_from_string(o.solver);
    if (!o.group_size.empty())
        cfg.group_size = static_cast<int>(parse_int(o.group_size, "group-size"));
    if (!o.slots.empty())
        cfg.slots = parse_int(o.slots, "slots");
    if (!o.norm_sq.empty())
        cfg.norm_sq_grid = parse_int_list(o.norm_sq, "norm-sq");
    return cfg;
}

int cmd_prob_unit(const Command& c, const RawOpts& o) {
    const auto cfg = campaign_config(o, true);
    const auto rows = cf::run_unit_vector_probability(cfg, run_options(o));
    emit(cf::table_from_rows(rows, metadata_for(c, o, true)), o);
    return 0;
}

int cmd_sumrate(const Command& c, const RawOpts& o) {
    const auto cfg = campaign_config(o, true);
    const auto rows = cf::run_sum_rate_vs_users(cfg, run_options(o));
    emit(cf::table_from_rows(rows, metadata_for(c, o, true)), o);
    return 0;
}

int cmd_schedule(const Command& c, const RawOpts& o) {
    const auto cfg = campaign_config(o, true);
    const auto rows = cf::run_scheduled_sum_rate(cfg, run_options(o));
    emit(cf::table_from_rows(rows, metadata_for(c, o, true)), o);
    return 0;
}

int cmd_bounds(const Command& c, const RawOpts& o) {
    const auto cfg = campaign_config(o, false);
    const auto rows = cf::run_bounds_vs_power(cfg, run_options(o));
    emit(cf::table_from_rows(rows, metadata_for(c, o, true)), o);
    return 0;
}

// ------------------------------------------------------------- validation

struct Check {
    std::string name;
    double value;
    double threshold;
    bool pass;
};

int cmd_validate(const Command& c, const RawOpts& o) {
    const std::uint64_t seed = parse_u64(o.seed, "seed");
    const std::int64_t quick_trials = parse_int(o.trials, "trials");
    std::vector<Check> checks;
    auto add = [&](const std::string& name, double value, double threshold) {
        checks.push_back({name, value, threshold, value <= threshold});
    };

    // deterministic replay
    {
        cf::RngStream s1 = cf::derive_trial_stream(seed, 7);
        cf::RngStream s2 = cf::derive_trial_stream(seed, 7);
        double diff = 0.0;
        for (int i = 0; i < 64; ++i)
            diff = std::max(diff, std::abs(s1.next_normal() - s2.next_normal()));
        add("rng_replay_max_diff", diff, 0.0);
    }

    // sampler moments and normality
    {
        cf::RngStream s = cf::derive_trial_stream(seed, 0);
        const std::int64_t n = 100000;
        std::vector<double> xs(n);
        for (double& x : xs)
            x = s.next_normal();
        double mean = 0.0;
        for (double x : xs)
            mean += x;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double x : xs)
            var += (x - mean) * (x - mean);
        var /= static_cast<double>(n - 1);
        add("rng_abs_mean", std::abs(mean), 0.02);
        add("rng_var_err", std::abs(var - 1.0), 0.03);
        xs.resize(10000);
        const double d = cf::ks_statistic(
            xs, [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); });
        add("rng_normal_ks", d, cf::ks_critical_001(10000));
    }

    // algebraic identities on random instances
    {
        double worst_form = 0.0, worst_rate = 0.0, worst_mmse = 0.0;
        const double powers[] = {1.0, 10.0, 100.0};
        for (std::int64_t t = 0; t < quick_trials; ++t) {
            cf::RngStream rng = cf::derive_trial_stream(seed ^ 0x11, t);
            const int L = 2 + static_cast<int>(rng.next_u64() % 7);
            const cf::ChannelVector h = cf::sample_channel(L, rng);
            std::vector<int> av(L, 0);
            bool nz = false;
            while (!nz)
                for (int& x : av) {
                    x = static_cast<int>(rng.next_u64() % 11) - 5;
                    nz = nz || x != 0;
                }
            const cf::CoefficientVector a{av};
            const cf::Power P(powers[t % 3]);
            const double f1 = cf::quadratic_form(h, a, P);
            const double f2 = cf::quadratic_form_pairwise(h, a, P);
            const double f3 = cf::GramMatrix(h, P).quad(a);
            worst_form = std::max(worst_form,
                                  (std::max({f1, f2, f3}) - std::min({f1, f2, f3})) / f1);
            worst_rate = std::max(worst_rate, std::abs(cf::computation_rate(h, a, P).bits -
                                                       cf::rate_from_f(f1, h, P).bits));
            const double alpha = cf::alpha_mmse(h, a, P);
            const double r0 = cf::computation_rate_alpha(h, a, P, alpha).bits;
            const double rp = cf::computation_rate_alpha(h, a, P, alpha * 1.001).bits;
            const double rm = cf::computation_rate_alpha(h, a, P, alpha * 0.999).bits;
            worst_mmse = std::max(worst_mmse, std::max(rp, rm) - r0);
        }
        add("form_equivalence_rel", worst_form, 1e-9);
        add("rate_identity_abs", worst_rate, 1e-9);
        add("mmse_optimality_gain", worst_mmse, 1e-12);
    }

    // solver agreement and the Lemma-4 / cardinality invariants
    {
        double worst = 0.0;
        std::int64_t lemma4_violations = 0, card_violations = 0;
        std::int64_t t = 0;
        for (int L : {2, 3, 4}) {
            for (double Pv : {1.0, 10.0}) {
                for (int rep = 0; rep < 50; ++rep, ++t) {
                    cf::RngStream rng = cf::derive_trial_stream(seed ^ 0x22, t);
                    const cf::ChannelVector h = cf::sample_channel(L, rng);
                    const cf::Power P(Pv);
                    const auto ex = cf::exhaustive_search(h, P);
                    const auto cand = cf::candidate_search(h, P);
                    worst = std::max(worst, std::abs(ex.rate.bits - cand.rate.bits));
                    std::size_t strongest = 0;
                    for (std::size_t i = 1; i < h.size(); ++i)
                        if (std::abs(h[i]) > std::abs(h[strongest]))
                            strongest = i;
                    for (const auto* res : {&ex, &cand}) {
                        int max_mag = 0;
                        for (int x : res->a_opt.entries())
                            max_mag = std::max(max_mag, std::abs(x));
                        if (std::abs(res->a_opt[strongest]) != max_mag)
                            ++lemma4_violations;
                    }
                    if (cand.candidates_examined >
                        static_cast<std::uint64_t>(cf::cardinality_bound(L, Pv, h.norm_sq())))
                        ++card_violations;
                }
            }
        }
        add("solver_rate_diff", worst, 1e-9);
        add("lemma4_violations", static_cast<double>(lemma4_violations), 0.0);
        add("cardinality_violations", static_cast<double>(card_violations), 0.0);
    }

    // corollary-1 identity and the arcsine closed form
    {
        double worst = 0.0;
        for (int s : {2, 3, 4, 9})
            for (int L = 4; L <= 64; ++L) {
                const double lhs = cf::bound_corollary1(s, L).raw;
                const double rhs = std::pow(1.0 / s, (L - 1) / 2.0 - 1.0);
                worst = std::max(worst, std::abs(lhs - rhs) / rhs);
            }
        add("cor1_identity_rel", worst, 1e-12);

        double worst_arc = 0.0;
        for (int i = 1; i < 1000; ++i) {
            const double x = i / 1000.0;
            worst_arc = std::max(worst_arc, std::abs(cf::reg_inc_beta(x, 0.5, 0.5) -
                                                     2.0 / std::numbers::pi *
                                                         std::asin(std::sqrt(x))));
        }
        add("ibeta_arcsine_abs", worst_arc, 1e-9);
    }

    // squared-cosine law (Lemma 2)
    for (int L : {4, 16}) {
        cf::RngStream rng = cf::derive_trial_stream(seed ^ 0x33, L);
        const auto a = cf::coeff_with_norm_sq(2, L);
        const double d = cf::ks_test_cos2(L, 10000, a, rng);
        add("cos2_ks_L" + std::to_string(L), d, cf::ks_critical_001(10000));
    }

    // round-robin fairness over one full cycle
    {
        int worst_spread = 0;
        for (auto [L, k] : {std::pair{5, 3}, {6, 3}, {7, 4}}) {
            const int cycle = L;  // k slots advance by k users; L slots close the cycle
            std::vector<int> counts(L, 0);
            for (int slot = 0; slot < cycle; ++slot)
                for (int u : cf::round_robin_schedule(L, k, slot))
                    ++counts[u];
            const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
            worst_spread = std::max(worst_spread, *hi - *lo);
        }
        add("rr_fairness_spread", static_cast<double>(worst_spread), 0.0);
    }

    cf::OutputTable t;
    t.header = {"check", "value", "threshold", "pass"};
    bool all_pass = true;
    for (const Check& ch : checks) {
        t.rows.push_back({ch.name, ch.value, ch.threshold, ch.pass});
        all_pass = all_pass && ch.pass;
    }
    t.metadata = metadata_for(c, o, true);
    emit(t, o);
    if (!all_pass) {
        for (const Check& ch : checks)
            if (!ch.pass)
                std::cerr << "validation failed: " << ch.name << " = " << ch.value
                          << " (threshold " << ch.threshold << ")\n";
        return 4;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compute-and-forward rate and scheduling simulator"};
    app.set_help_flag("--help", "print usage");
    app.require_subcommand(1);

    RawOpts o;
    std::vector<std::unique_ptr<Command>> commands;
    std::map<const CLI::App*, std::function<int()>> dispatch;

    auto common = [&](Command& c, bool campaign) {
        if (campaign) {
            c.bind("trials", o.trials, "Monte Carlo trials");
            c.bind("seed", o.seed, "master RNG seed");
        }
        c.bind("solver", o.solver, "coefficient solver: exhaustive|candidate|auto");
        c.bind("format", o.format, "output format: csv|json");
        c.bind("output", o.output, "output path (default stdout)");
        c.bind_flag("progress", o.progress, "progress messages on stderr");
        c.cli()->add_option("--config", o.config_path, "JSON config file (flags override it)");
    };

    auto make = [&](const std::string& name, const std::string& desc,
                    std::function<int(const Command&, const RawOpts&)> fn, bool campaign) {
        commands.push_back(std::make_unique<Command>(app, name, desc));
        Command& c = *commands.back();
        common(c, campaign);
        dispatch[c.cli()] = [&c, fn = std::move(fn), &o] { return fn(c, o); };
        return &c;
    };

    {
        Command* c = make("rate", "computation rate of a given (h, a, P)", cmd_rate, false);
        c->bind("h", o.h, "channel gains, comma separated");
        c->bind("a", o.a, "integer coefficients, comma separated");
        c->bind("power", o.power, "transmit power (linear)");
    }
    {
        Command* c = make("search", "rate-maximizing coefficient vector", cmd_search, false);
        c->bind("h", o.h, "channel gains, comma separated");
        c->bind("power", o.power, "transmit power (linear)");
    }
    {
        Command* c = make("prob-unit", "degeneracy probability campaign", cmd_prob_unit, true);
        c->bind("users", o.users, "L values, comma separated");
        c->bind("power", o.power, "P values, comma separated");
        c->bind("norm-sq", o.norm_sq, "|a|^2 values for the bound curves");
    }
    {
        Command* c = make("sumrate", "sum rate vs number of users", cmd_sumrate, true);
        c->bind("users", o.users, "L values, comma separated");
        c->bind("relays", o.relays, "number of relays M");
        c->bind("power", o.power, "P values, comma separated");
    }
    {
        Command* c = make("schedule", "Round-Robin scheduled sum rate", cmd_schedule, true);
        c->bind("users", o.users, "population sizes L, comma separated");
        c->bind("relays", o.relays, "number of relays M");
        c->bind("group-size", o.group_size, "scheduled users per slot k");
        c->bind("slots", o.slots, "scheduling horizon");
        c->bind("power", o.power, "P values, comma separated");
    }
    {
        Command* c = make("bounds", "sum rate vs power with analytic bounds", cmd_bounds, true);
        c->bind("relays", o.relays, "number of relays M (square system)");
        c->bind("power", o.power, "P values, comma separated (P >= 3)");
    }
    {
        Command* c = make("validate", "statistical and identity self-checks", cmd_validate, true);
        (void)c;
    }

    // defaults that only apply when neither flag nor config provides a value
    const std::map<std::string, std::map<std::string, std::string>> defaults = {
        {"prob-unit",
         {{"users", "4,8,16,32"}, {"power", "10"}, {"trials", "10000"}, {"norm-sq", "2,4,9"}}},
        {"sumrate",
         {{"users", "2,3,4,5,6,8,10,12,16,24,32,48,64"},
          {"relays", "4"},
          {"power", "10"},
          {"trials", "1000"}}},
        {"schedule",
         {{"users", "120"},
          {"relays", "3"},
          {"group-size", "3"},
          {"slots", "10000"},
          {"power", "10"},
          {"trials", "1000"}}},
        {"bounds", {{"relays", "4"}, {"power", "10,100"}, {"trials", "1000"}}},
        {"validate", {{"trials", "2000"}}},
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        for (auto& c : commands) {
            if (!c->cli()->parsed())
                continue;
            if (!o.config_path.empty())
                c->merge_config(o.config_path);
            if (auto it = defaults.find(c->name()); it != defaults.end()) {
                auto maybe = [&](std::string& field, const char* key) {
                    if (field.empty() && it->second.count(key))
                        field = it->second.at(key);
                };
                maybe(o.users, "users");
                maybe(o.relays, "relays");
                maybe(o.power, "power");
                maybe(o.trials, "trials");
                maybe(o.group_size, "group-size");
                maybe(o.slots, "slots");
                maybe(o.norm_sq, "norm-sq");
            }
            if (o.seed.empty())
                o.seed = "1";
            if (o.relays.empty())
                o.relays = "1";
            if (o.trials.empty())
                o.trials = "1000";
            return dispatch.at(c->cli())();
        }
        std::cerr << "no subcommand given\n";
        return 2;
    } catch (const cf::BudgetExceededError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
