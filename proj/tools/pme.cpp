#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli_io.hpp"
#include "pme/errors.hpp"
#include "pme/mac_exponents.hpp"
#include "pme/mac_region.hpp"
#include "pme/parallel.hpp"
#include "pme/simplex_sim.hpp"
#include "pme/single_user.hpp"
#include "pme/zero_rate.hpp"

#ifndef PME_VERSION
#define PME_VERSION "0.0.0"
#endif

using namespace pme;
using cli::Table;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNonConvergence = 3;

std::int64_t to_int(const std::string& s, const char* what) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != s.size()) throw DomainError(std::string(what) + ": not an integer: '" + s + "'");
    return v;
}

double to_real(const std::string& s, const char* what) {
    try {
        return cli::parse_level(s);
    } catch (const DomainError&) {
        throw DomainError(std::string(what) + ": not a number: '" + s + "'");
    }
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) out.push_back(item);
    return out;
}

std::string utc_now() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

double to_db(double v) { return v > 0.0 ? 10.0 * std::log10(v) : -INFINITY; }

// One subcommand: string-valued options (kept verbatim for the manifest) and a runner.
struct Command {
    std::string name;
    std::string schema;
    std::vector<std::pair<std::string, std::string>> opts;  // long name -> value, declaration order
    std::function<Table(Command&)> run;
    std::vector<std::uint64_t> seeds;

    const std::string& get(const std::string& key) const {
        for (const auto& [k, v] : opts)
            if (k == key) return v;
        throw std::logic_error("unknown option " + key);
    }
};

Table run_zero_rate(Command& c) {
    const auto m = to_int(c.get("m"), "--m");
    if (m < 1) throw DomainError("--m must be >= 1");
    const double mu = to_real(c.get("mu"), "--mu");
    const auto grid = cli::parse_grid(c.get("e-grid"));
    Table t;
    t.columns = {"e_over_n", "e_db", "shannon_zr", "polyanskiy_zr", "simplex_exact"};
    t.rows.resize(grid.size());
    parallel_for(grid.size(), [&](std::size_t k) {
        ChannelSpec ch{grid[k], {}};
        double simplex = m >= 2 ? simplex_error_prob(ch, static_cast<int>(m), sim::Integral{}) : 0.0;
        t.rows[k] = {grid[k], to_db(grid[k]), shannon_zr(ch, m), polyanskiy_zr(ch, m, mu), simplex};
    });
    t.meta = {{"m", std::to_string(m)}, {"mu", cli::format_number(mu)}};
    return t;
}

struct SimulateSpec {
    std::uint64_t trials = 0;
    std::uint64_t seed = 1;
    unsigned streams = 16;
};

SimulateSpec parse_simulate(const std::string& s) {
    SimulateSpec out;
    for (const auto& item : split_list(s)) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw DomainError("--simulate expects key=value pairs");
        std::string k = item.substr(0, eq), v = item.substr(eq + 1);
        if (k == "trials")
            out.trials = static_cast<std::uint64_t>(to_int(v, "trials"));
        else if (k == "seed")
            out.seed = static_cast<std::uint64_t>(to_int(v, "seed"));
        else if (k == "streams")
            out.streams = static_cast<unsigned>(to_int(v, "streams"));
        else
            throw DomainError("--simulate: unknown key '" + k + "'");
    }
    if (out.trials == 0) throw DomainError("--simulate needs trials > 0");
    return out;
}

Table run_single_mse(Command& c) {
    const auto grid = cli::parse_grid(c.get("e-grid"));
    const double mu = to_real(c.get("mu"), "--mu");
    const auto m = to_int(c.get("m"), "--m");
    const TruncationPolicy trunc{to_real(c.get("tail-tol"), "--tail-tol"), 1'000'000};
    const bool simulate = !c.get("simulate").empty();
    SimulateSpec spec;
    if (simulate) {
        spec = parse_simulate(c.get("simulate"));
        c.seeds = {spec.seed};
    }
    Table t;
    t.columns = {"e_over_n", "e_db", "improved_shannon", "improved_polyanskiy", "legacy", "goblick_rd", "conjectured"};
    if (simulate) {
        t.columns.push_back("simulated");
        t.columns.push_back("simulated_stderr");
    }
    t.rows.resize(grid.size());
    parallel_for(grid.size(), [&](std::size_t k) {
        ChannelSpec ch{grid[k], {}};
        t.rows[k] = {grid[k],
                     to_db(grid[k]),
                     mse_lower_bound(ch, zr::Shannon{}, trunc).value,
                     mse_lower_bound(ch, zr::Polyanskiy{mu}, trunc).value,
                     legacy_mse_lower_bound(ch, zr::Shannon{}, trunc).value,
                     goblick_rd_bound(ch),
                     conjectured_mse_bound(ch, trunc).value};
    });
    if (simulate) {
        // The simulator parallelises over its own streams.
        for (std::size_t k = 0; k < grid.size(); ++k) {
            auto r = simulate_quantize_simplex({static_cast<int>(m), grid[k]}, {spec.trials, spec.seed, spec.streams});
            t.rows[k].push_back(r.mse);
            t.rows[k].push_back(r.std_error);
        }
    }
    t.meta = {{"mu", cli::format_number(mu)}, {"m", std::to_string(m)}, {"conjectured", "simplex error probability, conditional on the weak simplex conjecture"}};
    return t;
}

Table run_single_exponent(Command& c) {
    const auto grid = cli::parse_grid(c.get("snr-grid"));
    Table t;
    t.columns = {"snr", "snr_db", "sp_value", "sp_argmin", "sp_numeric_argmin", "abl_value", "abl_argmin"};
    t.rows.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        auto sp = mse_exponent_bound(grid[k], ReliabilitySelector{ReliabilityKind::SpherePacking});
        auto abl = mse_exponent_bound(grid[k], ReliabilitySelector{ReliabilityKind::ABL});
        t.rows[k] = {grid[k], to_db(grid[k]), sp.value, sp.argmin, sp.numeric_argmin, abl.value, abl.argmin};
    }
    return t;
}

Table run_mac_region(Command& c) {
    std::vector<MacSpec> macs;
    if (!c.get("e1").empty() || !c.get("e2").empty()) {
        double e = to_real(c.get("snr"), "--snr");
        double e1 = c.get("e1").empty() ? e : to_real(c.get("e1"), "--e1");
        double e2 = c.get("e2").empty() ? e : to_real(c.get("e2"), "--e2");
        macs.push_back({e1, e2});
    } else {
        for (double e : cli::parse_grid(c.get("snr"))) macs.push_back({e, e});
    }
    for (const auto& mac : macs) mac.validate();
    const double mu = to_real(c.get("mu"), "--mu");
    const auto mse2 = cli::parse_grid(c.get("mse2-grid"));
    const auto points = to_int(c.get("theta-points"), "--theta-points");
    const double theta_min = to_real(c.get("theta-min"), "--theta-min");
    const auto max_den = to_int(c.get("theta-max-denominator"), "--theta-max-denominator");
    const auto max_rec = to_int(c.get("theta-max-reciprocal"), "--theta-max-reciprocal");
    if (points < 2) throw DomainError("--theta-points must be >= 2");
    const auto grid = ThetaGrid::log_with_rationals(static_cast<int>(points), theta_min, static_cast<int>(max_den),
                                                    static_cast<int>(max_rec));

    Table t;
    t.columns = {"e1_over_n", "e2_over_n", "mse2"};
    t.meta = {{"theta_points", std::to_string(grid.values.size())}, {"theta_min", cli::format_number(theta_min)},
              {"mu", cli::format_number(mu)}};
    const std::vector<std::pair<std::string, MacZrSelector>> kinds = {{"shannon", zr::ShannonMac{}},
                                                                      {"polyanskiy", zr::PolyanskiyMac{mu}}};
    for (const auto& [name, sel] : kinds)
        t.columns.insert(t.columns.end(), {"mse1_" + name, "hull_" + name, "envelope_" + name, "wall_" + name});
    for (const auto& mac : macs) {
        std::vector<std::vector<double>> block(mse2.size());
        for (std::size_t k = 0; k < mse2.size(); ++k) block[k] = {mac.e1_over_n, mac.e2_over_n, mse2[k]};
        for (const auto& [name, sel] : kinds) {
            auto curve = trace_region(mac, sel, mse2, grid, true);
            const double wall = curve.meta.at("single_user_wall");
            for (std::size_t k = 0; k < mse2.size(); ++k)
                block[k].insert(block[k].end(),
                                {curve.points[k].y, curve.points[k].flag ? 1.0 : 0.0, curve.envelope[k], wall});
        }
        for (auto& row : block) t.rows.push_back(std::move(row));
    }
    return t;
}

ExponentBackend backend_from(const std::string& s) {
    if (s == "divergence") return ExponentBackend::Divergence;
    if (s == "sphere_packing") return ExponentBackend::SpherePacking;
    if (s == "abl") return ExponentBackend::ABL;
    throw DomainError("unknown back-end '" + s + "' (divergence, sphere_packing, abl)");
}

Table run_mac_exponents(Command& c) {
    const auto snrs = cli::parse_grid(c.get("snr"));
    const auto alpha_points = to_int(c.get("alpha-points"), "--alpha-points");
    std::vector<ExponentBackend> backends;
    for (const auto& b : split_list(c.get("backends"))) backends.push_back(backend_from(b));
    if (backends.empty()) throw DomainError("--backends is empty");
    AlphaPolicy pol{0.0, static_cast<int>(alpha_points)};
    pol.validate();

    Table t;
    t.columns = {"snr", "eps2"};
    for (auto b : backends) {
        std::string n = backend_name(b);
        t.columns.insert(t.columns.end(), {"eps1_" + n, "region_" + n, "infeasible_" + n, "f1_" + n});
    }
    for (double a : snrs) {
        std::vector<double> eps;
        if (c.get("eps-grid") == "auto") {
            double top = 1.02 * ExponentModel(a, ExponentBackend::Divergence).f1();
            for (int k = 0; k <= 200; ++k) eps.push_back(top * k / 200.0);
        } else {
            eps = cli::parse_grid(c.get("eps-grid"));
        }
        std::vector<std::vector<double>> block(eps.size());
        for (std::size_t k = 0; k < eps.size(); ++k) block[k] = {a, eps[k]};
        for (auto b : backends) {
            auto curve = trace_exponent_region(a, b, eps, pol);
            const double f1 = curve.meta.at("f1");
            for (std::size_t k = 0; k < eps.size(); ++k)
                block[k].insert(block[k].end(),
                                {curve.points[k].y, curve.envelope[k], curve.points[k].flag ? 1.0 : 0.0, f1});
        }
        for (auto& row : block) t.rows.push_back(std::move(row));
    }
    return t;
}

Table run_simulate(Command& c) {
    const auto m = to_int(c.get("m"), "--m");
    const auto grid = cli::parse_grid(c.get("e-grid"));
    McConfig mc{static_cast<std::uint64_t>(to_int(c.get("trials"), "--trials")),
                static_cast<std::uint64_t>(to_int(c.get("seed"), "--seed")),
                static_cast<unsigned>(to_int(c.get("streams"), "--streams"))};
    const auto points = to_int(c.get("exceedance-points"), "--exceedance-points");
    c.seeds = {mc.seed};
    Table t;
    t.columns = {"e_over_n", "m", "mse", "std_error", "trials", "identity_mse", "delta", "exceedance"};
    for (double e : grid) {
        auto r = simulate_quantize_simplex({static_cast<int>(m), e}, mc);
        double identity = r.exceedance.second_moment();
        auto curve = r.exceedance.resampled(static_cast<int>(points));
        for (std::size_t k = 0; k < curve.delta.size(); ++k)
            t.rows.push_back({e, static_cast<double>(m), r.mse, r.std_error, static_cast<double>(r.trials), identity,
                              curve.delta[k], curve.prob[k]});
    }
    return t;
}

int emit(const Command& c, const Table& table, const std::string& out, const std::string& format) {
    cli::RunManifest man;
    man.command = c.name;
    man.version = PME_VERSION;
    man.seeds = c.seeds;
    man.timestamp = utc_now();
    man.params = c.opts;
    man.params.emplace_back("format", format);
    man.params.emplace_back("out", out);
    Table t = table;
    t.schema = c.schema;
    auto write = [&](std::ostream& os) {
        if (format == "json")
            cli::write_json(os, t, man);
        else
            cli::write_csv(os, t, man);
    };
    if (out == "-") {
        write(std::cout);
        return 0;
    }
    std::ofstream os(out);
    if (!os) throw DomainError("cannot write " + out);
    write(os);
    std::ofstream ms(out + ".manifest");
    if (!ms) throw DomainError("cannot write " + out + ".manifest");
    ms << man.to_text();
    return 0;
}

struct Cli {
    CLI::App app{"Bounds on parameter modulation-estimation over Gaussian channels"};
    std::vector<std::unique_ptr<Command>> commands;
    std::string out = "-", format = "csv", recipe, recipe_out;
    CLI::App* recipe_cmd = nullptr;

    Command& add(const std::string& name, const std::string& schema, const std::string& help,
                 std::vector<std::tuple<std::string, std::string, std::string>> options,
                 std::function<Table(Command&)> run) {
        auto cmd = std::make_unique<Command>();
        cmd->name = name;
        cmd->schema = schema;
        cmd->run = std::move(run);
        for (auto& [opt, def, h] : options) cmd->opts.emplace_back(opt, def);
        auto* sub = app.add_subcommand(name, help);
        for (std::size_t k = 0; k < options.size(); ++k) {
            auto& [opt, def, h] = options[k];
            sub->add_option("--" + opt, cmd->opts[k].second, h)->capture_default_str();
        }
        sub->add_option("--out", out, "Output path, '-' for stdout")->capture_default_str();
        sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
        commands.push_back(std::move(cmd));
        return *commands.back();
    }

    Cli() {
        app.require_subcommand(1);
        app.set_version_flag("--version", PME_VERSION);
        add("zero-rate", "pme.zero_rate/1", "Zero-rate error-probability bounds against the exact simplex",
            {{"m", "256", "Signal-set size"}, {"e-grid", "0:0.5:100", "Energy grid (a:step:b, list, log:a:b:n; 'db' suffix)"},
             {"mu", "1e-3", "Polyanskiy slack"}},
            run_zero_rate);
        add("single-mse", "pme.single_mse/1", "Single-user MSE lower bounds, optional simulated scheme",
            {{"e-grid", "0:1:20", "Energy grid"}, {"mu", "1e-3", "Polyanskiy slack"},
             {"m", "256", "Quantizer levels of the simulated scheme"},
             {"tail-tol", "1e-9", "Relative series truncation tolerance"},
             {"simulate", "", "trials=N,seed=S[,streams=K]"}},
            run_single_mse);
        add("single-exponent", "pme.single_exponent/1", "Single-user MSE exponent bounds min_R[2R+E(R)]",
            {{"snr-grid", "1,10", "SNR grid"}}, run_single_exponent);
        add("mac-region", "pme.mac_region/1", "Two-user MSE region outer bounds",
            {{"snr", "10", "SNR of both users"}, {"e1", "", "User-1 SNR (overrides --snr)"},
             {"e2", "", "User-2 SNR (overrides --snr)"}, {"mse2-grid", "log:1e-8:1e-1:100", "MSE_2 grid"},
             {"theta-points", "512", "Log-spaced theta points"}, {"theta-min", "1e-3", "Smallest theta"},
             {"theta-max-denominator", "24", "Add theta = p/q for q up to this"},
             {"theta-max-reciprocal", "128", "Add theta = 1/k for k up to this"},
             {"mu", "1e-3", "Polyanskiy slack"}},
            run_mac_region);
        add("mac-exponents", "pme.mac_exponents/1", "Two-user MSE exponent region upper bounds",
            {{"snr", "1", "SNR of both users"}, {"eps-grid", "auto", "eps2 grid or 'auto'"},
             {"alpha-points", "1024", "Alpha grid for root bracketing"},
             {"backends", "divergence,sphere_packing,abl", "Comma-separated back-ends"}},
            run_mac_exponents);
        add("simulate", "pme.simulate/1", "Monte-Carlo quantize-and-simplex scheme",
            {{"m", "256", "Quantizer levels"}, {"e-grid", "10", "Energy grid"}, {"trials", "1000000", "Trials per energy"},
             {"seed", "1", "Base seed"}, {"streams", "16", "RNG streams"},
             {"exceedance-points", "65", "Exceedance curve points"}},
            run_simulate);
        recipe_cmd = app.add_subcommand("recipe", "Run a recipe or manifest file");
        recipe_cmd->add_option("file", recipe, "Recipe path")->required();
        recipe_cmd->add_option("--out", recipe_out, "Override the recorded output path");
    }
};

int run(int argc, char** argv);

int run_recipe(const std::string& path, const std::string& out_override) {
    auto doc = cli::parse_key_value_file(path);
    auto it = doc.top.find("command");
    if (it == doc.top.end()) throw DomainError(path + ": missing 'command'");
    std::vector<std::string> args = {"pme", it->second};
    if (auto s = doc.sections.find("args"); s != doc.sections.end())
        for (const auto& [k, v] : s->second) {
            if (k == "out" && !out_override.empty()) continue;
            args.push_back("--" + k);
            args.push_back(v);
        }
    if (!out_override.empty()) {
        args.push_back("--out");
        args.push_back(out_override);
    }
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, char** argv) {
    Cli cli;
    try {
        cli.app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = cli.app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }
    if (cli.recipe_cmd->parsed()) return run_recipe(cli.recipe, cli.recipe_out);
    for (auto& cmd : cli.commands) {
        if (!cli.app.got_subcommand(cmd->name)) continue;
        Table t = cmd->run(*cmd);
        return emit(*cmd, t, cli.out, cli.format);
    }
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const NonConvergence& e) {
        std::cerr << "non-convergence in " << e.module() << ": " << e.what() << " (best estimate "
                  << cli::format_number(e.best_estimate()) << ", error bound " << cli::format_number(e.error_bound())
                  << ")\n";
        return kExitNonConvergence;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const BracketError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
