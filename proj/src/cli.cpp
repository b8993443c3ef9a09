#include "idmfit/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "idmfit/data_model.hpp"
#include "idmfit/estimation.hpp"
#include "idmfit/lifetable.hpp"
#include "idmfit/plugin.hpp"
#include "idmfit/simulator.hpp"

namespace idmfit::cli {

void write_atomically(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f << content;
        f.flush();
        if (!f) throw std::runtime_error("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("cannot move output into " + path + ": " + ec.message());
    }
}

namespace {

struct Common {
    double a0 = 20.0;
    double p0 = 0.0;
    double level = 0.95;
    double step = 0.1;
    int threads = 1;
    std::string json_path;
    std::string curve_path;
};

/// Files produced by a command, written only after every computation succeeded.
struct Outputs {
    std::vector<std::pair<std::string, std::string>> files;
    std::string stdout_text;

    void emit(const std::string& path, std::string content) {
        if (path.empty()) {
            stdout_text += content;
            if (!content.empty() && content.back() != '\n') stdout_text += '\n';
        } else {
            files.emplace_back(path, std::move(content));
        }
    }
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

std::string curve_csv(const std::vector<IncidencePoint>& curve) {
    std::string text = "age,incidence,ci_lo,ci_hi\n";
    for (const auto& pt : curve)
        text += fmt(pt.age) + ',' + fmt(pt.incidence) + ',' + fmt(pt.ci.lo) + ',' +
                fmt(pt.ci.hi) + '\n';
    return text;
}

FitOptions fit_options(const Common& c) {
    FitOptions o;
    o.solver.step = c.step;
    o.threads = c.threads;
    return o;
}

void add_common(CLI::App* cmd, Common& c, bool initial_condition, bool curve) {
    if (initial_condition) {
        cmd->add_option("--a0", c.a0, "Initial age")->capture_default_str();
        cmd->add_option("--p0", c.p0, "Prevalence at the initial age")
            ->capture_default_str()
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--step", c.step, "Quadrature / ODE base step in years")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
    }
    cmd->add_option("--level", c.level, "Confidence level")
        ->capture_default_str()
        ->check(CLI::Range(0.5, 0.9999));
    cmd->add_option("--json", c.json_path, "Write the fit as JSON here (default: stdout)");
    if (curve) cmd->add_option("--curve", c.curve_path, "Write the incidence curve CSV here");
}

std::string fit_json(const FitResult& fit, const Common& c) {
    auto j = nlohmann::json::parse(to_json(fit));
    if (c.level != 0.95 && fit.has_covariance()) {
        nlohmann::json ci = nlohmann::json::array();
        for (const auto& iv : fit.confidence_intervals(c.level)) ci.push_back({iv.lo, iv.hi});
        j["level"] = c.level;
        j["ci"] = ci;
    }
    return j.dump(2);
}

int fit_exit_code(const FitResult& fit) {
    return fit.converged && fit.has_covariance() ? ok : nonconvergence;
}

int cmd_fit(const std::string& data_path, const Common& c, Outputs& out, Diagnostics& diag) {
    const auto data = read_current_status_csv(data_path);
    const auto fit = fit_nondifferential(data, InitialCondition(c.a0, c.p0), fit_options(c), &diag);
    out.emit(c.json_path, fit_json(fit, c));
    if (!c.curve_path.empty()) {
        const auto ages = data.midpoints();
        out.emit(c.curve_path, curve_csv(gompertz_incidence_curve(fit, ages, c.level, &diag)));
    }
    return fit_exit_code(fit);
}

void check_coverage(const LifeTable& table, const CurrentStatusTable& data, double a0) {
    const auto& e = table.general.entries();
    const double first = e.front().interval.lo;
    const double last = e.back().interval.hi;
    const double need = data.midpoints().back();
    if (first > a0 || last < need)
        throw DomainError("life table covers ages [" + fmt(first) + ", " + fmt(last) +
                          ") but the data need rates on [" + fmt(a0) + ", " + fmt(need) + "]");
}

int cmd_fit_mortality(const std::string& data_path, const std::string& lifetable_path,
                      const Common& c, Outputs& out, Diagnostics& diag) {
    const auto data = read_current_status_csv(data_path);
    const auto table = read_lifetable_csv(lifetable_path);
    check_coverage(table, data, c.a0);
    const auto m = lifetable_to_rate(table.general, &diag);
    const auto m1 = lifetable_to_rate(table.diseased, &diag);
    const auto fit =
        fit_differential(data, m1, m, InitialCondition(c.a0, c.p0), fit_options(c), &diag);
    out.emit(c.json_path, fit_json(fit, c));
    if (!c.curve_path.empty()) {
        const auto ages = data.midpoints();
        out.emit(c.curve_path, curve_csv(gompertz_incidence_curve(fit, ages, c.level, &diag)));
    }
    return fit_exit_code(fit);
}

int cmd_regress(const std::string& data_path, const Common& c, Outputs& out) {
    const auto data = read_current_status_csv(data_path);
    const auto line = fit_logit_linear(data);
    const nlohmann::json j{{"beta0", line.beta0},
                           {"beta1", line.beta1},
                           {"residual_sum_of_squares", line.residual_sum_of_squares}};
    out.emit(c.json_path, j.dump(2));
    if (!c.curve_path.empty()) {
        std::string text = "age,incidence\n";
        for (double a : data.midpoints())
            text += fmt(a) + ',' + fmt(incidence_from_logit_fit(line.beta0, line.beta1, a)) + '\n';
        out.emit(c.curve_path, text);
    }
    return ok;
}

std::string with_period_suffix(const std::string& path, double period) {
    std::filesystem::path p(path);
    const auto stem = p.stem().string() + "_" + fmt(period);
    return (p.parent_path() / (stem + p.extension().string())).string();
}

int cmd_plugin(const std::vector<std::string>& paths, double t_origin,
               std::vector<double> periods, const Common& c, Outputs& out, Diagnostics& diag) {
    const auto first = read_current_status_csv(paths[0]);
    const auto second = read_current_status_csv(paths[1]);
    const auto context = read_mortality_csv(paths[2]);
    if (first.intervals() != second.intervals())
        throw ParseError(ParseError::Kind::grid_mismatch, 0,
                         "the two period tables use different age grids");
    FitOptions options;
    options.threads = c.threads;
    const auto fit = fit_prevalence_surface(first, second, t_origin, options, &diag);
    auto j = nlohmann::json::parse(fit_json(fit, c));
    j["t_origin"] = t_origin;
    out.emit(c.json_path, j.dump(2));

    if (!c.curve_path.empty() && fit.has_covariance()) {
        if (periods.empty()) periods = {*first.period(), *second.period()};
        for (double t : periods) {
            std::string text = "age,incidence,ci_lo,ci_hi,negative\n";
            for (double a : first.midpoints()) {
                const auto est = incidence_with_ci(fit, t_origin, t, a, context, c.level, &diag);
                text += fmt(a) + ',' + fmt(est.point) + ',' + fmt(est.ci.lo) + ',' +
                        fmt(est.ci.hi) + ',' + (est.negative ? "1" : "0") + '\n';
            }
            const auto path =
                periods.size() == 1 ? c.curve_path : with_period_suffix(c.curve_path, t);
            out.emit(path, text);
        }
    }
    return fit_exit_code(fit);
}

int cmd_simulate(const std::string& scenario_path, std::uint64_t seed, bool expected,
                 const std::string& output, Outputs& out) {
    std::ifstream in(scenario_path);
    if (!in) throw std::runtime_error("cannot open " + scenario_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto scenario = scenario_from_json(buffer.str());
    scenario.seed = seed;
    const auto table =
        expected ? expected_current_status(exact_prevalence(scenario), scenario.groups,
                                           scenario.group_sizes, scenario.period)
                 : simulate(scenario);
    out.emit(output, to_csv(table));
    return ok;
}

int cmd_convert_lifetable(const std::string& path, const std::string& output, Outputs& out,
                          Diagnostics& diag) {
    const auto table = read_lifetable_csv(path);
    const auto m = lifetable_to_rate(table.general, &diag);
    const auto m1 = lifetable_to_rate(table.diseased, &diag);
    std::string text = "age_lo,age_hi,m,m1\n";
    const auto& e = table.general.entries();
    for (std::size_t k = 0; k < e.size(); ++k)
        text += fmt(e[k].interval.lo) + ',' + fmt(e[k].interval.hi) + ',' + fmt(m.values()[k]) +
                ',' + fmt(m1.values()[k]) + '\n';
    out.emit(output, text);
    return ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Incidence of chronic conditions from aggregated current-status data", "idmfit"};
    app.set_config("--config", "", "Read options from an INI/TOML file (flags win)");
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "Worker threads for multistart fits")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    Common common;
    std::string data_path;
    std::string lifetable_path;

    auto* fit = app.add_subcommand("fit", "Gompertz incidence, non-differential mortality");
    fit->add_option("data", data_path, "Current-status CSV")->required()->check(CLI::ExistingFile);
    add_common(fit, common, true, true);

    auto* fitm = app.add_subcommand("fit-mortality",
                                    "Gompertz incidence with diseased and general mortality");
    fitm->add_option("data", data_path, "Current-status CSV")->required()->check(CLI::ExistingFile);
    fitm->add_option("lifetable", lifetable_path, "Life-table CSV")
        ->required()
        ->check(CLI::ExistingFile);
    add_common(fitm, common, true, true);

    auto* regress = app.add_subcommand("regress", "Logit-linear regression of prevalence on age");
    regress->add_option("data", data_path, "Current-status CSV")
        ->required()
        ->check(CLI::ExistingFile);
    regress->add_option("--json", common.json_path, "Write coefficients as JSON here");
    regress->add_option("--curve", common.curve_path, "Write the incidence curve CSV here");

    std::vector<std::string> plugin_paths;
    double t_origin = 2009.0;
    std::vector<double> periods;
    auto* plugin = app.add_subcommand("plugin", "Plug-in incidence from a two-period surface");
    plugin->add_option("inputs", plugin_paths, "FIRST.csv SECOND.csv MORTALITY.csv")
        ->required()
        ->expected(3)
        ->check(CLI::ExistingFile);
    plugin->add_option("--t-origin", t_origin, "Calendar year coded as t = 0")
        ->capture_default_str();
    plugin->add_option("--period", periods, "Period(s) to report (default: both inputs)");
    add_common(plugin, common, false, true);

    std::string scenario_path;
    std::string output;
    std::uint64_t seed = 0;
    bool expected = false;
    auto* sim = app.add_subcommand("simulate", "Synthetic current-status table from a scenario");
    sim->add_option("scenario", scenario_path, "Scenario JSON")
        ->required()
        ->check(CLI::ExistingFile);
    sim->add_option("--seed", seed, "Random seed")->required();
    sim->add_flag("--expected", expected, "Emit rounded expected counts instead of a sample");
    sim->add_option("-o,--output", output, "Write the CSV here (default: stdout)");

    auto* convert = app.add_subcommand("convert-lifetable", "Life table to annual rates");
    convert->add_option("lifetable", lifetable_path, "Life-table CSV")
        ->required()
        ->check(CLI::ExistingFile);
    convert->add_option("-o,--output", output, "Write the CSV here (default: stdout)");

    std::vector<const char*> argv{"idmfit"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? ok : input_error;
    }
    common.threads = threads;

    Outputs outputs;
    Diagnostics diag;
    int code = ok;
    try {
        if (*fit) code = cmd_fit(data_path, common, outputs, diag);
        else if (*fitm) code = cmd_fit_mortality(data_path, lifetable_path, common, outputs, diag);
        else if (*regress) code = cmd_regress(data_path, common, outputs);
        else if (*plugin) code = cmd_plugin(plugin_paths, t_origin, periods, common, outputs, diag);
        else if (*sim) code = cmd_simulate(scenario_path, seed, expected, output, outputs);
        else if (*convert) code = cmd_convert_lifetable(lifetable_path, output, outputs, diag);

        for (const auto& d : diag.entries()) err << "warning [" << d.code << "]: " << d.message << '\n';
        for (const auto& [path, content] : outputs.files) write_atomically(path, content);
        out << outputs.stdout_text;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return nonconvergence;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    }
    return code;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

} // namespace idmfit::cli
