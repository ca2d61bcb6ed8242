/// Command-line front end for the logarithmic-diffusion laboratory.
///
///   logdiff run <scenario-file>                 execute one scenario
///   logdiff sweep <scenario-file> --param p --values 1,2,3
///   logdiff verify [--quick]                    built-in verification battery
///   logdiff compare <low-file> <high-file>      ordering of two 1D runs
///   logdiff fit <csv> --model m --window t0,t1 [--column u_min]
///
/// Exit codes: 0 success (including expected singular termination), 1 a run
/// or check failed, 2 bad input.

#include "logdiff/runner.hpp"
#include "logdiff/verify.hpp"

#include "CLI11.hpp"

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for the logarithmic diffusion equation"};
    app.require_subcommand(1);

    std::string run_path;
    CLI::App* c_run = app.add_subcommand("run", "execute a scenario file");
    c_run->add_option("scenario", run_path, "scenario file")->required();

    std::string sweep_path, sweep_param, sweep_values;
    CLI::App* c_sweep = app.add_subcommand("sweep", "run a scenario across parameter values");
    c_sweep->add_option("scenario", sweep_path, "scenario file")->required();
    c_sweep->add_option("--param", sweep_param, "one of p, gamma, l, n, dt_init")->required();
    c_sweep->add_option("--values", sweep_values, "comma-separated values")->required();

    bool quick = false;
    CLI::App* c_verify = app.add_subcommand("verify", "run the built-in verification battery");
    c_verify->add_flag("--quick", quick, "smaller grids, skip the slowest items");

    std::string cmp_a, cmp_b;
    CLI::App* c_compare =
        app.add_subcommand("compare", "check ordering of two 1D scenarios (low, high)");
    c_compare->add_option("low", cmp_a, "scenario expected to stay below")->required();
    c_compare->add_option("high", cmp_b, "scenario expected to stay above")->required();

    std::string fit_csv, fit_model, fit_window, fit_column = "u_min";
    CLI::App* c_fit = app.add_subcommand("fit", "fit a rate model to a CSV column");
    c_fit->add_option("csv", fit_csv, "CSV file produced by run")->required();
    c_fit->add_option("--model", fit_model, "power | exponential | gaussian_log | linear_vanishing")
        ->required();
    c_fit->add_option("--window", fit_window, "fit window t0,t1")->required();
    c_fit->add_option("--column", fit_column, "CSV column to fit (default u_min)");

    CLI11_PARSE(app, argc, argv);

    if (c_run->parsed()) return logdiff::cmd_run(run_path);
    if (c_sweep->parsed()) return logdiff::cmd_sweep(sweep_path, sweep_param, sweep_values);
    if (c_verify->parsed()) return logdiff::cmd_verify(quick);
    if (c_compare->parsed()) return logdiff::cmd_compare(cmp_a, cmp_b);
    if (c_fit->parsed()) return logdiff::cmd_fit(fit_csv, fit_model, fit_window, fit_column);
    return 2;
}
