#include "muhs/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    namespace cli = muhs::cli;
    CLI::App app{"Periodic mu-Hunter-Saxton solver: runs, certificates, blow-up rate fits and sweeps"};
    app.require_subcommand(1);

    std::string config, out = "out", diagnostics, field;
    std::size_t jobs = 0, stride = 0, particles = 64, n = 256;
    int kmax = 8;
    std::uint64_t seed = 0;
    double lambda = 0.0;
    std::optional<double> t_detect, bound;

    auto* run = app.add_subcommand("run", "integrate one scenario and write diagnostics and a report");
    run->add_option("--config", config, "scenario JSON")->required();
    run->add_option("--out", out, "output directory");
    run->add_option("--snapshot-stride", stride, "store every k-th step for the characteristics check (0 = off)");
    run->add_option("--particles", particles, "characteristics launched for the check")->check(CLI::PositiveNumber);

    auto* cert = app.add_subcommand("certify", "evaluate the blow-up and global existence criteria for u0");
    cert->add_option("--config", config, "scenario JSON")->required();

    auto* rate = app.add_subcommand("rate", "fit the blow-up rate from an existing diagnostics.csv");
    rate->add_option("--diagnostics", diagnostics, "diagnostics CSV")->required()->check(CLI::ExistingFile);
    rate->add_option("--lambda", lambda, "damping")->required();
    rate->add_option("--t-detect", t_detect, "detection time (default: last record)");
    rate->add_option("--bound", bound, "analytic upper bound on the blow-up time");

    auto* sweep = app.add_subcommand("sweep", "run a Cartesian product of scenarios");
    sweep->add_option("--config", config, "sweep JSON with base and axes")->required();
    sweep->add_option("--out", out, "output directory");
    sweep->add_option("--jobs", jobs, "worker threads (0 = hardware; capped by MUHS_THREADS)");

    auto* oracle = app.add_subcommand("oracle", "compare spectral and quadrature inverses of the Helmholtz operator");
    oracle->add_option("--field", field, "field CSV (x,value)")->check(CLI::ExistingFile);
    oracle->add_option("--seed", seed, "seed for a random field when --field is absent");
    oracle->add_option("--n", n, "grid size of the random field");
    oracle->add_option("--kmax", kmax, "highest wavenumber of the random field")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cli::cmd_run(config, out, {stride, particles}, std::cout, std::cerr);
        if (*cert) return cli::cmd_certify(config, std::cout, std::cerr);
        if (*rate) return cli::cmd_rate(diagnostics, {lambda, t_detect, bound}, std::cout, std::cerr);
        if (*sweep) return cli::cmd_sweep(config, out, jobs, std::cout, std::cerr);
        if (*oracle) {
            cli::OracleSettings o;
            if (!field.empty()) o.field = field;
            o.seed = seed;
            o.n = n;
            o.kmax = kmax;
            return cli::cmd_oracle(o, std::cout, std::cerr);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::exit_input_error;
    }
    return cli::exit_input_error;
}
