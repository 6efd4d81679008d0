#include <iostream>

#include "CLI11.hpp"
#include "side/cli.hpp"

int main(int argc, char** argv) {
    side::RunConfig cfg;
    CLI::App app{"Analysis and regularization of second-order singular difference equations"};
    app.require_subcommand(1);
    std::optional<double> tol_rel;
    std::optional<long long> window, horizon;
    for (const char* name : side::kCommands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("input", cfg.input, "problem file, stored report (verify) or builtin name")->required();
        sub->add_option("params", cfg.params, "key=value parameters of a builtin");
        sub->add_option("--tol-rel", tol_rel, "relative rank tolerance (default max(rows, cols) * eps)");
        sub->add_option("--tol-abs", cfg.tol_abs, "absolute rank tolerance")->check(CLI::NonNegativeNumber);
        sub->add_option("--window", window, "number of time steps N (equations at n0..n0+N)");
        sub->add_option("--max-index", cfg.max_index, "iteration limit of the index reduction")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--max-level", cfg.max_level, "largest inflation level probed")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--horizon", horizon, "solve: last step n0 + K of the trajectory");
        sub->add_option("--format", cfg.format, "output format")->check(CLI::IsMember({"auto", "json", "text", "csv"}));
        sub->add_option("--out", cfg.out, "output file (default stdout)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : side::exit_input;
    }
    cfg.command = app.get_subcommands().front()->get_name();
    cfg.tol_rel = tol_rel;
    if (window) cfg.window = *window;
    if (horizon) cfg.horizon = *horizon;
    return side::run(cfg, std::cout, std::cerr);
}
