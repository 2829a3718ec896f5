#include <iostream>

#include "CLI11.hpp"

#include "lmg/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Driven LMG model: bifurcation, chaos and criticality runs"};
    app.set_version_flag("--version", lmg::cli::tool_version);

    lmg::cli::RunOptions opt;
    std::string config, out, overwrite = "deny";
    opt.workers = lmg::default_workers();

    app.add_option("command", opt.command, "bifurcation | heatmap | lyapunov | poincare | sweep | scaling | spectrum")
        ->required()
        ->check(CLI::IsMember(lmg::cli::commands()));
    app.add_option("--config", config, "JSON run configuration")->required();
    app.add_option("--out", out, "output directory")->required();
    app.add_option("--workers", opt.workers, "worker threads (default: LMG_WORKERS or hardware concurrency)");
    app.add_option("--overwrite", overwrite, "policy when the output directory already holds a run")
        ->check(CLI::IsMember({"deny", "replace"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : lmg::cli::exit_validation;
    }
    opt.config_path = config;
    opt.out_dir = out;
    opt.overwrite = overwrite == "replace" ? lmg::cli::Overwrite::Replace : lmg::cli::Overwrite::Deny;
    return lmg::cli::run(opt);
}
