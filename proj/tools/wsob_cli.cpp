#include <iostream>

#include <CLI11.hpp>

#include "wsob/cli.hpp"

namespace
{

void print_error(const char* category, const std::string& message)
{
    std::cerr << wsob::Json{{"error", category}, {"message", message}}.dump() << '\n';
}

}// namespace

int main(int argc, char** argv)
{
    using namespace wsob::cli;

    CLI::App app{"wsob: weighted Sobolev embeddings on cusp domains"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir = "wsob-out";
    std::uint64_t seed = 1;
    int threads = 1;
    app.add_option("--config", config_path, "config file (INI, one section per command)")->required();
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", seed, "seed for randomized sampling")->capture_default_str();
    app.add_option("--threads", threads, "worker threads")->capture_default_str()->check(CLI::Range(1, 1024));

    const char* help[] = {
        "A_p check of a weight over a sampled ball family",
        "embedding thresholds, witnesses and transfer bounds",
        "distortion integrals of the cusp map",
        "mollifier commutation and convergence",
        "weighted Dirichlet problem by P1 finite elements",
        "sharpness probe with trial-function families",
        "run every section of the config into one report",
    };
    std::size_t k = 0;
    for (const auto& [cmd, name] : kCommands)
        app.add_subcommand(std::string(name), help[k++]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        print_error("usage", e.what());
        return kConfigError;
    }

    const auto cmd = parse_command(app.get_subcommands().front()->get_name());
    wsob::set_thread_count(threads);
    try {
        const Config cfg = load_config(config_path);
        const RunResult rr = run(*cmd, cfg, {out_dir, seed});
        std::cout << (std::filesystem::path(out_dir) / "report.json").string() << ": " << status_name(rr.exit_code)
                  << '\n';
        return rr.exit_code;
    } catch (const ConfigError& e) {
        print_error("config", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return kFailure;
    }
}
