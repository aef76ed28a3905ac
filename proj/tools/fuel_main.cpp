#include <cstdio>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fuel/parallel.hpp"
#include "fuel/run.hpp"

namespace {

int pick_threads(const std::optional<int>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("FUEL_DEFAULT_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<int>(v);
        std::fprintf(stderr, "warning: ignoring FUEL_DEFAULT_THREADS='%s' (want a positive integer)\n",
                     env);
    }
    return 0;  // hardware count
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-fuel irreversible-investment toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<unsigned long long> seed;
    std::optional<int> threads;

    const struct {
        const char* name;
        const char* blurb;
    } subs[] = {
        {"simulate", "simulate a scenario, write the plan trajectory, profit and verification"},
        {"verify-kkt", "run the three-part optimality verification on a scenario"},
        {"solve-dp", "solve the quantized problem by backward induction"},
        {"calibrate-c", "estimate the Brownian tracking offset against 1/sqrt(2 delta)"},
        {"compare", "solve both routes and report the oracle gap"},
    };
    for (const auto& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.blurb);
        sub->add_option("--config", config_path, "JSON scenario config")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the config's master seed");
        sub->add_option("--threads", threads,
                        "worker cap (default: FUEL_DEFAULT_THREADS, else hardware)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", out_dir, "artifact directory (default: config outputs.directory)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    fuel::thread_cap() = pick_threads(threads);

    try {
        fuel::RunConfig cfg = fuel::load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (out_dir) cfg.out_dir = *out_dir;
        fuel::RunResult res = fuel::run_subcommand(app.get_subcommands().front()->get_name(), cfg);
        for (const std::string& a : res.artifacts) std::printf("wrote %s\n", a.c_str());
        if (!res.pass) {
            std::fprintf(stderr, "verdict: FAIL\n");
            return 3;
        }
        return 0;
    } catch (const fuel::config_error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
