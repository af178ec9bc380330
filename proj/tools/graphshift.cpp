// graphshift: experiment runner.
//
//   graphshift <subcommand> [--config PATH] [--out DIR] [--seed U64] [--threads N] [--strict]
//   graphshift hypotheses --spec PATH
//
// Exit codes: 0 success, 1 invalid input, 2 experiment failed its
// acceptance flag under --strict.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "commands.hpp"

namespace gs = graphshift;
namespace cli = graphshift::cli;

namespace {

struct Flags {
    std::string config;
    std::string spec;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    bool strict = false;
};

std::optional<std::uint64_t> env_seed() {
    const char* s = std::getenv("GRAPHSHIFT_SEED");
    if (!s || !*s) return std::nullopt;
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used, 0);
        if (used != std::string(s).size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        gs::fail(gs::ErrorKind::invalid_input, std::string("GRAPHSHIFT_SEED is not an integer: ") + s);
    }
}

int execute(const std::string& name, const cli::Command& command, const Flags& flags) {
    const std::string started = cli::utc_now();
    cli::json doc = cli::json::object();
    if (!flags.config.empty()) doc = cli::read_json_file(flags.config);
    if (!flags.spec.empty()) {
        if (doc.contains("spec")) gs::fail(gs::ErrorKind::invalid_input, "--spec given and config has a spec");
        doc["spec"] = cli::read_json_file(flags.spec);
    }

    cli::Overrides ov{flags.seed, flags.threads};
    if (!ov.seed && !(doc.is_object() && doc.contains("seed"))) ov.seed = env_seed();
    if (flags.out) doc["out"] = *flags.out;
    if (flags.strict) doc["strict"] = true;

    const auto rc = cli::load_config(std::move(doc), command.keys, ov, flags.config, command.sampled);
    const auto result = command.run(rc);

    cli::json payload{{"subcommand", name},
                      {"seed", rc.experiment.seed},
                      {"config", rc.document},
                      {"summary", result.summary},
                      {"pass", result.pass},
                      {"version", GRAPHSHIFT_VERSION}};
    cli::json manifest{{"subcommand", name},
                       {"config_path", flags.config},
                       {"seed", rc.experiment.seed},
                       {"started", started},
                       {"version", GRAPHSHIFT_VERSION}};
    const auto outputs = cli::write_run(rc.param<std::string>("out", "."), name, result.table, payload, manifest);

    fmt::print("{}: {} ({} rows) -> {}\n", name, result.pass ? "pass" : "fail", result.table.size(),
               outputs.json.string());
    return (!result.pass && rc.param("strict", false)) ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graphshift: random quantum graphs over subshifts of finite type"};
    app.require_subcommand(1);
    Flags flags;
    std::string chosen;

    for (const auto& [name, command] : cli::commands()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--out", flags.out, "output directory");
        sub->add_option("--seed", flags.seed, "master seed (fallback: GRAPHSHIFT_SEED)");
        sub->add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--strict", flags.strict, "exit 2 when the acceptance flag is false");
        if (name == "hypotheses") sub->add_option("--spec", flags.spec, "JSON subshift spec")->check(CLI::ExistingFile);
        sub->callback([&chosen, n = name] { chosen = n; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        return execute(chosen, cli::commands().at(chosen), flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
