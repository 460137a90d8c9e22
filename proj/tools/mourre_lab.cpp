#include <iostream>

#include "CLI11.hpp"
#include "mourre/cli/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mourre_lab: commutator, Helffer-Sjostrand and Mourre-estimate verification suites"};
    std::string config, suite, out, export_dir;
    app.add_option("--config", config, "run configuration file")->required();
    app.add_option("--suite", suite, "comma-separated suite list, overrides run.suite");
    app.add_option("--out", out, "output directory, overrides run.output_dir");
    app.add_option("--export", export_dir, "write H.bin and A.bin of the configured model to this directory and exit");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    using namespace mourre;
    try {
        auto cfg = cli::load_config(config);
        if (!suite.empty()) cfg.suites = cli::split_list(suite);
        if (!out.empty()) cfg.output_dir = out;
        if (!export_dir.empty()) {
            cli::export_model(cfg, export_dir);
            std::cerr << "exported H.bin, A.bin to " << export_dir << "\n";
            return 0;
        }
        for (const auto& s : cfg.suites) {
            bool ok = false;
            for (const auto& t : cli::all_suites()) ok = ok || s == t;
            if (!ok) throw ConfigError("unknown suite " + s);
        }
        auto res = cli::run(cfg, std::cerr);
        std::cerr << (res.exit_code == 0 ? "all invariants hold" : "invariant violations: " + std::to_string(res.failures.size()))
                  << "\n";
        return res.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
