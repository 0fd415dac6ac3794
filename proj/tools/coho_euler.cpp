#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "coho_euler/coho_euler.hpp"

namespace ce = coho_euler;

int main(int argc, char** argv) {
    CLI::App app{"Reduced incompressible Euler flows on cohomogeneity-one manifolds"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    auto* run = app.add_subcommand("run", "Integrate a configuration and write artifacts");
    run->add_option("--config", config_path, "Run configuration (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory (overrides output.directory)");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a configuration without integrating");
    validate->add_option("--config", validate_path, "Run configuration (JSON)")->required();

    auto* examples = app.add_subcommand("examples", "Bundled example catalog");
    examples->require_subcommand(1);
    examples->add_subcommand("list", "List bundled examples");
    std::string show_name;
    auto* show = examples->add_subcommand("show", "Print the configuration of a bundled example");
    show->add_option("name", show_name, "Example name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ce::kExitOk : ce::kExitParse;
    }

    try {
        if (*run) {
            const auto cfg = ce::parse_config(config_path);
            const std::string dir = out_dir.empty() ? cfg.output.directory : out_dir;
            const auto result = ce::run_command(cfg, dir, ce::workers_from_env(), std::cout);
            return result.exit_code;
        }
        if (*validate) {
            const auto cfg = ce::parse_config(validate_path);
            const auto report = ce::validate_config(cfg);
            ce::print_report(std::cout, report);
            return report.passed() ? ce::kExitOk : ce::kExitValidation;
        }
        if (examples->got_subcommand("list")) {
            ce::list_examples(std::cout);
            return ce::kExitOk;
        }
        if (*show) {
            const auto* e = ce::find_example(show_name);
            if (e == nullptr) {
                std::cerr << "unknown example '" << show_name << "'\n";
                return ce::kExitValidation;
            }
            std::cout << e->config.dump(2) << '\n';
            return ce::kExitOk;
        }
    } catch (const ce::ConfigParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return ce::kExitParse;
    } catch (const ce::NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return ce::kExitNumerical;
    } catch (const ce::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ce::kExitValidation;
    }
    return ce::kExitOk;
}
