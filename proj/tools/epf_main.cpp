#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "epf/experiment.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
    std::vector<std::string> zones;
    int jobs = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Experiment config JSON")
        ->required();
    cmd->add_option("--out", flags.out_dir, "Override the output directory");
    cmd->add_option("--seed", flags.seed, "Override the run seed");
    cmd->add_option("--zones", flags.zones, "Subset of zones (e.g. NO1 NO3)");
    cmd->add_option("--jobs", flags.jobs, "Parallel zone workers");
}

epf::ExperimentConfig resolve(const CommonFlags& flags) {
    auto config = epf::ExperimentConfig::from_json_file(flags.config_path);
    if (!flags.out_dir.empty()) config.output_dir = flags.out_dir;
    if (flags.seed >= 0) config.seed = static_cast<std::uint64_t>(flags.seed);
    if (flags.jobs > 0) config.jobs = flags.jobs;
    if (!flags.zones.empty()) {
        std::map<std::string, epf::ZoneInput> subset;
        for (const auto& code : flags.zones) {
            const auto it = config.zones.find(code);
            if (it == config.zones.end())
                throw epf::ConfigError("zone '" + code + "' is not in the config");
            subset[code] = it->second;
        }
        config.zones = std::move(subset);
    }
    config.validate();
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Day-ahead electricity price forecasting benchmark for NO1-NO5"};
    app.require_subcommand(1);

    struct Command {
        const char* name;
        const char* help;
        int (*fn)(const epf::ExperimentConfig&);
    };
    const std::vector<Command> commands = {
        {"ingest", "Build finalized hourly panels from zone CSV snapshots", epf::cmd_ingest},
        {"run", "Fixed-split benchmark: fit roster, metrics table, DM tests", epf::cmd_run},
        {"backtest", "52-step weekly rolling-origin backtest", epf::cmd_backtest},
        {"windows", "Training-window experiment (pre/post-crisis)", epf::cmd_windows},
        {"ablate", "Leave-one-group-out and lags-plus-group ablations", epf::cmd_ablate},
        {"regimes", "Reservoir/gas regime-conditional error analysis", epf::cmd_regimes},
        {"failures", "Extract the largest absolute test errors", epf::cmd_failures},
    };

    std::vector<CommonFlags> flags(commands.size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        CLI::App* sub = app.add_subcommand(commands[i].name, commands[i].help);
        add_common(sub, flags[i]);
        subs.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    for (std::size_t i = 0; i < commands.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        try {
            return commands[i].fn(resolve(flags[i]));
        } catch (const epf::ConfigError& e) {
            std::fprintf(stderr, "config error: %s\n", e.what());
            return 1;
        } catch (const epf::DataError& e) {
            std::fprintf(stderr, "data error: %s\n", e.what());
            return 2;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 3;
        }
    }
    return 1;
}
