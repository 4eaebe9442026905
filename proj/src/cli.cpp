#include "fedcca/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "fedcca/config.hpp"
#include "fedcca/outputs.hpp"

namespace fedcca {

namespace {

std::string default_out_dir() {
    const char* env = std::getenv("FEDCCA_OUT_DIR");
    return env && *env ? env : "out";
}

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> parts;
    std::stringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

// Rebuilds the deterministic client datasets of a config (same streams the
// orchestrator uses).
std::vector<ClientDataset> build_config_clients(const ExperimentConfig& config) {
    Rng pool_rng = derive_rng(config.master_seed, 0, 0, "pool");
    const Batch pool = generate_base_pool(config.data, pool_rng);
    Rng partition_rng = derive_rng(config.master_seed, 0, 0, "partition");
    return build_clients(pool, config.plan, partition_rng);
}

}  // namespace

int run_cli(std::vector<std::string> args) {
    CLI::App app{"FedCCA federated learning simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = default_out_dir();
    int workers = 1;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> rounds_override;
    std::optional<std::string> algorithm_override;

    auto* run = app.add_subcommand("run", "Run one experiment and write its outputs");
    run->add_option("--config", config_path, "Config file (JSON)")->required();
    run->add_option("--seed", seed_override, "Override master_seed");
    run->add_option("--rounds", rounds_override, "Override communication rounds");
    run->add_option("--algorithm", algorithm_override,
                    "Override algorithm (fedcca, fedavg, fedprox, local_only)");
    run->add_option("--out-dir", out_dir, "Output directory (default $FEDCCA_OUT_DIR or ./out)");
    run->add_option("--workers", workers, "Worker threads for the client training phase");

    std::string axis_name;
    std::string values_csv;
    std::string seeds_csv;
    auto* sweep = app.add_subcommand("sweep", "Run a sweep over one axis and a list of seeds");
    sweep->add_option("--config", config_path, "Base config file (JSON)")->required();
    sweep->add_option("--axis", axis_name,
                      "Sweep axis (alpha, local_epochs, classes_per_client, algorithm, ablation)")
        ->required();
    sweep->add_option("--values", values_csv, "Comma-separated axis values")->required();
    sweep->add_option("--seeds", seeds_csv, "Comma-separated master seeds")->required();
    sweep->add_option("--out-dir", out_dir, "Output directory (default $FEDCCA_OUT_DIR or ./out)");
    sweep->add_option("--workers", workers, "Worker threads for the client training phase");

    auto* export_data = app.add_subcommand("export-data", "Write the per-client datasets as CSV");
    export_data->add_option("--config", config_path, "Config file (JSON)")->required();
    export_data->add_option("--out-dir", out_dir,
                            "Output directory (default $FEDCCA_OUT_DIR or ./out)");

    std::reverse(args.begin(), args.end());  // CLI11 consumes the vector back to front
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*run) {
            ExperimentConfig config = parse_config_file(config_path);
            if (seed_override) config.master_seed = *seed_override;
            if (rounds_override) config.rounds = *rounds_override;
            if (algorithm_override) {
                config.algorithm = algorithm_from_name(*algorithm_override);
                if (config.algorithm != Algorithm::fedcca) config.ablation = AblationVariant{};
            }
            config.validate();

            const auto clients = build_config_clients(config);
            const RunResult result = run_experiment(config, workers);
            write_outputs(result, out_dir);
            std::cout << "algorithm: " << algorithm_name(config.algorithm) << "\n"
                      << "clients: " << result.num_clients
                      << ", label overlap: " << common_labels(clients).size() << " classes"
                      << ", heterogeneity: " << heterogeneity_score(clients) << "\n"
                      << "mean final accuracy: " << result.mean_accuracy << "\n"
                      << "outputs written to " << out_dir << "\n";
        } else if (*sweep) {
            SweepSpec spec;
            spec.base = parse_config_file(config_path);
            spec.axis = sweep_axis_from_name(axis_name);
            spec.values = split_csv(values_csv);
            for (const auto& s : split_csv(seeds_csv))
                spec.seeds.push_back(std::stoull(s));
            const auto rows = run_sweep(spec, out_dir, workers);
            const auto failed =
                std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.ok; });
            std::cout << rows.size() << " runs (" << failed << " failed), summary written to "
                      << out_dir << "/sweep_summary.csv\n";
        } else if (*export_data) {
            const ExperimentConfig config = parse_config_file(config_path);
            const auto clients = build_config_clients(config);
            export_clients_csv(clients, out_dir);
            std::cout << "wrote train/test CSVs for " << clients.size() << " clients to "
                      << out_dir << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace fedcca
