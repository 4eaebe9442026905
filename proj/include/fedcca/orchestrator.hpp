#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedcca/baselines.hpp"
#include "fedcca/core.hpp"
#include "fedcca/data.hpp"

namespace fedcca {

enum class Algorithm { fedcca, fedavg, fedprox, local_only };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

// FedCCA round hooks: disabling selection admits the n_max nearest sources
// unconditionally; disabling attention aggregation uses uniform weights.
struct AblationVariant {
    bool selection_enabled = true;
    bool attention_aggregation_enabled = true;

    bool is_full() const { return selection_enabled && attention_aggregation_enabled; }
};

struct ExperimentConfig {
    Algorithm algorithm = Algorithm::fedcca;
    ModelSpec model_spec;
    ModelSpec cs_model_spec;
    SyntheticSpec data;
    PartitionPlan plan;
    FedccaHyper hyper;
    int rounds = 100;
    std::uint64_t master_seed = 1;
    int eval_every = 1;
    double participation_fraction = 1.0;  // fedavg / fedprox client sampling
    AblationVariant ablation;

    void validate() const;
};

struct RoundRecord {
    int round = 0;  // 1-based
    bool evaluated = false;
    std::vector<double> train_loss;     // per client, filled when evaluated
    std::vector<double> test_accuracy;  // per client, filled when evaluated
    std::optional<SelectionReport> selection;  // fedcca only
    double wall_seconds = 0.0;          // observability only, never serialized
};

struct RunResult {
    std::string config_hash;
    int num_clients = 0;
    int rounds = 0;
    std::vector<RoundRecord> records;  // one per evaluated round
    std::vector<double> final_accuracy;
    double mean_accuracy = 0.0;
    std::vector<std::vector<long>> selection_counts;  // [target][source]
};

// Shared initial models for every client (one broadcast before round 0),
// with everyone participating.
std::vector<ClientState> init_states(const ExperimentConfig& config,
                                     std::vector<ClientDataset> clients);

// One communication round: per-client training (parallel across `workers`,
// schedule independent), then the algorithm's selection/aggregation phase.
// round_index is 0-based; evaluation happens when round_index % eval_every == 0.
RoundRecord run_round(std::vector<ClientState>& states, const ExperimentConfig& config,
                      int round_index, int workers = 1);

// Data build, initialization and the full round loop. A pure function of the
// config: identical configs give identical results for any worker count.
RunResult run_experiment(const ExperimentConfig& config, int workers = 1);

}  // namespace fedcca
