#include "fedcca/orchestrator.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "fedcca/config.hpp"

namespace fedcca {

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::fedcca: return "fedcca";
        case Algorithm::fedavg: return "fedavg";
        case Algorithm::fedprox: return "fedprox";
        case Algorithm::local_only: return "local_only";
    }
    throw std::logic_error("algorithm_name: unknown algorithm");
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "fedcca") return Algorithm::fedcca;
    if (name == "fedavg") return Algorithm::fedavg;
    if (name == "fedprox") return Algorithm::fedprox;
    if (name == "local_only") return Algorithm::local_only;
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

void ExperimentConfig::validate() const {
    model_spec.validate();
    cs_model_spec.validate();
    data.validate();
    plan.validate();
    hyper.validate();
    if (rounds < 1) throw std::invalid_argument("ExperimentConfig: rounds must be >= 1");
    if (eval_every < 1) throw std::invalid_argument("ExperimentConfig: eval_every must be >= 1");
    if (!(participation_fraction > 0.0 && participation_fraction <= 1.0))
        throw std::invalid_argument("ExperimentConfig: participation_fraction must be in (0,1]");
    if (model_spec.input_dim != data.feature_dim)
        throw std::invalid_argument("ExperimentConfig: model input_dim must equal data feature_dim");
    if (model_spec.num_classes != data.num_classes)
        throw std::invalid_argument("ExperimentConfig: model num_classes must equal data num_classes");
    if (cs_model_spec.input_dim != data.feature_dim)
        throw std::invalid_argument("ExperimentConfig: cs_model input_dim must equal data feature_dim");
    if (cs_model_spec.num_classes != data.num_classes)
        throw std::invalid_argument("ExperimentConfig: cs_model num_classes must equal data num_classes");
    if (algorithm != Algorithm::fedcca && !ablation.is_full())
        throw std::invalid_argument("ExperimentConfig: ablation requires algorithm=fedcca");
}

namespace {

// Static results slots + dynamic work stealing: outputs never depend on the
// thread schedule.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

void evaluate_clients(const std::vector<ClientState>& states, const ExperimentConfig& config,
                      RoundRecord& record) {
    record.evaluated = true;
    record.train_loss.resize(states.size());
    record.test_accuracy.resize(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        record.train_loss[i] =
            cross_entropy_loss(states[i].theta, config.model_spec, states[i].dataset.train);
        record.test_accuracy[i] =
            accuracy(states[i].theta, config.model_spec, states[i].dataset.test);
    }
}

void fedcca_round(std::vector<ClientState>& states, const ExperimentConfig& config,
                  int round_index, int workers, RoundRecord& record) {
    const std::size_t n = states.size();
    std::vector<ParamVector> new_theta(n), new_phi(n);
    parallel_for(n, workers, [&](std::size_t i) {
        Rng theta_rng = derive_rng(config.master_seed, static_cast<std::uint64_t>(round_index),
                                   static_cast<std::uint64_t>(states[i].client_id), "theta-shuffle");
        Rng phi_rng = derive_rng(config.master_seed, static_cast<std::uint64_t>(round_index),
                                 static_cast<std::uint64_t>(states[i].client_id), "phi-shuffle");
        new_theta[i] = local_training(states[i], config.model_spec, config.hyper, theta_rng);
        new_phi[i] = client_specific_training(states[i], config.cs_model_spec, config.hyper, phi_rng);
    });
    for (std::size_t i = 0; i < n; ++i) {
        states[i].theta = std::move(new_theta[i]);
        states[i].phi = std::move(new_phi[i]);
    }

    std::vector<ParamVector> fc_layers(n);
    for (std::size_t i = 0; i < n; ++i)
        fc_layers[i] = extract_fc_layer(states[i].phi, config.cs_model_spec);
    const auto distances = pairwise_distances(fc_layers);
    const double sigma = config.hyper.sigma ? *config.hyper.sigma
                                            : median_pairwise_distance(distances);
    const SimilarityMatrix matrix = dissimilarity_from_distances(distances, sigma, round_index + 1);

    const SelectionReport report = config.ablation.selection_enabled
                                       ? client_centric_selection(matrix, config.hyper.n_max)
                                       : select_all_ranked(matrix, config.hyper.n_max);

    std::vector<bool> current_participation(n);
    for (std::size_t i = 0; i < n; ++i) current_participation[i] = states[i].participating;

    std::map<int, ParamVector> all_thetas;
    for (const auto& state : states) all_thetas[state.client_id] = state.theta;

    std::vector<ParamVector> aggregated(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int target = states[i].client_id;
        const auto weights =
            config.ablation.attention_aggregation_enabled
                ? aggregation_weights(matrix, target, report.selected[i], current_participation)
                : uniform_aggregation_weights(target, report.selected[i]);
        double sum = 0.0;
        for (const auto& [id, w] : weights) sum += w;
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::logic_error("fedcca_round: aggregation weights do not sum to 1");
        aggregated[i] = multi_source_aggregate(all_thetas, weights);
    }
    for (std::size_t i = 0; i < n; ++i) {
        states[i].theta = std::move(aggregated[i]);
        states[i].participating = report.next_participation[i];
    }
    record.selection = report;
}

void averaging_round(std::vector<ClientState>& states, const ExperimentConfig& config,
                     int round_index, int workers) {
    const std::size_t n = states.size();
    Rng participant_rng =
        derive_rng(config.master_seed, static_cast<std::uint64_t>(round_index), 0, "participants");
    const std::vector<int> participants =
        sample_participants(static_cast<int>(n), config.participation_fraction, participant_rng);

    std::vector<ParamVector> trained(participants.size());
    parallel_for(participants.size(), workers, [&](std::size_t k) {
        const std::size_t i = static_cast<std::size_t>(participants[k]);
        Rng rng = derive_rng(config.master_seed, static_cast<std::uint64_t>(round_index),
                             static_cast<std::uint64_t>(states[i].client_id), "theta-shuffle");
        if (config.algorithm == Algorithm::fedprox) {
            trained[k] = run_prox_sgd_epochs(states[i].theta, config.model_spec,
                                             states[i].dataset.train, config.hyper.local_epochs,
                                             config.hyper.lr, config.hyper.batch_size,
                                             states[i].theta, config.hyper.prox_mu, rng);
        } else {
            trained[k] = run_sgd_epochs(states[i].theta, config.model_spec, states[i].dataset.train,
                                        config.hyper.local_epochs, config.hyper.lr,
                                        config.hyper.batch_size, rng);
        }
    });

    std::map<int, ParamVector> thetas;
    std::map<int, long> sizes;
    for (std::size_t k = 0; k < participants.size(); ++k) {
        thetas[participants[k]] = std::move(trained[k]);
        sizes[participants[k]] =
            static_cast<long>(states[static_cast<std::size_t>(participants[k])].dataset.train.size());
    }
    const ParamVector global = fedavg_aggregate(thetas, sizes);
    for (auto& state : states) state.theta = global;
}

void local_only_round_inplace(std::vector<ClientState>& states, const ExperimentConfig& config,
                              int round_index, int workers) {
    std::vector<ParamVector> trained(states.size());
    parallel_for(states.size(), workers, [&](std::size_t i) {
        Rng rng = derive_rng(config.master_seed, static_cast<std::uint64_t>(round_index),
                             static_cast<std::uint64_t>(states[i].client_id), "theta-shuffle");
        trained[i] = run_sgd_epochs(states[i].theta, config.model_spec, states[i].dataset.train,
                                    config.hyper.local_epochs, config.hyper.lr,
                                    config.hyper.batch_size, rng);
    });
    for (std::size_t i = 0; i < states.size(); ++i) states[i].theta = std::move(trained[i]);
}

}  // namespace

std::vector<ClientState> init_states(const ExperimentConfig& config,
                                     std::vector<ClientDataset> clients) {
    Rng theta_rng = derive_rng(config.master_seed, 0, 0, "theta-init");
    Rng phi_rng = derive_rng(config.master_seed, 0, 0, "phi-init");
    const ParamVector theta0 = init_params(config.model_spec, theta_rng);
    const ParamVector phi0 = init_params(config.cs_model_spec, phi_rng);

    std::vector<ClientState> states;
    states.reserve(clients.size());
    for (auto& dataset : clients) {
        ClientState state;
        state.client_id = dataset.client_id;
        state.theta = theta0;
        state.phi = phi0;
        state.participating = true;
        state.dataset = std::move(dataset);
        states.push_back(std::move(state));
    }
    return states;
}

RoundRecord run_round(std::vector<ClientState>& states, const ExperimentConfig& config,
                      int round_index, int workers) {
    const auto start = std::chrono::steady_clock::now();
    RoundRecord record;
    record.round = round_index + 1;

    switch (config.algorithm) {
        case Algorithm::fedcca:
            fedcca_round(states, config, round_index, workers, record);
            break;
        case Algorithm::fedavg:
        case Algorithm::fedprox:
            averaging_round(states, config, round_index, workers);
            break;
        case Algorithm::local_only:
            local_only_round_inplace(states, config, round_index, workers);
            break;
    }

    if (round_index % config.eval_every == 0) evaluate_clients(states, config, record);
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return record;
}

RunResult run_experiment(const ExperimentConfig& config, int workers) {
    config.validate();

    Rng pool_rng = derive_rng(config.master_seed, 0, 0, "pool");
    const Batch pool = generate_base_pool(config.data, pool_rng);
    Rng partition_rng = derive_rng(config.master_seed, 0, 0, "partition");
    std::vector<ClientState> states =
        init_states(config, build_clients(pool, config.plan, partition_rng));

    const std::size_t n = states.size();
    RunResult result;
    result.config_hash = config_hash(config);
    result.num_clients = static_cast<int>(n);
    result.rounds = config.rounds;
    result.selection_counts.assign(n, std::vector<long>(n, 0));

    for (int t = 0; t < config.rounds; ++t) {
        RoundRecord record = run_round(states, config, t, workers);
        if (record.selection) {
            for (std::size_t i = 0; i < n; ++i)
                for (int j : record.selection->selected[i])
                    result.selection_counts[i][static_cast<std::size_t>(j)] += 1;
        }
        if (record.evaluated) result.records.push_back(std::move(record));
    }

    result.final_accuracy.resize(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        result.final_accuracy[i] =
            accuracy(states[i].theta, config.model_spec, states[i].dataset.test);
        sum += result.final_accuracy[i];
    }
    result.mean_accuracy = sum / static_cast<double>(n);
    return result;
}

}  // namespace fedcca
