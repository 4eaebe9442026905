#pragma once

#include <map>
#include <vector>

#include "fedcca/core.hpp"
#include "fedcca/model.hpp"

namespace fedcca {

// Size-weighted parameter average: sum_k (K_k / sum K) * theta_k.
ParamVector fedavg_aggregate(const std::map<int, ParamVector>& thetas,
                             const std::map<int, long>& sizes);

// Gradient of the proximal-augmented objective CE + (mu/2)||w - w_global||^2.
ParamVector fedprox_gradient(const ParamVector& params, const ModelSpec& spec, const Batch& batch,
                             const ParamVector& global_params, double mu);

// ceil(fraction * N) distinct ids, uniform without replacement, ascending.
std::vector<int> sample_participants(int num_clients, double fraction, Rng& rng);

// Mini-batch SGD with the proximal gradient, anchored at global_params.
ParamVector run_prox_sgd_epochs(ParamVector params, const ModelSpec& spec, const Batch& train,
                                int epochs, double lr, int batch_size,
                                const ParamVector& global_params, double mu, Rng& rng);

// Every client runs the ungated local loop; nothing is shared or aggregated.
std::map<int, ParamVector> local_only_round(const std::vector<ClientState>& clients,
                                            const ModelSpec& spec, const FedccaHyper& hyper,
                                            std::uint64_t master_seed, int round);

}  // namespace fedcca
