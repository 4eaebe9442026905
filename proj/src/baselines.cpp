#include "fedcca/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedcca {

ParamVector fedavg_aggregate(const std::map<int, ParamVector>& thetas,
                             const std::map<int, long>& sizes) {
    if (thetas.empty()) throw std::invalid_argument("fedavg_aggregate: no models");
    if (thetas.size() != sizes.size())
        throw std::invalid_argument("fedavg_aggregate: theta/size key mismatch");
    double total = 0.0;
    for (const auto& [id, k] : sizes) {
        if (!thetas.count(id))
            throw std::invalid_argument("fedavg_aggregate: theta/size key mismatch");
        if (k < 1) throw std::invalid_argument("fedavg_aggregate: sizes must be >= 1");
        total += static_cast<double>(k);
    }
    ParamVector out(thetas.begin()->second.size(), 0.0);
    for (const auto& [id, theta] : thetas) {
        if (theta.size() != out.size())
            throw std::invalid_argument("fedavg_aggregate: model length mismatch");
        const double w = static_cast<double>(sizes.at(id)) / total;
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * theta[k];
    }
    return out;
}

ParamVector fedprox_gradient(const ParamVector& params, const ModelSpec& spec, const Batch& batch,
                             const ParamVector& global_params, double mu) {
    if (params.size() != global_params.size())
        throw std::invalid_argument("fedprox_gradient: parameter length mismatch");
    ParamVector grad = gradient(params, spec, batch);
    if (mu != 0.0)
        for (std::size_t k = 0; k < grad.size(); ++k)
            grad[k] += mu * (params[k] - global_params[k]);
    return grad;
}

std::vector<int> sample_participants(int num_clients, double fraction, Rng& rng) {
    if (num_clients < 1) throw std::invalid_argument("sample_participants: num_clients must be >= 1");
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("sample_participants: fraction must be in (0,1]");
    // Small epsilon so fraction*N that is an integer up to rounding stays there.
    int m = static_cast<int>(std::ceil(fraction * num_clients - 1e-9));
    m = std::clamp(m, 1, num_clients);

    std::vector<int> ids(static_cast<std::size_t>(num_clients));
    std::iota(ids.begin(), ids.end(), 0);
    // Partial Fisher-Yates: the first m slots become the sample.
    for (int i = 0; i < m; ++i) {
        const std::size_t j =
            static_cast<std::size_t>(i) +
            static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(num_clients - i)));
        std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
    }
    ids.resize(static_cast<std::size_t>(m));
    std::sort(ids.begin(), ids.end());
    return ids;
}

ParamVector run_prox_sgd_epochs(ParamVector params, const ModelSpec& spec, const Batch& train,
                                int epochs, double lr, int batch_size,
                                const ParamVector& global_params, double mu, Rng& rng) {
    if (train.size() == 0) throw std::invalid_argument("run_prox_sgd_epochs: empty train set");
    const std::size_t n = train.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(batch_size));
            Batch mini;
            mini.features = Matrix(stop - start, train.features.cols);
            mini.labels.resize(stop - start);
            for (std::size_t r = start; r < stop; ++r) {
                const std::size_t src = static_cast<std::size_t>(order[r]);
                for (std::size_t d = 0; d < train.features.cols; ++d)
                    mini.features.at(r - start, d) = train.features.at(src, d);
                mini.labels[r - start] = train.labels[src];
            }
            params = sgd_step(params, fedprox_gradient(params, spec, mini, global_params, mu), lr);
        }
    }
    return params;
}

std::map<int, ParamVector> local_only_round(const std::vector<ClientState>& clients,
                                            const ModelSpec& spec, const FedccaHyper& hyper,
                                            std::uint64_t master_seed, int round) {
    hyper.validate();
    std::map<int, ParamVector> updated;
    for (const auto& client : clients) {
        Rng rng = derive_rng(master_seed, static_cast<std::uint64_t>(round),
                             static_cast<std::uint64_t>(client.client_id), "theta-shuffle");
        updated[client.client_id] = run_sgd_epochs(client.theta, spec, client.dataset.train,
                                                   hyper.local_epochs, hyper.lr, hyper.batch_size,
                                                   rng);
    }
    return updated;
}

}  // namespace fedcca
