#include "fedcca/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedcca {

void FedccaHyper::validate() const {
    if (sigma && !(*sigma > 0.0)) throw std::invalid_argument("FedccaHyper: sigma must be positive");
    if (n_max < 1) throw std::invalid_argument("FedccaHyper: n_max must be >= 1");
    if (local_epochs < 1) throw std::invalid_argument("FedccaHyper: local_epochs must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("FedccaHyper: lr must be positive");
    if (batch_size < 1) throw std::invalid_argument("FedccaHyper: batch_size must be >= 1");
    if (prox_mu < 0.0) throw std::invalid_argument("FedccaHyper: prox_mu must be >= 0");
}

double euclidean_distance(const ParamVector& p, const ParamVector& q) {
    if (p.size() != q.size())
        throw std::invalid_argument("euclidean_distance: length mismatch");
    double sum = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double d = p[k] - q[k];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double attention_score(double d, double sigma) {
    if (d < 0.0) throw std::invalid_argument("attention_score: distance must be non-negative");
    if (!(sigma > 0.0)) throw std::invalid_argument("attention_score: sigma must be positive");
    return d == 0.0 ? 0.0 : -std::expm1(-d / sigma);
}

std::vector<std::vector<double>> pairwise_distances(const std::vector<ParamVector>& fc_layers) {
    const std::size_t n = fc_layers.size();
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = euclidean_distance(fc_layers[i], fc_layers[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    return dist;
}

double median_pairwise_distance(const std::vector<std::vector<double>>& distances) {
    std::vector<double> upper;
    for (std::size_t i = 0; i < distances.size(); ++i)
        for (std::size_t j = i + 1; j < distances.size(); ++j) upper.push_back(distances[i][j]);
    if (upper.empty()) return 1.0;
    std::sort(upper.begin(), upper.end());
    const std::size_t n = upper.size();
    const double median = n % 2 == 1 ? upper[n / 2] : 0.5 * (upper[n / 2 - 1] + upper[n / 2]);
    return median > 1e-12 ? median : 1.0;  // all-identical clients: any bandwidth works
}

SimilarityMatrix dissimilarity_from_distances(const std::vector<std::vector<double>>& distances,
                                              double sigma, int round) {
    SimilarityMatrix matrix;
    matrix.round = round;
    const std::size_t n = distances.size();
    matrix.scores.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double b = attention_score(distances[i][j], sigma);
            matrix.scores[i][j] = b;
            matrix.scores[j][i] = b;
        }
    }
    return matrix;
}

SimilarityMatrix pairwise_dissimilarity(const std::vector<ParamVector>& fc_layers, double sigma,
                                        int round) {
    if (fc_layers.size() < 2)
        throw std::invalid_argument("pairwise_dissimilarity: need at least 2 clients");
    return dissimilarity_from_distances(pairwise_distances(fc_layers), sigma, round);
}

double selection_criteria(const SimilarityMatrix& matrix, int client) {
    const int n = matrix.size();
    if (client < 0 || client >= n)
        throw std::invalid_argument("selection_criteria: client id out of range");
    double sum = 0.0;
    for (int j = 0; j < n; ++j)
        if (j != client) sum += matrix.scores[static_cast<std::size_t>(client)][static_cast<std::size_t>(j)];
    return sum / (2.0 * static_cast<double>(n));
}

namespace {

// Candidates for one target, ascending by score with ties to the lower id.
std::vector<int> ranked_candidates(const SimilarityMatrix& matrix, int target) {
    const int n = matrix.size();
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n) - 1);
    for (int j = 0; j < n; ++j)
        if (j != target) order.push_back(j);
    const auto& row = matrix.scores[static_cast<std::size_t>(target)];
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return row[static_cast<std::size_t>(a)] < row[static_cast<std::size_t>(b)];
    });
    return order;
}

void mark_participation(SelectionReport& report) {
    report.next_participation.assign(report.selected.size(), false);
    for (const auto& sources : report.selected)
        for (int j : sources) report.next_participation[static_cast<std::size_t>(j)] = true;
}

}  // namespace

SelectionReport client_centric_selection(const SimilarityMatrix& matrix, int n_max) {
    if (n_max < 1) throw std::invalid_argument("client_centric_selection: n_max must be >= 1");
    const int n = matrix.size();
    SelectionReport report;
    report.selected.resize(static_cast<std::size_t>(n));
    report.criteria.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double criteria = selection_criteria(matrix, i);
        report.criteria[static_cast<std::size_t>(i)] = criteria;
        auto& chosen = report.selected[static_cast<std::size_t>(i)];
        for (int j : ranked_candidates(matrix, i)) {
            if (static_cast<int>(chosen.size()) >= n_max) break;
            if (matrix.scores[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > criteria)
                break;  // candidates are sorted, every later one fails too
            chosen.push_back(j);
        }
    }
    mark_participation(report);
    return report;
}

SelectionReport select_all_ranked(const SimilarityMatrix& matrix, int n_max) {
    if (n_max < 1) throw std::invalid_argument("select_all_ranked: n_max must be >= 1");
    const int n = matrix.size();
    SelectionReport report;
    report.selected.resize(static_cast<std::size_t>(n));
    report.criteria.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        report.criteria[static_cast<std::size_t>(i)] = selection_criteria(matrix, i);
        auto candidates = ranked_candidates(matrix, i);
        if (static_cast<int>(candidates.size()) > n_max) candidates.resize(static_cast<std::size_t>(n_max));
        report.selected[static_cast<std::size_t>(i)] = std::move(candidates);
    }
    mark_participation(report);
    return report;
}

std::map<int, double> aggregation_weights(const SimilarityMatrix& matrix, int target,
                                          const std::vector<int>& selected,
                                          const std::vector<bool>& participation) {
    if (std::find(selected.begin(), selected.end(), target) != selected.end())
        throw std::invalid_argument("aggregation_weights: target must not appear in its own sources");
    std::map<int, double> weights;
    weights[target] = 1.0;  // self: distance 0, so the raw weight is 1
    for (int j : selected) {
        const double a = participation[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
        weights[j] = 1.0 - a * matrix.scores[static_cast<std::size_t>(target)][static_cast<std::size_t>(j)];
    }
    double sum = 0.0;
    for (const auto& [id, w] : weights) sum += w;
    for (auto& [id, w] : weights) w /= sum;
    return weights;
}

std::map<int, double> uniform_aggregation_weights(int target, const std::vector<int>& selected) {
    if (std::find(selected.begin(), selected.end(), target) != selected.end())
        throw std::invalid_argument("uniform_aggregation_weights: target must not appear in its own sources");
    std::map<int, double> weights;
    const double w = 1.0 / static_cast<double>(selected.size() + 1);
    weights[target] = w;
    for (int j : selected) weights[j] = w;
    return weights;
}

ParamVector multi_source_aggregate(const std::map<int, ParamVector>& thetas,
                                   const std::map<int, double>& weights) {
    if (weights.empty()) throw std::invalid_argument("multi_source_aggregate: empty weights");
    double sum = 0.0;
    for (const auto& [id, w] : weights) {
        if (!thetas.count(id))
            throw std::invalid_argument("multi_source_aggregate: weight for unknown client " +
                                        std::to_string(id));
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("multi_source_aggregate: weights must sum to 1");

    ParamVector out(thetas.at(weights.begin()->first).size(), 0.0);
    for (const auto& [id, w] : weights) {
        const ParamVector& theta = thetas.at(id);
        if (theta.size() != out.size())
            throw std::invalid_argument("multi_source_aggregate: model length mismatch");
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * theta[k];
    }
    return out;
}

ParamVector run_sgd_epochs(ParamVector params, const ModelSpec& spec, const Batch& train,
                           int epochs, double lr, int batch_size, Rng& rng) {
    if (train.size() == 0) throw std::invalid_argument("run_sgd_epochs: empty train set");
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
            params = sgd_step(params, gradient(params, spec, mini), lr);
        }
    }
    return params;
}

ParamVector local_training(const ClientState& client, const ModelSpec& spec,
                           const FedccaHyper& hyper, Rng& rng) {
    hyper.validate();
    if (client.dataset.train.size() == 0)
        throw std::invalid_argument("local_training: empty train set");
    if (!client.participating) return client.theta;  // gated loss is zero, so no update
    return run_sgd_epochs(client.theta, spec, client.dataset.train, hyper.local_epochs, hyper.lr,
                          hyper.batch_size, rng);
}

ParamVector client_specific_training(const ClientState& client, const ModelSpec& spec,
                                     const FedccaHyper& hyper, Rng& rng) {
    hyper.validate();
    if (client.dataset.train.size() == 0)
        throw std::invalid_argument("client_specific_training: empty train set");
    return run_sgd_epochs(client.phi, spec, client.dataset.train, hyper.local_epochs, hyper.lr,
                          hyper.batch_size, rng);
}

}  // namespace fedcca
