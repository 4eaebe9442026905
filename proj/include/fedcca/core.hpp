#pragma once

#include <map>
#include <optional>
#include <vector>

#include "fedcca/data.hpp"
#include "fedcca/model.hpp"
#include "fedcca/rng.hpp"

namespace fedcca {

// One client's state across rounds. theta is the local model (aggregated),
// phi the client-specific model (trained every round, never aggregated).
struct ClientState {
    int client_id = 0;
    ParamVector theta;
    ParamVector phi;
    bool participating = true;
    ClientDataset dataset;
};

// Pairwise dissimilarity scores for one round: symmetric, zero diagonal,
// entries in [0,1).
struct SimilarityMatrix {
    int round = 0;
    std::vector<std::vector<double>> scores;

    int size() const { return static_cast<int>(scores.size()); }
};

struct SelectionReport {
    std::vector<std::vector<int>> selected;  // per target, source ids ascending by score
    std::vector<double> criteria;
    std::vector<bool> next_participation;    // true iff selected as a source by someone
};

struct FedccaHyper {
    std::optional<double> sigma;  // empty: median of pairwise distances each round
    int n_max = 5;
    int local_epochs = 5;
    double lr = 0.01;
    int batch_size = 32;
    double prox_mu = 0.01;  // baselines only

    void validate() const;
};

double euclidean_distance(const ParamVector& p, const ParamVector& q);

// 1 - exp(-d / sigma): increasing, concave, zero at zero, bounded in [0,1).
double attention_score(double d, double sigma);

std::vector<std::vector<double>> pairwise_distances(const std::vector<ParamVector>& fc_layers);

// Median of the upper-triangle entries; 1.0 when every distance is zero.
double median_pairwise_distance(const std::vector<std::vector<double>>& distances);

SimilarityMatrix dissimilarity_from_distances(const std::vector<std::vector<double>>& distances,
                                              double sigma, int round = 0);

SimilarityMatrix pairwise_dissimilarity(const std::vector<ParamVector>& fc_layers, double sigma,
                                        int round = 0);

// (1/2N) * sum of row i excluding the diagonal.
double selection_criteria(const SimilarityMatrix& matrix, int client);

// Per target: rank candidates ascending by score (ties to lower id), admit
// while score <= criteria and |S| < n_max, stop at the first failure.
SelectionReport client_centric_selection(const SimilarityMatrix& matrix, int n_max);

// Ablation variant: no admission threshold, just the n_max nearest.
SelectionReport select_all_ranked(const SimilarityMatrix& matrix, int n_max);

// Normalized aggregation coefficients over selected + self. Raw weight of a
// source j is 1 - a_j * score(target, j); self weight is 1.
std::map<int, double> aggregation_weights(const SimilarityMatrix& matrix, int target,
                                          const std::vector<int>& selected,
                                          const std::vector<bool>& participation);

// Ablation variant: uniform over selected + self.
std::map<int, double> uniform_aggregation_weights(int target, const std::vector<int>& selected);

// Convex combination of the source models under the given weights.
ParamVector multi_source_aggregate(const std::map<int, ParamVector>& thetas,
                                   const std::map<int, double>& weights);

// Epochs of mini-batch SGD over a shuffled train set; batch order comes from
// the supplied rng. Shared by theta and phi training and the baselines.
ParamVector run_sgd_epochs(ParamVector params, const ModelSpec& spec, const Batch& train,
                           int epochs, double lr, int batch_size, Rng& rng);

// Gated local update of theta: unchanged when the client is not participating.
ParamVector local_training(const ClientState& client, const ModelSpec& spec,
                           const FedccaHyper& hyper, Rng& rng);

// Ungated update of phi: runs every round regardless of participation.
ParamVector client_specific_training(const ClientState& client, const ModelSpec& spec,
                                     const FedccaHyper& hyper, Rng& rng);

}  // namespace fedcca
