#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "fedcca/model.hpp"
#include "fedcca/rng.hpp"

namespace fedcca {

// Raised when a partition cannot satisfy its constraints (a client would end
// up empty, or a class could not be assigned to any client).
struct InfeasiblePartitionError : std::runtime_error {
    explicit InfeasiblePartitionError(const std::string& what) : std::runtime_error(what) {}
};

// Gaussian-cluster pool generator. Class means sit on a regular polygon in
// the first two coordinates with adjacent means cluster_separation apart;
// the remaining coordinates are pure noise.
struct SyntheticSpec {
    int num_classes = 10;
    int feature_dim = 8;  // must be even (pairwise-plane rotation)
    int samples_per_class = 100;
    double cluster_separation = 4.0;
    double noise_std = 1.0;

    void validate() const;
};

enum class PartitionScheme { dirichlet, pathological };

struct PartitionPlan {
    PartitionScheme scheme = PartitionScheme::dirichlet;
    double alpha = 0.5;            // dirichlet only
    int classes_per_client = 2;    // pathological only
    int num_clients = 10;
    std::vector<double> domain_angles = {0.0};  // degrees, one per domain
    std::vector<int> client_domain_map;         // client id -> domain index
    double test_fraction = 0.2;

    void validate() const;
};

struct ClientDataset {
    int client_id = 0;
    Batch train;
    Batch test;
    int domain_id = 0;
    std::vector<long> label_histogram;  // over train, length = global class count
    std::vector<int> train_indices;     // into the source pool
    std::vector<int> test_indices;
};

Batch generate_base_pool(const SyntheticSpec& spec, Rng& rng);

// Per-class Dirichlet(alpha) proportions, largest-remainder rounding. Redraws
// up to 100 times if a client would receive zero samples.
std::vector<std::vector<int>> partition_dirichlet(const Batch& pool, int num_clients,
                                                  double alpha, Rng& rng);

// Each client gets exactly classes_per_client classes by cycling through a
// shuffled class list; each class's samples split equally among its clients.
std::vector<std::vector<int>> partition_pathological(const Batch& pool, int num_clients,
                                                     int classes_per_client, Rng& rng);

// Clockwise rotation of every consecutive coordinate pair (2k, 2k+1).
Matrix apply_domain_rotation(const Matrix& features, double angle_degrees);

// Partition, rotate per client domain, stratified train/test split.
std::vector<ClientDataset> build_clients(const Batch& pool, const PartitionPlan& plan, Rng& rng);

// 1 - mean normalized label entropy; 0 = uniform clients, -> 1 = single-class.
double heterogeneity_score(const std::vector<ClientDataset>& clients);

// Classes present in every client's train set (the realized label overlap).
std::vector<int> common_labels(const std::vector<ClientDataset>& clients);

// One train and one test CSV per client: feature_0..feature_{d-1},label.
void export_clients_csv(const std::vector<ClientDataset>& clients, const std::string& dir);

}  // namespace fedcca
