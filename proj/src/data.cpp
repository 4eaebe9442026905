#include "fedcca/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace fedcca {

namespace {

constexpr double kPi = 3.14159265358979323846;

int class_count(const Batch& pool) {
    int c = 0;
    for (int y : pool.labels) c = std::max(c, y + 1);
    return c;
}

std::vector<std::vector<int>> indices_by_class(const Batch& pool, int num_classes) {
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(num_classes));
    for (std::size_t k = 0; k < pool.labels.size(); ++k)
        by_class[static_cast<std::size_t>(pool.labels[k])].push_back(static_cast<int>(k));
    return by_class;
}

// Integer apportionment of `total` by the given non-negative quotas:
// floors first, then +1 by descending fractional part (ties to lower index).
std::vector<int> largest_remainder(const std::vector<double>& quotas, int total) {
    const std::size_t n = quotas.size();
    std::vector<int> counts(n);
    std::vector<std::pair<double, std::size_t>> fractions(n);
    int assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = std::floor(quotas[i]);
        counts[i] = static_cast<int>(f);
        assigned += counts[i];
        fractions[i] = {quotas[i] - f, i};
    }
    std::sort(fractions.begin(), fractions.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t k = 0; assigned < total; ++k) {
        counts[fractions[k % n].second] += 1;
        ++assigned;
    }
    return counts;
}

}  // namespace

void SyntheticSpec::validate() const {
    if (num_classes < 2) throw std::invalid_argument("SyntheticSpec: num_classes must be >= 2");
    if (feature_dim < 2 || feature_dim % 2 != 0)
        throw std::invalid_argument("SyntheticSpec: feature_dim must be even and >= 2");
    if (samples_per_class < 1)
        throw std::invalid_argument("SyntheticSpec: samples_per_class must be >= 1");
    if (!(cluster_separation > 0.0))
        throw std::invalid_argument("SyntheticSpec: cluster_separation must be positive");
    if (!(noise_std > 0.0)) throw std::invalid_argument("SyntheticSpec: noise_std must be positive");
}

void PartitionPlan::validate() const {
    if (num_clients < 2) throw std::invalid_argument("PartitionPlan: num_clients must be >= 2");
    if (scheme == PartitionScheme::dirichlet && !(alpha > 0.0))
        throw std::invalid_argument("PartitionPlan: alpha must be positive");
    if (scheme == PartitionScheme::pathological && classes_per_client < 1)
        throw std::invalid_argument("PartitionPlan: classes_per_client must be >= 1");
    if (domain_angles.empty())
        throw std::invalid_argument("PartitionPlan: domain_angles must be non-empty");
    if (!client_domain_map.empty()) {
        if (client_domain_map.size() != static_cast<std::size_t>(num_clients))
            throw std::invalid_argument("PartitionPlan: client_domain_map must cover all clients");
        for (int d : client_domain_map)
            if (d < 0 || d >= static_cast<int>(domain_angles.size()))
                throw std::invalid_argument("PartitionPlan: client_domain_map references unknown domain");
    }
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("PartitionPlan: test_fraction must be in (0,1)");
}

Batch generate_base_pool(const SyntheticSpec& spec, Rng& rng) {
    spec.validate();
    const int c_total = spec.num_classes;
    const std::size_t dim = static_cast<std::size_t>(spec.feature_dim);
    const std::size_t total =
        static_cast<std::size_t>(c_total) * static_cast<std::size_t>(spec.samples_per_class);

    // Regular polygon in the first two coordinates; adjacent means are
    // exactly cluster_separation apart.
    const double radius = spec.cluster_separation / (2.0 * std::sin(kPi / c_total));

    Batch pool;
    pool.features = Matrix(total, dim);
    pool.labels.resize(total);
    std::size_t row = 0;
    for (int c = 0; c < c_total; ++c) {
        const double angle = 2.0 * kPi * c / c_total;
        const double mx = radius * std::cos(angle);
        const double my = radius * std::sin(angle);
        for (int s = 0; s < spec.samples_per_class; ++s, ++row) {
            pool.features.at(row, 0) = mx + spec.noise_std * rng.normal();
            pool.features.at(row, 1) = my + spec.noise_std * rng.normal();
            for (std::size_t d = 2; d < dim; ++d)
                pool.features.at(row, d) = spec.noise_std * rng.normal();
            pool.labels[row] = c;
        }
    }
    return pool;
}

std::vector<std::vector<int>> partition_dirichlet(const Batch& pool, int num_clients,
                                                  double alpha, Rng& rng) {
    if (num_clients < 1) throw std::invalid_argument("partition_dirichlet: num_clients must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("partition_dirichlet: alpha must be positive");
    if (pool.size() == 0) throw std::invalid_argument("partition_dirichlet: empty pool");

    const int c_total = class_count(pool);
    const auto by_class = indices_by_class(pool, c_total);
    const std::size_t n_clients = static_cast<std::size_t>(num_clients);

    for (int attempt = 0; attempt <= 100; ++attempt) {
        std::vector<std::vector<int>> shards(n_clients);
        for (int c = 0; c < c_total; ++c) {
            const auto& members = by_class[static_cast<std::size_t>(c)];
            if (members.empty()) continue;
            const auto proportions = rng.dirichlet(alpha, n_clients);
            std::vector<double> quotas(n_clients);
            for (std::size_t i = 0; i < n_clients; ++i)
                quotas[i] = proportions[i] * static_cast<double>(members.size());
            const auto counts = largest_remainder(quotas, static_cast<int>(members.size()));
            std::size_t cursor = 0;
            for (std::size_t i = 0; i < n_clients; ++i)
                for (int k = 0; k < counts[i]; ++k) shards[i].push_back(members[cursor++]);
        }
        const bool any_empty = std::any_of(shards.begin(), shards.end(),
                                           [](const auto& s) { return s.empty(); });
        if (!any_empty) return shards;
    }
    throw InfeasiblePartitionError(
        "partition_dirichlet: a client received zero samples in 100 consecutive redraws");
}

std::vector<std::vector<int>> partition_pathological(const Batch& pool, int num_clients,
                                                     int classes_per_client, Rng& rng) {
    if (num_clients < 1)
        throw std::invalid_argument("partition_pathological: num_clients must be >= 1");
    if (pool.size() == 0) throw std::invalid_argument("partition_pathological: empty pool");
    const int c_total = class_count(pool);
    if (classes_per_client < 1 || classes_per_client > c_total)
        throw std::invalid_argument("partition_pathological: classes_per_client out of range");
    if (static_cast<long>(num_clients) * classes_per_client < c_total)
        throw InfeasiblePartitionError(
            "partition_pathological: num_clients * classes_per_client < num_classes leaves a class unassigned");

    std::vector<int> class_order(static_cast<std::size_t>(c_total));
    std::iota(class_order.begin(), class_order.end(), 0);
    rng.shuffle(class_order);

    // Cycle the shuffled class list across clients.
    std::vector<std::vector<int>> clients_of_class(static_cast<std::size_t>(c_total));
    for (int i = 0; i < num_clients; ++i) {
        for (int k = 0; k < classes_per_client; ++k) {
            const int cls = class_order[static_cast<std::size_t>(
                (static_cast<long>(i) * classes_per_client + k) % c_total)];
            clients_of_class[static_cast<std::size_t>(cls)].push_back(i);
        }
    }

    const auto by_class = indices_by_class(pool, c_total);
    std::vector<std::vector<int>> shards(static_cast<std::size_t>(num_clients));
    for (int c = 0; c < c_total; ++c) {
        const auto& members = by_class[static_cast<std::size_t>(c)];
        auto holders = clients_of_class[static_cast<std::size_t>(c)];
        if (holders.empty() || members.empty()) continue;
        std::sort(holders.begin(), holders.end());
        const int base = static_cast<int>(members.size()) / static_cast<int>(holders.size());
        const int rem = static_cast<int>(members.size()) % static_cast<int>(holders.size());
        std::size_t cursor = 0;
        for (std::size_t h = 0; h < holders.size(); ++h) {
            const int take = base + (static_cast<int>(h) < rem ? 1 : 0);
            for (int k = 0; k < take; ++k)
                shards[static_cast<std::size_t>(holders[h])].push_back(members[cursor++]);
        }
    }

    const bool any_empty =
        std::any_of(shards.begin(), shards.end(), [](const auto& s) { return s.empty(); });
    if (any_empty)
        throw InfeasiblePartitionError("partition_pathological: a client received zero samples");
    return shards;
}

Matrix apply_domain_rotation(const Matrix& features, double angle_degrees) {
    if (features.cols % 2 != 0)
        throw std::invalid_argument("apply_domain_rotation: feature dimension must be even");
    const double theta = angle_degrees * kPi / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Matrix out(features.rows, features.cols);
    for (std::size_t r = 0; r < features.rows; ++r) {
        for (std::size_t d = 0; d + 1 < features.cols; d += 2) {
            const double x = features.at(r, d);
            const double y = features.at(r, d + 1);
            out.at(r, d) = x * c + y * s;       // clockwise
            out.at(r, d + 1) = -x * s + y * c;
        }
    }
    return out;
}

std::vector<ClientDataset> build_clients(const Batch& pool, const PartitionPlan& plan, Rng& rng) {
    plan.validate();
    const int c_total = class_count(pool);

    std::vector<std::vector<int>> shards;
    if (plan.scheme == PartitionScheme::dirichlet)
        shards = partition_dirichlet(pool, plan.num_clients, plan.alpha, rng);
    else
        shards = partition_pathological(pool, plan.num_clients, plan.classes_per_client, rng);

    // Default domain map: contiguous equal blocks over the angle list.
    std::vector<int> domain_map = plan.client_domain_map;
    if (domain_map.empty()) {
        domain_map.resize(static_cast<std::size_t>(plan.num_clients));
        for (int i = 0; i < plan.num_clients; ++i)
            domain_map[static_cast<std::size_t>(i)] =
                static_cast<int>(static_cast<std::size_t>(i) * plan.domain_angles.size() /
                                 static_cast<std::size_t>(plan.num_clients));
    }

    std::vector<ClientDataset> clients;
    clients.reserve(shards.size());
    for (int i = 0; i < plan.num_clients; ++i) {
        const auto& shard = shards[static_cast<std::size_t>(i)];
        const std::size_t k_total = shard.size();
        if (k_total < 2)
            throw InfeasiblePartitionError("build_clients: client " + std::to_string(i) +
                                           " has fewer than 2 samples and cannot be split");

        // Rotate the whole shard into the client's domain.
        Matrix raw(k_total, pool.features.cols);
        for (std::size_t r = 0; r < k_total; ++r)
            for (std::size_t d = 0; d < pool.features.cols; ++d)
                raw.at(r, d) = pool.features.at(static_cast<std::size_t>(shard[r]), d);
        const int domain = domain_map[static_cast<std::size_t>(i)];
        const Matrix rotated =
            apply_domain_rotation(raw, plan.domain_angles[static_cast<std::size_t>(domain)]);

        // Stratified split: per-class quotas, largest-remainder, total clamped
        // so both sides stay non-empty.
        std::vector<std::vector<int>> rows_by_class(static_cast<std::size_t>(c_total));
        for (std::size_t r = 0; r < k_total; ++r)
            rows_by_class[static_cast<std::size_t>(pool.labels[static_cast<std::size_t>(shard[r])])]
                .push_back(static_cast<int>(r));

        int test_total = static_cast<int>(std::llround(static_cast<double>(k_total) * plan.test_fraction));
        test_total = std::clamp(test_total, 1, static_cast<int>(k_total) - 1);
        std::vector<double> quotas(static_cast<std::size_t>(c_total));
        for (int c = 0; c < c_total; ++c)
            quotas[static_cast<std::size_t>(c)] =
                static_cast<double>(rows_by_class[static_cast<std::size_t>(c)].size()) *
                plan.test_fraction;
        const auto test_counts = largest_remainder(quotas, test_total);

        std::vector<int> train_rows, test_rows;
        for (int c = 0; c < c_total; ++c) {
            auto& rows = rows_by_class[static_cast<std::size_t>(c)];
            rng.shuffle(rows);
            const int n_test = std::min<int>(test_counts[static_cast<std::size_t>(c)],
                                             static_cast<int>(rows.size()));
            for (std::size_t r = 0; r < rows.size(); ++r)
                (static_cast<int>(r) < n_test ? test_rows : train_rows).push_back(rows[r]);
        }
        std::sort(train_rows.begin(), train_rows.end());
        std::sort(test_rows.begin(), test_rows.end());
        if (train_rows.empty() || test_rows.empty())
            throw InfeasiblePartitionError("build_clients: degenerate train/test split for client " +
                                           std::to_string(i));

        ClientDataset client;
        client.client_id = i;
        client.domain_id = domain;
        client.label_histogram.assign(static_cast<std::size_t>(c_total), 0);

        auto fill = [&](const std::vector<int>& rows, Batch& dst, std::vector<int>& idx, bool hist) {
            dst.features = Matrix(rows.size(), rotated.cols);
            dst.labels.resize(rows.size());
            idx.reserve(rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const std::size_t src = static_cast<std::size_t>(rows[r]);
                for (std::size_t d = 0; d < rotated.cols; ++d)
                    dst.features.at(r, d) = rotated.at(src, d);
                dst.labels[r] = pool.labels[static_cast<std::size_t>(shard[src])];
                idx.push_back(shard[src]);
                if (hist) client.label_histogram[static_cast<std::size_t>(dst.labels[r])] += 1;
            }
        };
        fill(train_rows, client.train, client.train_indices, true);
        fill(test_rows, client.test, client.test_indices, false);
        clients.push_back(std::move(client));
    }
    return clients;
}

double heterogeneity_score(const std::vector<ClientDataset>& clients) {
    if (clients.empty()) throw std::invalid_argument("heterogeneity_score: empty client list");
    double mean_norm_entropy = 0.0;
    for (const auto& client : clients) {
        const double total = static_cast<double>(
            std::accumulate(client.label_histogram.begin(), client.label_histogram.end(), 0L));
        double h = 0.0;
        for (long n : client.label_histogram) {
            if (n == 0) continue;
            const double p = static_cast<double>(n) / total;
            h -= p * std::log(p);
        }
        mean_norm_entropy += h / std::log(static_cast<double>(client.label_histogram.size()));
    }
    return 1.0 - mean_norm_entropy / static_cast<double>(clients.size());
}

std::vector<int> common_labels(const std::vector<ClientDataset>& clients) {
    if (clients.empty()) return {};
    std::vector<int> common;
    const std::size_t c_total = clients.front().label_histogram.size();
    for (std::size_t c = 0; c < c_total; ++c) {
        const bool everywhere = std::all_of(clients.begin(), clients.end(), [&](const auto& cl) {
            return c < cl.label_histogram.size() && cl.label_histogram[c] > 0;
        });
        if (everywhere) common.push_back(static_cast<int>(c));
    }
    return common;
}

namespace {

std::string shortest_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_batch_csv(const Batch& batch, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (std::size_t d = 0; d < batch.features.cols; ++d) out << "feature_" << d << ",";
    out << "label\n";
    for (std::size_t r = 0; r < batch.features.rows; ++r) {
        for (std::size_t d = 0; d < batch.features.cols; ++d)
            out << shortest_double(batch.features.at(r, d)) << ",";
        out << batch.labels[r] << "\n";
    }
}

}  // namespace

void export_clients_csv(const std::vector<ClientDataset>& clients, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& client : clients) {
        const std::string stem = "client_" + std::to_string(client.client_id);
        write_batch_csv(client.train, std::filesystem::path(dir) / (stem + "_train.csv"));
        write_batch_csv(client.test, std::filesystem::path(dir) / (stem + "_test.csv"));
    }
}

}  // namespace fedcca
