#include "fedcca/outputs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fedcca/config.hpp"

namespace fedcca {

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::ofstream open_file(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace

void write_outputs(const RunResult& result, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    {
        auto out = open_file(dir / "metrics.csv");
        out << "round,client_id,train_loss,test_accuracy\n";
        for (const auto& record : result.records)
            for (int i = 0; i < result.num_clients; ++i)
                out << record.round << "," << i << ","
                    << fixed6(record.train_loss[static_cast<std::size_t>(i)]) << ","
                    << fixed6(record.test_accuracy[static_cast<std::size_t>(i)]) << "\n";
    }
    {
        auto out = open_file(dir / "selection_counts.csv");
        for (const auto& row : result.selection_counts) {
            for (std::size_t j = 0; j < row.size(); ++j)
                out << row[j] << (j + 1 < row.size() ? "," : "");
            out << "\n";
        }
    }
    {
        nlohmann::ordered_json summary;
        summary["config_hash"] = result.config_hash;
        summary["rounds"] = result.rounds;
        summary["num_clients"] = result.num_clients;
        summary["final_accuracy_per_client"] = result.final_accuracy;
        summary["mean_accuracy"] = result.mean_accuracy;
        auto out = open_file(dir / "summary.json");
        out << summary.dump(2) << "\n";
    }
}

SweepAxis sweep_axis_from_name(const std::string& name) {
    if (name == "alpha") return SweepAxis::alpha;
    if (name == "local_epochs") return SweepAxis::local_epochs;
    if (name == "classes_per_client") return SweepAxis::classes_per_client;
    if (name == "algorithm") return SweepAxis::algorithm;
    if (name == "ablation") return SweepAxis::ablation;
    throw ConfigError("unknown sweep axis '" + name +
                      "' (expected alpha, local_epochs, classes_per_client, algorithm or ablation)");
}

std::string sweep_axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::alpha: return "alpha";
        case SweepAxis::local_epochs: return "local_epochs";
        case SweepAxis::classes_per_client: return "classes_per_client";
        case SweepAxis::algorithm: return "algorithm";
        case SweepAxis::ablation: return "ablation";
    }
    throw std::logic_error("sweep_axis_name: unknown axis");
}

namespace {

double parse_number(const std::string& value, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid " + what + " value '" + value + "'");
    }
}

long parse_integer(const std::string& value, const std::string& what) {
    try {
        std::size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid " + what + " value '" + value + "'");
    }
}

std::string shortest_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string canonical_axis_value(SweepAxis axis, const std::string& value) {
    switch (axis) {
        case SweepAxis::alpha:
            return shortest_double(parse_number(value, "alpha"));
        case SweepAxis::local_epochs:
            return std::to_string(parse_integer(value, "local_epochs"));
        case SweepAxis::classes_per_client:
            return std::to_string(parse_integer(value, "classes_per_client"));
        case SweepAxis::algorithm:
            return algorithm_name(algorithm_from_name(value));
        case SweepAxis::ablation:
            return ablation_name(ablation_from_name(value));
    }
    throw std::logic_error("canonical_axis_value: unknown axis");
}

ExperimentConfig apply_axis_value(const ExperimentConfig& base, SweepAxis axis,
                                  const std::string& value) {
    ExperimentConfig config = base;
    switch (axis) {
        case SweepAxis::alpha:
            config.plan.scheme = PartitionScheme::dirichlet;
            config.plan.alpha = parse_number(value, "alpha");
            break;
        case SweepAxis::local_epochs:
            config.hyper.local_epochs = static_cast<int>(parse_integer(value, "local_epochs"));
            break;
        case SweepAxis::classes_per_client:
            config.plan.scheme = PartitionScheme::pathological;
            config.plan.classes_per_client =
                static_cast<int>(parse_integer(value, "classes_per_client"));
            break;
        case SweepAxis::algorithm:
            config.algorithm = algorithm_from_name(value);
            break;
        case SweepAxis::ablation:
            config.ablation = ablation_from_name(value);
            break;
    }
    return config;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const std::string& out_dir, int workers) {
    if (spec.values.empty()) throw ConfigError("sweep values must be non-empty");
    if (spec.seeds.empty()) throw ConfigError("sweep seeds must be non-empty");

    // Canonicalize and sort the grid so rows and directories are stable.
    std::vector<std::string> values;
    values.reserve(spec.values.size());
    for (const auto& v : spec.values) values.push_back(canonical_axis_value(spec.axis, v));
    const bool numeric_axis = spec.axis == SweepAxis::alpha ||
                              spec.axis == SweepAxis::local_epochs ||
                              spec.axis == SweepAxis::classes_per_client;
    std::sort(values.begin(), values.end(), [&](const std::string& a, const std::string& b) {
        if (numeric_axis) return std::stod(a) < std::stod(b);
        return a < b;
    });
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<std::uint64_t> seeds = spec.seeds;
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

    std::filesystem::create_directories(out_dir);
    const std::string axis = sweep_axis_name(spec.axis);

    std::vector<SweepRow> rows;
    for (const auto& value : values) {
        for (const auto seed : seeds) {
            SweepRow row;
            row.axis_value = value;
            row.seed = seed;
            const std::string sub = axis + "_" + value + "_seed_" + std::to_string(seed);
            try {
                ExperimentConfig config = apply_axis_value(spec.base, spec.axis, value);
                config.master_seed = seed;
                const RunResult result = run_experiment(config, workers);
                write_outputs(result, (std::filesystem::path(out_dir) / sub).string());
                row.mean_accuracy = result.mean_accuracy;
                row.final_round = result.rounds;
                row.ok = true;
            } catch (const std::exception& e) {
                std::cerr << "sweep run " << sub << " failed: " << e.what() << "\n";
                row.mean_accuracy = std::nan("");
                row.final_round = 0;
                row.ok = false;
            }
            rows.push_back(std::move(row));
        }
    }

    auto out = open_file(std::filesystem::path(out_dir) / "sweep_summary.csv");
    out << "axis_value,seed,mean_accuracy,final_round,status\n";
    for (const auto& row : rows)
        out << row.axis_value << "," << row.seed << ","
            << (row.ok ? fixed6(row.mean_accuracy) : "") << "," << row.final_round << ","
            << (row.ok ? "ok" : "failed") << "\n";
    return rows;
}

}  // namespace fedcca
