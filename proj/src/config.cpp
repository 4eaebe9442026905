#include "fedcca/config.hpp"

#include <charconv>
#include <fstream>

namespace fedcca {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

std::string join(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) fail("'" + where + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) { known = true; break; }
        if (!known) fail("unknown key '" + join(where, it.key()) + "'");
    }
}

double get_double(const json& obj, const std::string& where, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) fail("'" + join(where, key) + "' must be a number");
    return v.get<double>();
}

long get_int(const json& obj, const std::string& where, const char* key, long fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail("'" + join(where, key) + "' must be an integer");
    return v.get<long>();
}

std::string get_string(const json& obj, const std::string& where, const char* key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) fail("'" + join(where, key) + "' must be a string");
    return v.get<std::string>();
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) fail("'" + join(where, key) + "' must be a boolean");
    return v.get<bool>();
}

ModelSpec parse_model(const json& obj, const std::string& where, const SyntheticSpec& data,
                      const ModelSpec* fallback) {
    check_keys(obj, where, {"input_dim", "hidden_dims", "num_classes", "activation"});
    ModelSpec spec;
    spec.input_dim = static_cast<int>(
        get_int(obj, where, "input_dim", fallback ? fallback->input_dim : data.feature_dim));
    spec.num_classes = static_cast<int>(
        get_int(obj, where, "num_classes", fallback ? fallback->num_classes : data.num_classes));
    if (obj.contains("hidden_dims")) {
        const auto& dims = obj.at("hidden_dims");
        if (!dims.is_array()) fail("'" + join(where, "hidden_dims") + "' must be an array of integers");
        for (const auto& d : dims) {
            if (!d.is_number_integer())
                fail("'" + join(where, "hidden_dims") + "' must be an array of integers");
            spec.hidden_dims.push_back(d.get<int>());
        }
    } else if (fallback) {
        spec.hidden_dims = fallback->hidden_dims;
    }
    const std::string act = get_string(
        obj, where, "activation",
        fallback && fallback->activation == Activation::tanh ? "tanh" : "relu");
    if (act == "relu") spec.activation = Activation::relu;
    else if (act == "tanh") spec.activation = Activation::tanh;
    else fail("'" + join(where, "activation") + "' must be one of relu, tanh");
    return spec;
}

}  // namespace

AblationVariant ablation_from_name(const std::string& name) {
    if (name == "full") return {true, true};
    if (name == "no_selection") return {false, true};
    if (name == "no_attention_aggregation") return {true, false};
    throw ConfigError("unknown ablation variant '" + name +
                      "' (expected full, no_selection or no_attention_aggregation)");
}

std::string ablation_name(const AblationVariant& variant) {
    if (variant.selection_enabled && variant.attention_aggregation_enabled) return "full";
    if (!variant.selection_enabled && variant.attention_aggregation_enabled) return "no_selection";
    if (variant.selection_enabled && !variant.attention_aggregation_enabled)
        return "no_attention_aggregation";
    return "no_selection_no_attention_aggregation";
}

ExperimentConfig parse_config_json(const nlohmann::json& root) {
    check_keys(root, "", {"algorithm", "rounds", "eval_every", "master_seed",
                          "participation_fraction", "model", "cs_model", "data", "hyper",
                          "ablation"});
    if (!root.contains("algorithm")) fail("missing required key 'algorithm'");

    ExperimentConfig config;
    config.algorithm = [&] {
        const std::string name = get_string(root, "", "algorithm", "");
        try {
            return algorithm_from_name(name);
        } catch (const std::invalid_argument& e) {
            fail(std::string("'algorithm': ") + e.what());
        }
    }();

    config.rounds = static_cast<int>(get_int(root, "", "rounds", 100));
    config.eval_every = static_cast<int>(get_int(root, "", "eval_every", 1));
    if (root.contains("master_seed")) {
        const auto& v = root.at("master_seed");
        if (!v.is_number_integer() && !v.is_number_unsigned())
            fail("'master_seed' must be an integer");
        config.master_seed = v.get<std::uint64_t>();
    }
    config.participation_fraction = get_double(root, "", "participation_fraction", 1.0);

    const json data = root.contains("data") ? root.at("data") : json::object();
    check_keys(data, "data",
               {"num_classes", "feature_dim", "samples_per_class", "cluster_separation",
                "noise_std", "num_clients", "partition", "domain_angles", "client_domain_map",
                "test_fraction"});
    config.data.num_classes = static_cast<int>(get_int(data, "data", "num_classes", 10));
    config.data.feature_dim = static_cast<int>(get_int(data, "data", "feature_dim", 8));
    config.data.samples_per_class =
        static_cast<int>(get_int(data, "data", "samples_per_class", 100));
    config.data.cluster_separation = get_double(data, "data", "cluster_separation", 4.0);
    config.data.noise_std = get_double(data, "data", "noise_std", 1.0);

    config.plan.num_clients = static_cast<int>(get_int(data, "data", "num_clients", 10));
    config.plan.test_fraction = get_double(data, "data", "test_fraction", 0.2);

    const json partition = data.contains("partition") ? data.at("partition") : json::object();
    const std::string scheme = get_string(partition, "data.partition", "scheme", "dirichlet");
    if (scheme == "dirichlet") {
        check_keys(partition, "data.partition", {"scheme", "alpha"});
        config.plan.scheme = PartitionScheme::dirichlet;
        config.plan.alpha = get_double(partition, "data.partition", "alpha", 0.5);
    } else if (scheme == "pathological") {
        check_keys(partition, "data.partition", {"scheme", "classes_per_client"});
        config.plan.scheme = PartitionScheme::pathological;
        config.plan.classes_per_client =
            static_cast<int>(get_int(partition, "data.partition", "classes_per_client", 2));
    } else {
        fail("'data.partition.scheme' must be one of dirichlet, pathological");
    }

    if (data.contains("domain_angles")) {
        const auto& angles = data.at("domain_angles");
        if (!angles.is_array() || angles.empty())
            fail("'data.domain_angles' must be a non-empty array of numbers");
        config.plan.domain_angles.clear();
        for (const auto& a : angles) {
            if (!a.is_number()) fail("'data.domain_angles' must be a non-empty array of numbers");
            config.plan.domain_angles.push_back(a.get<double>());
        }
    }
    if (data.contains("client_domain_map")) {
        const auto& map = data.at("client_domain_map");
        if (!map.is_array()) fail("'data.client_domain_map' must be an array of domain indices");
        for (const auto& d : map) {
            if (!d.is_number_integer())
                fail("'data.client_domain_map' must be an array of domain indices");
            config.plan.client_domain_map.push_back(d.get<int>());
        }
    } else {
        // Default: contiguous equal blocks over the domain list.
        config.plan.client_domain_map.resize(static_cast<std::size_t>(config.plan.num_clients));
        for (int i = 0; i < config.plan.num_clients; ++i)
            config.plan.client_domain_map[static_cast<std::size_t>(i)] =
                static_cast<int>(static_cast<std::size_t>(i) * config.plan.domain_angles.size() /
                                 static_cast<std::size_t>(config.plan.num_clients));
    }

    const json model = root.contains("model") ? root.at("model") : json::object();
    config.model_spec = parse_model(model, "model", config.data, nullptr);
    if (root.contains("cs_model"))
        config.cs_model_spec = parse_model(root.at("cs_model"), "cs_model", config.data,
                                           &config.model_spec);
    else
        config.cs_model_spec = config.model_spec;

    const json hyper = root.contains("hyper") ? root.at("hyper") : json::object();
    check_keys(hyper, "hyper",
               {"sigma", "n_max", "local_epochs", "learning_rate", "batch_size", "prox_mu"});
    if (hyper.contains("sigma")) {
        const auto& sigma = hyper.at("sigma");
        if (sigma.is_string()) {
            if (sigma.get<std::string>() != "median")
                fail("'hyper.sigma' must be a positive number or \"median\"");
            config.hyper.sigma.reset();
        } else if (sigma.is_number()) {
            config.hyper.sigma = sigma.get<double>();
        } else {
            fail("'hyper.sigma' must be a positive number or \"median\"");
        }
    }
    config.hyper.n_max = static_cast<int>(get_int(hyper, "hyper", "n_max", 5));
    config.hyper.local_epochs = static_cast<int>(get_int(hyper, "hyper", "local_epochs", 5));
    config.hyper.lr = get_double(hyper, "hyper", "learning_rate", 0.01);
    config.hyper.batch_size = static_cast<int>(get_int(hyper, "hyper", "batch_size", 32));
    config.hyper.prox_mu = get_double(hyper, "hyper", "prox_mu", 0.01);

    if (root.contains("ablation")) {
        if (config.algorithm != Algorithm::fedcca)
            fail("'ablation' requires algorithm=fedcca");
        const auto& ablation = root.at("ablation");
        if (ablation.is_string()) {
            config.ablation = ablation_from_name(ablation.get<std::string>());
        } else {
            check_keys(ablation, "ablation", {"selection_enabled", "attention_aggregation_enabled"});
            config.ablation.selection_enabled =
                get_bool(ablation, "ablation", "selection_enabled", true);
            config.ablation.attention_aggregation_enabled =
                get_bool(ablation, "ablation", "attention_aggregation_enabled", true);
        }
    }

    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open config file '" + path + "'");
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        fail("malformed config '" + path + "': " + e.what());
    }
    return parse_config_json(root);
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& config) {
    nlohmann::ordered_json j;
    j["algorithm"] = algorithm_name(config.algorithm);
    j["rounds"] = config.rounds;
    j["eval_every"] = config.eval_every;
    j["master_seed"] = config.master_seed;
    j["participation_fraction"] = config.participation_fraction;

    nlohmann::ordered_json data;
    data["num_classes"] = config.data.num_classes;
    data["feature_dim"] = config.data.feature_dim;
    data["samples_per_class"] = config.data.samples_per_class;
    data["cluster_separation"] = config.data.cluster_separation;
    data["noise_std"] = config.data.noise_std;
    data["num_clients"] = config.plan.num_clients;
    nlohmann::ordered_json partition;
    if (config.plan.scheme == PartitionScheme::dirichlet) {
        partition["scheme"] = "dirichlet";
        partition["alpha"] = config.plan.alpha;
    } else {
        partition["scheme"] = "pathological";
        partition["classes_per_client"] = config.plan.classes_per_client;
    }
    data["partition"] = partition;
    data["domain_angles"] = config.plan.domain_angles;
    data["client_domain_map"] = config.plan.client_domain_map;
    data["test_fraction"] = config.plan.test_fraction;
    j["data"] = data;

    auto model_json = [](const ModelSpec& spec) {
        nlohmann::ordered_json m;
        m["input_dim"] = spec.input_dim;
        m["hidden_dims"] = spec.hidden_dims;
        m["num_classes"] = spec.num_classes;
        m["activation"] = spec.activation == Activation::relu ? "relu" : "tanh";
        return m;
    };
    j["model"] = model_json(config.model_spec);
    j["cs_model"] = model_json(config.cs_model_spec);

    nlohmann::ordered_json hyper;
    if (config.hyper.sigma)
        hyper["sigma"] = *config.hyper.sigma;
    else
        hyper["sigma"] = "median";
    hyper["n_max"] = config.hyper.n_max;
    hyper["local_epochs"] = config.hyper.local_epochs;
    hyper["learning_rate"] = config.hyper.lr;
    hyper["batch_size"] = config.hyper.batch_size;
    hyper["prox_mu"] = config.hyper.prox_mu;
    j["hyper"] = hyper;

    if (config.algorithm == Algorithm::fedcca) {
        nlohmann::ordered_json ablation;
        ablation["selection_enabled"] = config.ablation.selection_enabled;
        ablation["attention_aggregation_enabled"] = config.ablation.attention_aggregation_enabled;
        j["ablation"] = ablation;
    }
    return j;
}

std::string config_hash(const ExperimentConfig& config) {
    const std::uint64_t h = fnv1a64(config_to_json(config).dump());
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 0; i < 16; ++i) buf[i] = digits[(h >> (60 - 4 * i)) & 0xF];
    buf[16] = '\0';
    return std::string(buf);
}

}  // namespace fedcca
