#include <doctest.h>

#include <cmath>
#include <vector>

#include "fedcca/model.hpp"

using namespace fedcca;

namespace {

// Test-local reference: scalar per-sample forward pass, written against the
// documented flat layout (per layer: weights row-major by output unit, then
// biases) without reusing the library's batched code.
std::vector<double> ref_probs(const ParamVector& params, const ModelSpec& spec,
                              const std::vector<double>& x) {
    std::vector<int> dims{spec.input_dim};
    for (int h : spec.hidden_dims) dims.push_back(h);
    dims.push_back(spec.num_classes);

    std::vector<double> cur = x;
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        std::vector<double> next(static_cast<std::size_t>(fan_out));
        for (int o = 0; o < fan_out; ++o) {
            double z = params[off + static_cast<std::size_t>(fan_in) * fan_out +
                              static_cast<std::size_t>(o)];
            for (int i = 0; i < fan_in; ++i)
                z += params[off + static_cast<std::size_t>(o) * fan_in + i] * cur[static_cast<std::size_t>(i)];
            next[static_cast<std::size_t>(o)] = z;
        }
        if (l + 2 < dims.size())
            for (double& v : next)
                v = spec.activation == Activation::relu ? std::max(v, 0.0) : std::tanh(v);
        cur = std::move(next);
        off += static_cast<std::size_t>(fan_in + 1) * static_cast<std::size_t>(fan_out);
    }
    double mx = cur[0];
    for (double v : cur) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : cur) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : cur) v /= sum;
    return cur;
}

Batch random_batch(const ModelSpec& spec, std::size_t n, Rng& rng) {
    Batch batch;
    batch.features = Matrix(n, static_cast<std::size_t>(spec.input_dim));
    batch.labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t d = 0; d < batch.features.cols; ++d)
            batch.features.at(r, d) = rng.normal();
        batch.labels[r] = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.num_classes)));
    }
    return batch;
}

std::vector<double> sample_row(const Batch& batch, std::size_t r) {
    std::vector<double> x(batch.features.cols);
    for (std::size_t d = 0; d < batch.features.cols; ++d) x[d] = batch.features.at(r, d);
    return x;
}

}  // namespace

TEST_CASE("param_count arithmetic") {
    CHECK(param_count({2, {}, 3}) == 9);
    CHECK(param_count({4, {5}, 3}) == 43);
    CHECK(param_count({8, {16, 12}, 10}) == 8 * 16 + 16 + 16 * 12 + 12 + 12 * 10 + 10);
}

TEST_CASE("init_params is deterministic with zero biases inside the Glorot bound") {
    const ModelSpec spec{4, {5}, 3};
    Rng a(17), b(17);
    const ParamVector pa = init_params(spec, a);
    const ParamVector pb = init_params(spec, b);
    CHECK(pa == pb);
    CHECK(pa.size() == 43);
    // first layer biases live right after the 20 weights
    for (std::size_t k = 20; k < 25; ++k) CHECK(pa[k] == 0.0);
    const double bound1 = std::sqrt(6.0 / (4 + 5));
    for (std::size_t k = 0; k < 20; ++k) CHECK(std::abs(pa[k]) < bound1);
}

TEST_CASE("forward: zero params give uniform rows, rows always sum to 1") {
    const ModelSpec spec{3, {4}, 5};
    const ParamVector zeros(param_count(spec), 0.0);
    Rng rng(5);
    Batch batch = random_batch(spec, 6, rng);
    const Matrix probs = forward(zeros, spec, batch.features);
    for (std::size_t r = 0; r < probs.rows; ++r)
        for (std::size_t c = 0; c < probs.cols; ++c)
            CHECK(probs.at(r, c) == doctest::Approx(0.2).epsilon(1e-12));

    const ParamVector params = init_params(spec, rng);
    const Matrix p2 = forward(params, spec, batch.features);
    for (std::size_t r = 0; r < p2.rows; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < p2.cols; ++c) {
            sum += p2.at(r, c);
            CHECK(p2.at(r, c) > 0.0);
            CHECK(p2.at(r, c) < 1.0);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("forward saturates under large crafted logits") {
    // C=2 logistic model on 1 feature: w = (t, -t), biases 0.
    const ModelSpec spec{1, {}, 2};
    ParamVector params{30.0, -30.0, 0.0, 0.0};
    Matrix x(1, 1);
    x.at(0, 0) = 1.0;
    const Matrix probs = forward(params, spec, x);
    CHECK(probs.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(probs.at(0, 1) < 1e-20);
}

TEST_CASE("forward rejects dimension mismatches") {
    const ModelSpec spec{3, {}, 2};
    Matrix x(1, 4);
    CHECK_THROWS_AS(forward(ParamVector(param_count(spec), 0.0), spec, x), std::invalid_argument);
    Matrix ok(1, 3);
    CHECK_THROWS_AS(forward(ParamVector(5, 0.0), spec, ok), std::invalid_argument);
}

TEST_CASE("cross_entropy_loss: uniform prediction gives ln C") {
    for (int c : {2, 3, 7}) {
        const ModelSpec spec{4, {3}, c};
        const ParamVector zeros(param_count(spec), 0.0);
        Rng rng(23);
        const Batch batch = random_batch(spec, 9, rng);
        CHECK(cross_entropy_loss(zeros, spec, batch) ==
              doctest::Approx(std::log(c)).epsilon(1e-12));
    }
}

TEST_CASE("cross_entropy_loss vanishes at a perfect prediction") {
    const ModelSpec spec{1, {}, 2};
    ParamVector params{40.0, -40.0, 0.0, 0.0};
    Batch batch;
    batch.features = Matrix(2, 1);
    batch.features.at(0, 0) = 1.0;
    batch.features.at(1, 0) = 2.0;
    batch.labels = {0, 0};
    CHECK(cross_entropy_loss(params, spec, batch) < 1e-12);
}

TEST_CASE("cross_entropy_loss matches a per-sample recomputation") {
    const ModelSpec spec{4, {6}, 3};
    Rng rng(31);
    const ParamVector params = init_params(spec, rng);
    const Batch batch = random_batch(spec, 5, rng);
    double expected = 0.0;
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const auto probs = ref_probs(params, spec, sample_row(batch, r));
        expected -= std::log(probs[static_cast<std::size_t>(batch.labels[r])]);
    }
    expected /= static_cast<double>(batch.size());
    CHECK(cross_entropy_loss(params, spec, batch) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cross_entropy_loss rejects an empty batch") {
    const ModelSpec spec{2, {}, 2};
    Batch empty;
    empty.features = Matrix(0, 2);
    CHECK_THROWS_AS(cross_entropy_loss(ParamVector(param_count(spec), 0.0), spec, empty),
                    std::invalid_argument);
}

TEST_CASE("gradient matches central finite differences") {
    // Includes 0, 1 and 2 hidden layers and both activations; relative error
    // floored at 1e-4 magnitude so near-zero coordinates compare absolutely.
    const std::vector<ModelSpec> specs = {
        {3, {}, 2, Activation::relu},
        {4, {5}, 3, Activation::relu},
        {3, {4, 6}, 3, Activation::tanh},
    };
    Rng rng(47);
    for (const auto& spec : specs) {
        for (int rep = 0; rep < 2; ++rep) {
            const ParamVector params = init_params(spec, rng);
            const Batch batch = random_batch(spec, 7, rng);
            const ParamVector grad = gradient(params, spec, batch);
            const double h = 1e-5;
            double worst = 0.0;
            for (std::size_t k = 0; k < params.size(); ++k) {
                ParamVector lo = params, hi = params;
                lo[k] -= h;
                hi[k] += h;
                const double fd = (cross_entropy_loss(hi, spec, batch) -
                                   cross_entropy_loss(lo, spec, batch)) /
                                  (2.0 * h);
                const double rel = std::abs(grad[k] - fd) / std::max(std::abs(fd), 1e-4);
                worst = std::max(worst, rel);
            }
            CHECK(worst < 1e-4);
        }
    }
}

TEST_CASE("gradient is near zero at a perfect fit") {
    const ModelSpec spec{1, {}, 2};
    ParamVector params{40.0, -40.0, 0.0, 0.0};
    Batch batch;
    batch.features = Matrix(1, 1);
    batch.features.at(0, 0) = 1.0;
    batch.labels = {0};
    const ParamVector grad = gradient(params, spec, batch);
    double norm = 0.0;
    for (double g : grad) norm += g * g;
    CHECK(std::sqrt(norm) < 1e-12);
}

TEST_CASE("gradient is invariant under sample duplication") {
    const ModelSpec spec{3, {4}, 3};
    Rng rng(53);
    const ParamVector params = init_params(spec, rng);
    const Batch batch = random_batch(spec, 4, rng);
    Batch doubled;
    doubled.features = Matrix(8, 3);
    doubled.labels.resize(8);
    for (std::size_t r = 0; r < 8; ++r) {
        for (std::size_t d = 0; d < 3; ++d)
            doubled.features.at(r, d) = batch.features.at(r % 4, d);
        doubled.labels[r] = batch.labels[r % 4];
    }
    const ParamVector g1 = gradient(params, spec, batch);
    const ParamVector g2 = gradient(params, spec, doubled);
    for (std::size_t k = 0; k < g1.size(); ++k)
        CHECK(g1[k] == doctest::Approx(g2[k]).epsilon(1e-12));
}

TEST_CASE("sgd_step arithmetic and identities") {
    CHECK(sgd_step({1.0, 2.0}, {1.0, 1.0}, 0.5) == ParamVector{0.5, 1.5});
    CHECK(sgd_step({1.0, 2.0}, {0.0, 0.0}, 0.3) == ParamVector{1.0, 2.0});
    CHECK(sgd_step({1.0, 2.0}, {5.0, -5.0}, 0.0) == ParamVector{1.0, 2.0});
    CHECK_THROWS_AS(sgd_step({1.0}, {1.0, 2.0}, 0.1), std::invalid_argument);
}

TEST_CASE("extract_fc_layer slices the final layer only") {
    const ModelSpec single{2, {}, 3};
    Rng rng(61);
    const ParamVector p1 = init_params(single, rng);
    CHECK(extract_fc_layer(p1, single) == p1);

    const ModelSpec deep{4, {5}, 3};
    ParamVector p2 = init_params(deep, rng);
    const ParamVector fc = extract_fc_layer(p2, deep);
    CHECK(fc.size() == 18);
    CHECK(ParamVector(p2.end() - 18, p2.end()) == fc);
    // hidden-layer perturbation leaves the extraction unchanged
    p2[0] += 100.0;
    p2[10] -= 3.0;
    CHECK(extract_fc_layer(p2, deep) == fc);
}

TEST_CASE("accuracy: perfect model, tie-break, recount oracle") {
    const ModelSpec spec{1, {}, 2};
    ParamVector perfect{40.0, -40.0, 0.0, 0.0};
    Batch batch;
    batch.features = Matrix(2, 1);
    batch.features.at(0, 0) = 1.0;
    batch.features.at(1, 0) = -1.0;
    batch.labels = {0, 1};
    CHECK(accuracy(perfect, spec, batch) == 1.0);

    // zero params: every row ties, argmax goes to class 0
    const ParamVector zeros(4, 0.0);
    Batch mixed;
    mixed.features = Matrix(4, 1);
    for (std::size_t r = 0; r < 4; ++r) mixed.features.at(r, 0) = static_cast<double>(r);
    mixed.labels = {0, 1, 0, 1};
    CHECK(accuracy(zeros, spec, mixed) == 0.5);

    const ModelSpec rich{4, {6}, 3};
    Rng rng(67);
    const ParamVector params = init_params(rich, rng);
    const Batch big = random_batch(rich, 40, rng);
    int correct = 0;
    for (std::size_t r = 0; r < big.size(); ++r) {
        const auto probs = ref_probs(params, rich, sample_row(big, r));
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.size(); ++c)
            if (probs[c] > probs[best]) best = c;
        if (best == static_cast<std::size_t>(big.labels[r])) ++correct;
    }
    CHECK(accuracy(params, rich, big) ==
          doctest::Approx(static_cast<double>(correct) / 40.0).epsilon(1e-12));
}
