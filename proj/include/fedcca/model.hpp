#pragma once

#include <cstddef>
#include <vector>

#include "fedcca/rng.hpp"

namespace fedcca {

enum class Activation { relu, tanh };

// Feedforward softmax classifier described by its layer sizes. An empty
// hidden_dims list is plain multinomial logistic regression.
struct ModelSpec {
    int input_dim = 0;
    std::vector<int> hidden_dims;
    int num_classes = 0;
    Activation activation = Activation::relu;

    // input_dim, hidden dims..., num_classes
    std::vector<int> layer_dims() const;
    void validate() const;
};

// Parameters of every layer flattened into one vector. Per layer the layout
// is the weight matrix row-major by output unit followed by the biases, so a
// layer with fan_in inputs and fan_out outputs occupies (fan_in+1)*fan_out
// consecutive entries.
using ParamVector = std::vector<double>;

std::size_t param_count(const ModelSpec& spec);

// Dense row-major matrix, rows = samples.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct Batch {
    Matrix features;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
};

// Glorot-style uniform weights, zero biases. Identical seed, identical output.
ParamVector init_params(const ModelSpec& spec, Rng& rng);

// Class probabilities, one row per sample; rows sum to 1.
Matrix forward(const ParamVector& params, const ModelSpec& spec, const Matrix& features);

// Mean negative log-probability of the true class over the batch.
double cross_entropy_loss(const ParamVector& params, const ModelSpec& spec, const Batch& batch);

// Exact gradient of cross_entropy_loss with respect to every parameter.
ParamVector gradient(const ParamVector& params, const ModelSpec& spec, const Batch& batch);

// params - lr * grad.
ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double lr);

// Copy of the final layer (weights row-major by output unit, then biases).
ParamVector extract_fc_layer(const ParamVector& params, const ModelSpec& spec);

// Fraction of samples whose argmax probability matches the label; argmax
// ties break toward the lowest class index.
double accuracy(const ParamVector& params, const ModelSpec& spec, const Batch& batch);

}  // namespace fedcca
