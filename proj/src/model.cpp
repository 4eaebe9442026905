#include "fedcca/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fedcca {

std::vector<int> ModelSpec::layer_dims() const {
    std::vector<int> dims;
    dims.reserve(hidden_dims.size() + 2);
    dims.push_back(input_dim);
    for (int h : hidden_dims) dims.push_back(h);
    dims.push_back(num_classes);
    return dims;
}

void ModelSpec::validate() const {
    if (input_dim < 1) throw std::invalid_argument("ModelSpec: input_dim must be >= 1");
    if (num_classes < 2) throw std::invalid_argument("ModelSpec: num_classes must be >= 2");
    for (int h : hidden_dims)
        if (h < 1) throw std::invalid_argument("ModelSpec: hidden dims must be >= 1");
}

std::size_t param_count(const ModelSpec& spec) {
    const auto dims = spec.layer_dims();
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
        n += static_cast<std::size_t>(dims[l] + 1) * static_cast<std::size_t>(dims[l + 1]);
    return n;
}

namespace {

void check_params(const ParamVector& params, const ModelSpec& spec) {
    if (params.size() != param_count(spec))
        throw std::invalid_argument("param vector length " + std::to_string(params.size()) +
                                    " does not match spec (" + std::to_string(param_count(spec)) + ")");
}

void check_batch(const Batch& batch, const ModelSpec& spec) {
    if (batch.size() == 0) throw std::invalid_argument("empty batch");
    if (batch.features.rows != batch.labels.size())
        throw std::invalid_argument("feature rows do not match label count");
    if (batch.features.cols != static_cast<std::size_t>(spec.input_dim))
        throw std::invalid_argument("feature columns do not match input_dim");
    for (int y : batch.labels)
        if (y < 0 || y >= spec.num_classes)
            throw std::invalid_argument("label out of range");
}

double activate(double z, Activation a) {
    return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

double activate_deriv(double z, Activation a) {
    if (a == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
    const double t = std::tanh(z);
    return 1.0 - t * t;
}

// Pre-activations of every layer; the last entry holds the logits.
std::vector<Matrix> forward_pass(const ParamVector& params, const ModelSpec& spec,
                                 const Matrix& input) {
    const auto dims = spec.layer_dims();
    const std::size_t batch = input.rows;
    std::vector<Matrix> zs;
    zs.reserve(dims.size() - 1);

    const Matrix* prev = &input;
    Matrix activated;
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t fan_in = static_cast<std::size_t>(dims[l]);
        const std::size_t fan_out = static_cast<std::size_t>(dims[l + 1]);
        const double* w = params.data() + offset;
        const double* b = w + fan_in * fan_out;

        Matrix z(batch, fan_out);
        for (std::size_t r = 0; r < batch; ++r) {
            const double* x = &prev->values[r * fan_in];
            for (std::size_t o = 0; o < fan_out; ++o) {
                const double* wrow = w + o * fan_in;
                double acc = b[o];
                for (std::size_t i = 0; i < fan_in; ++i) acc += wrow[i] * x[i];
                z.at(r, o) = acc;
            }
        }
        zs.push_back(std::move(z));

        if (l + 2 < dims.size()) {
            const Matrix& zref = zs.back();
            activated = Matrix(batch, fan_out);
            for (std::size_t k = 0; k < zref.values.size(); ++k)
                activated.values[k] = activate(zref.values[k], spec.activation);
            prev = &activated;
        }
        offset += (fan_in + 1) * fan_out;
    }
    return zs;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix probs(logits.rows, logits.cols);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        double m = logits.at(r, 0);
        for (std::size_t c = 1; c < logits.cols; ++c) m = std::max(m, logits.at(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols; ++c) {
            const double e = std::exp(logits.at(r, c) - m);
            probs.at(r, c) = e;
            sum += e;
        }
        for (std::size_t c = 0; c < logits.cols; ++c) probs.at(r, c) /= sum;
    }
    return probs;
}

}  // namespace

ParamVector init_params(const ModelSpec& spec, Rng& rng) {
    spec.validate();
    ParamVector params(param_count(spec), 0.0);
    const auto dims = spec.layer_dims();
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t fan_in = static_cast<std::size_t>(dims[l]);
        const std::size_t fan_out = static_cast<std::size_t>(dims[l + 1]);
        const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (std::size_t k = 0; k < fan_in * fan_out; ++k)
            params[offset + k] = rng.uniform(-s, s);
        // biases stay zero
        offset += (fan_in + 1) * fan_out;
    }
    return params;
}

Matrix forward(const ParamVector& params, const ModelSpec& spec, const Matrix& features) {
    spec.validate();
    check_params(params, spec);
    if (features.cols != static_cast<std::size_t>(spec.input_dim))
        throw std::invalid_argument("feature columns do not match input_dim");
    const auto zs = forward_pass(params, spec, features);
    return softmax_rows(zs.back());
}

double cross_entropy_loss(const ParamVector& params, const ModelSpec& spec, const Batch& batch) {
    spec.validate();
    check_params(params, spec);
    check_batch(batch, spec);
    const auto zs = forward_pass(params, spec, batch.features);
    const Matrix& logits = zs.back();

    // loss = mean over samples of log-sum-exp(logits) - logit_true
    double total = 0.0;
    for (std::size_t r = 0; r < logits.rows; ++r) {
        double m = logits.at(r, 0);
        for (std::size_t c = 1; c < logits.cols; ++c) m = std::max(m, logits.at(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols; ++c) sum += std::exp(logits.at(r, c) - m);
        total += m + std::log(sum) - logits.at(r, static_cast<std::size_t>(batch.labels[r]));
    }
    return total / static_cast<double>(logits.rows);
}

ParamVector gradient(const ParamVector& params, const ModelSpec& spec, const Batch& batch) {
    spec.validate();
    check_params(params, spec);
    check_batch(batch, spec);

    const auto dims = spec.layer_dims();
    const std::size_t batch_n = batch.size();
    const std::size_t num_layers = dims.size() - 1;
    const auto zs = forward_pass(params, spec, batch.features);

    // Post-activation outputs per layer (input counts as layer -1).
    std::vector<Matrix> acts(num_layers > 1 ? num_layers - 1 : 0);
    for (std::size_t l = 0; l + 1 < num_layers; ++l) {
        acts[l] = Matrix(batch_n, zs[l].cols);
        for (std::size_t k = 0; k < zs[l].values.size(); ++k)
            acts[l].values[k] = activate(zs[l].values[k], spec.activation);
    }

    // dZ of the output layer: (softmax - onehot) / batch.
    Matrix dz = softmax_rows(zs.back());
    for (std::size_t r = 0; r < batch_n; ++r)
        dz.at(r, static_cast<std::size_t>(batch.labels[r])) -= 1.0;
    for (double& v : dz.values) v /= static_cast<double>(batch_n);

    // Layer offsets into the flat parameter vector.
    std::vector<std::size_t> offsets(num_layers);
    std::size_t offset = 0;
    for (std::size_t l = 0; l < num_layers; ++l) {
        offsets[l] = offset;
        offset += static_cast<std::size_t>(dims[l] + 1) * static_cast<std::size_t>(dims[l + 1]);
    }

    ParamVector grad(params.size(), 0.0);
    for (std::size_t l = num_layers; l-- > 0;) {
        const std::size_t fan_in = static_cast<std::size_t>(dims[l]);
        const std::size_t fan_out = static_cast<std::size_t>(dims[l + 1]);
        const Matrix& below = l == 0 ? batch.features : acts[l - 1];
        double* gw = grad.data() + offsets[l];
        double* gb = gw + fan_in * fan_out;

        for (std::size_t r = 0; r < batch_n; ++r) {
            const double* x = &below.values[r * fan_in];
            for (std::size_t o = 0; o < fan_out; ++o) {
                const double d = dz.at(r, o);
                if (d == 0.0) continue;
                double* gwrow = gw + o * fan_in;
                for (std::size_t i = 0; i < fan_in; ++i) gwrow[i] += d * x[i];
                gb[o] += d;
            }
        }

        if (l > 0) {
            const double* w = params.data() + offsets[l];
            Matrix dz_prev(batch_n, fan_in);
            for (std::size_t r = 0; r < batch_n; ++r) {
                for (std::size_t o = 0; o < fan_out; ++o) {
                    const double d = dz.at(r, o);
                    if (d == 0.0) continue;
                    const double* wrow = w + o * fan_in;
                    for (std::size_t i = 0; i < fan_in; ++i) dz_prev.at(r, i) += d * wrow[i];
                }
                for (std::size_t i = 0; i < fan_in; ++i)
                    dz_prev.at(r, i) *= activate_deriv(zs[l - 1].at(r, i), spec.activation);
            }
            dz = std::move(dz_prev);
        }
    }
    return grad;
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double lr) {
    if (params.size() != grad.size())
        throw std::invalid_argument("sgd_step: parameter/gradient length mismatch");
    ParamVector out(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) out[k] = params[k] - lr * grad[k];
    return out;
}

ParamVector extract_fc_layer(const ParamVector& params, const ModelSpec& spec) {
    spec.validate();
    check_params(params, spec);
    const auto dims = spec.layer_dims();
    const std::size_t fan_in = static_cast<std::size_t>(dims[dims.size() - 2]);
    const std::size_t fan_out = static_cast<std::size_t>(dims.back());
    const std::size_t len = (fan_in + 1) * fan_out;
    return ParamVector(params.end() - static_cast<std::ptrdiff_t>(len), params.end());
}

double accuracy(const ParamVector& params, const ModelSpec& spec, const Batch& batch) {
    spec.validate();
    check_params(params, spec);
    check_batch(batch, spec);
    const Matrix probs = forward(params, spec, batch.features);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < probs.rows; ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.cols; ++c)
            if (probs.at(r, c) > probs.at(r, best)) best = c;
        if (best == static_cast<std::size_t>(batch.labels[r])) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(probs.rows);
}

}  // namespace fedcca
