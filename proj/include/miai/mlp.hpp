#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "miai/model.hpp"

namespace miai {

struct MlpConfig {
    std::vector<int> hidden{64, 64, 64};
    int epochs = 50;
    int batch = 64;
    double learning_rate = 0.005;  // Adam
    uint64_t seed = 1;
};

// Fixed record -> feature-vector mapping: one-hot categoricals, standardized
// numerics. Imputation (mode / median) and standardization statistics come
// from the training split and are frozen into the model.
struct FeatureEncoder {
    struct Column {
        int attribute = -1;
        bool categorical = false;
        int domain_size = 0;
        int offset = 0;
        double mean = 0.0;
        double stdev = 1.0;
        int impute_cat = 0;
        double impute_num = 0.0;
    };
    std::vector<Column> columns;
    int width = 0;

    static FeatureEncoder fit(const Dataset& train) {
        FeatureEncoder enc;
        const auto& schema = train.schema();
        int target = schema.target_index();
        for (int a = 0; a < static_cast<int>(schema.size()); ++a) {
            if (a == target) continue;
            const Attribute& attr = schema.at(a);
            Column col;
            col.attribute = a;
            col.offset = enc.width;
            if (attr.is_categorical()) {
                col.categorical = true;
                col.domain_size = static_cast<int>(attr.domain.size());
                std::vector<int64_t> counts(col.domain_size, 0);
                for (const auto& r : train.records())
                    if (!r.values[a].is_missing()) ++counts[r.values[a].cat];
                int mode = 0;
                for (int i = 1; i < col.domain_size; ++i)
                    if (counts[i] > counts[mode]) mode = i;
                col.impute_cat = mode;
                enc.width += col.domain_size;
            } else {
                std::vector<double> xs;
                for (const auto& r : train.records())
                    if (!r.values[a].is_missing()) xs.push_back(r.values[a].num);
                if (xs.empty()) xs.push_back(0.0);
                double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
                double var = 0.0;
                for (double x : xs) var += (x - mean) * (x - mean);
                var /= xs.size();
                col.mean = mean;
                col.stdev = var > 0 ? std::sqrt(var) : 1.0;
                std::sort(xs.begin(), xs.end());
                col.impute_num = xs[xs.size() / 2];
                enc.width += 1;
            }
            enc.columns.push_back(col);
        }
        return enc;
    }

    void encode(const Record& r, std::vector<double>& out) const {
        out.assign(width, 0.0);
        for (const auto& col : columns) {
            const Value& v = r.values[col.attribute];
            if (col.categorical) {
                int idx = v.is_missing() ? col.impute_cat : v.cat;
                if (idx >= 0 && idx < col.domain_size) out[col.offset + idx] = 1.0;
            } else {
                double x = v.is_missing() ? col.impute_num : v.num;
                out[col.offset] = (x - col.mean) / col.stdev;
            }
        }
    }
};

// Bare feed-forward net over a flat parameter vector: ReLU hidden layers,
// softmax output, mean cross-entropy loss. Kept separate from the trained
// artifact so the loss/gradient pair can be checked directly.
class MlpNet {
public:
    explicit MlpNet(std::vector<int> dims) : dims_(std::move(dims)) {
        if (dims_.size() < 2) throw ValidationError("net needs input and output dims");
        count_ = 0;
        for (size_t l = 0; l + 1 < dims_.size(); ++l)
            count_ += static_cast<size_t>(dims_[l + 1]) * dims_[l] + dims_[l + 1];
    }

    const std::vector<int>& dims() const { return dims_; }
    size_t param_count() const { return count_; }

    std::vector<double> init_params(uint64_t seed) const {
        std::vector<double> params(count_);
        Rng rng(seed ^ 0x11217);
        size_t p = 0;
        for (size_t l = 0; l + 1 < dims_.size(); ++l) {
            double scale = std::sqrt(2.0 / dims_[l]);  // He init for ReLU stacks
            for (int i = 0; i < dims_[l + 1] * dims_[l]; ++i) params[p++] = rng.normal() * scale;
            for (int i = 0; i < dims_[l + 1]; ++i) params[p++] = 0.0;
        }
        return params;
    }

    std::vector<double> forward(const std::vector<double>& params, const std::vector<double>& x) const {
        std::vector<std::vector<double>> acts;
        return forward_impl(params, x, acts);
    }

    double loss(const std::vector<double>& params, const std::vector<std::vector<double>>& xs,
                const std::vector<int>& ys) const {
        double total = 0.0;
        for (size_t i = 0; i < xs.size(); ++i) {
            auto probs = forward(params, xs[i]);
            total += -std::log(std::max(probs[ys[i]], 1e-300));
        }
        return total / static_cast<double>(xs.size());
    }

    // Analytic gradient of `loss` in the same flat layout.
    std::vector<double> gradient(const std::vector<double>& params,
                                 const std::vector<std::vector<double>>& xs,
                                 const std::vector<int>& ys) const {
        std::vector<double> grad(count_, 0.0);
        size_t layers = dims_.size() - 1;
        for (size_t i = 0; i < xs.size(); ++i) {
            std::vector<std::vector<double>> acts;  // acts[0] = input, acts[l] = post-activation
            auto probs = forward_impl(params, xs[i], acts);
            std::vector<double> delta = probs;  // dL/dlogits = p - onehot
            delta[ys[i]] -= 1.0;
            for (size_t l = layers; l-- > 0;) {
                auto [w_off, b_off] = layer_offsets(l);
                int in = dims_[l], out = dims_[l + 1];
                const auto& a_in = acts[l];
                for (int o = 0; o < out; ++o) {
                    double d = delta[o];
                    grad[b_off + o] += d;
                    for (int j = 0; j < in; ++j) grad[w_off + o * in + j] += d * a_in[j];
                }
                if (l == 0) break;
                std::vector<double> prev(in, 0.0);
                for (int j = 0; j < in; ++j) {
                    if (a_in[j] <= 0.0) continue;  // ReLU gate
                    double s = 0.0;
                    for (int o = 0; o < out; ++o) s += params[w_off + o * in + j] * delta[o];
                    prev[j] = s;
                }
                delta = std::move(prev);
            }
        }
        double inv = 1.0 / static_cast<double>(xs.size());
        for (double& g : grad) g *= inv;
        return grad;
    }

private:
    std::pair<size_t, size_t> layer_offsets(size_t l) const {
        size_t off = 0;
        for (size_t k = 0; k < l; ++k)
            off += static_cast<size_t>(dims_[k + 1]) * dims_[k] + dims_[k + 1];
        size_t w_off = off;
        size_t b_off = off + static_cast<size_t>(dims_[l + 1]) * dims_[l];
        return {w_off, b_off};
    }

    std::vector<double> forward_impl(const std::vector<double>& params, const std::vector<double>& x,
                                     std::vector<std::vector<double>>& acts) const {
        acts.clear();
        acts.push_back(x);
        std::vector<double> cur = x;
        size_t layers = dims_.size() - 1;
        for (size_t l = 0; l < layers; ++l) {
            auto [w_off, b_off] = layer_offsets(l);
            int in = dims_[l], out = dims_[l + 1];
            std::vector<double> next(out);
            for (int o = 0; o < out; ++o) {
                double s = params[b_off + o];
                const double* w = &params[w_off + static_cast<size_t>(o) * in];
                for (int j = 0; j < in; ++j) s += w[j] * cur[j];
                next[o] = s;
            }
            if (l + 1 < layers) {
                for (double& v : next) v = v > 0 ? v : 0.0;  // ReLU
                acts.push_back(next);
            }
            cur = std::move(next);
        }
        // softmax
        double mx = *std::max_element(cur.begin(), cur.end());
        double sum = 0.0;
        for (double& v : cur) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : cur) v /= sum;
        return cur;
    }

    std::vector<int> dims_;
    size_t count_ = 0;
};

class MlpModel : public Model {
public:
    MlpModel(SchemaPtr schema, FeatureEncoder encoder, MlpNet net, std::vector<double> params)
        : encoder_(std::move(encoder)), net_(std::move(net)), params_(std::move(params)) {
        init_schema(std::move(schema));
    }

    std::string kind() const override { return "mlp"; }
    const FeatureEncoder& encoder() const { return encoder_; }
    const MlpNet& net() const { return net_; }
    const std::vector<double>& params() const { return params_; }

    PredictionOutput predict(const Record& record) const override {
        std::vector<double> x;
        encoder_.encode(record, x);
        return make_prediction(net_.forward(params_, x));
    }

private:
    FeatureEncoder encoder_;
    MlpNet net_;
    std::vector<double> params_;
};

inline std::shared_ptr<MlpModel> train_mlp(const Dataset& train, const MlpConfig& cfg = {}) {
    if (train.empty()) throw ValidationError("training dataset is empty");
    int target = train.schema().target_index();
    auto classes = train.schema().at(target).resolved_domain();

    FeatureEncoder encoder = FeatureEncoder::fit(train);
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (const auto& r : train.records()) {
        if (r.values[target].is_missing()) continue;
        std::vector<double> x;
        encoder.encode(r, x);
        xs.push_back(std::move(x));
        ys.push_back(r.values[target].cat);
    }
    if (xs.empty()) throw ValidationError("no labeled training records");

    std::vector<int> dims;
    dims.push_back(encoder.width);
    for (int h : cfg.hidden) dims.push_back(h);
    dims.push_back(static_cast<int>(classes.size()));
    MlpNet net(dims);
    auto params = net.init_params(cfg.seed);

    // Adam
    std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int64_t step = 0;

    std::vector<size_t> order(xs.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng shuffle_rng(cfg.seed ^ 0x5bfe);

    size_t batch = std::max<size_t>(1, static_cast<size_t>(cfg.batch));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_indices(order, shuffle_rng);
        double epoch_loss = 0.0;
        size_t batches = 0;
        for (size_t start = 0; start < order.size(); start += batch) {
            size_t end = std::min(order.size(), start + batch);
            std::vector<std::vector<double>> bx;
            std::vector<int> by;
            bx.reserve(end - start);
            for (size_t i = start; i < end; ++i) {
                bx.push_back(xs[order[i]]);
                by.push_back(ys[order[i]]);
            }
            auto grad = net.gradient(params, bx, by);
            epoch_loss += net.loss(params, bx, by);
            ++batches;
            ++step;
            double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (size_t p = 0; p < params.size(); ++p) {
                m[p] = beta1 * m[p] + (1 - beta1) * grad[p];
                v[p] = beta2 * v[p] + (1 - beta2) * grad[p] * grad[p];
                params[p] -= cfg.learning_rate * (m[p] / bc1) / (std::sqrt(v[p] / bc2) + eps);
            }
        }
        if (!std::isfinite(epoch_loss / std::max<size_t>(1, batches)))
            throw Error("non-finite training loss at epoch " + std::to_string(epoch + 1));
    }

    return std::make_shared<MlpModel>(train.schema_ptr(), std::move(encoder), std::move(net),
                                      std::move(params));
}

}  // namespace miai
