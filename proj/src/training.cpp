#include "qclearn/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "qclearn/io_util.hpp"
#include "qclearn/rng.hpp"

namespace qclearn {

namespace {

// Expands packed one-hot bytes for the given record indices into a
// (B, N, P, C) double tensor.
Tensor expand_batch(const std::vector<std::uint8_t>& packed, std::size_t stride,
                    const std::vector<std::uint32_t>& order, std::size_t begin, std::size_t end,
                    std::int64_t n, std::int64_t p, std::int64_t c) {
    const std::int64_t b = static_cast<std::int64_t>(end - begin);
    Tensor out = Tensor::uninit({b, n, p, c});
    for (std::int64_t i = 0; i < b; ++i) {
        const std::uint8_t* src = packed.data() + order[begin + i] * stride;
        double* dst = out.data() + i * static_cast<std::int64_t>(stride);
        for (std::size_t k = 0; k < stride; ++k) dst[k] = src[k];
    }
    return out;
}

Tensor gather_targets(const Dataset& data, const std::vector<std::uint32_t>& order,
                      std::size_t begin, std::size_t end, int n_outputs, int label_index) {
    const int arity = data.label_arity();
    Tensor out({static_cast<std::int64_t>(end - begin), n_outputs});
    for (std::size_t i = begin; i < end; ++i) {
        const double* row = data.label_row(order[i]);
        double* dst = out.data() + (i - begin) * n_outputs;
        if (n_outputs == arity) {
            std::copy(row, row + arity, dst);
        } else {
            dst[0] = row[label_index];
        }
    }
    return out;
}

void fisher_yates(std::vector<std::uint32_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng.next_below(i)]);
}

}  // namespace

TrainResult train(Model model, const Dataset& data, const TrainConfig& config) {
    if (data.size() == 0) throw EmptyDataset("training dataset is empty");
    if (!config.allow_any_batch && (config.batch_size < 128 || config.batch_size > 512))
        throw ShapeMismatch("batch size outside [128, 512]; set allow_any_batch to override");

    const int n_outputs = model.config().n_outputs;
    const int arity = data.label_arity();
    int label_index = config.label_index < 0 ? 0 : config.label_index;
    if (n_outputs > 1) {
        if (arity != n_outputs)
            throw ShapeMismatch("multi-output model needs one label per qubit");
        if (data.header.n_qubits != n_outputs)
            throw ConfigMismatch("multi-output model qubit count differs from dataset");
    } else if (label_index >= arity) {
        throw ShapeMismatch("label index exceeds dataset label arity");
    }
    if (model.config().gate_channels != data.header.gate_set.channel_count())
        throw ConfigMismatch("model gate channels differ from dataset gate set");

    const std::size_t stride = static_cast<std::size_t>(data.header.n_qubits) *
                               data.header.depth * data.header.gate_set.channel_count();
    const std::vector<std::uint8_t> packed = data.packed_encodings();

    // Records are already in i.i.d. generation order; the validation split is
    // simply the tail.
    std::size_t n_val = static_cast<std::size_t>(
        std::llround(config.val_fraction * static_cast<double>(data.size())));
    n_val = std::min(n_val, data.size() - 1);
    const std::size_t n_train = data.size() - n_val;

    std::vector<std::uint32_t> train_idx(n_train);
    std::iota(train_idx.begin(), train_idx.end(), 0);
    std::vector<std::uint32_t> val_idx(n_val);
    std::iota(val_idx.begin(), val_idx.end(), static_cast<std::uint32_t>(n_train));

    auto eval_bce = [&](const Model& m, const std::vector<std::uint32_t>& idx) {
        double total = 0.0;
        const std::size_t chunk = 512;
        for (std::size_t b = 0; b < idx.size(); b += chunk) {
            const std::size_t e = std::min(idx.size(), b + chunk);
            Tensor x = expand_batch(packed, stride, idx, b, e, data.header.n_qubits,
                                    data.header.depth, data.header.gate_set.channel_count());
            Tensor y = gather_targets(data, idx, b, e, n_outputs, label_index);
            total += bce_loss(m.predict(x), y) * static_cast<double>(e - b);
        }
        return total / static_cast<double>(idx.size());
    };

    AdamHyper hyper = config.adam;
    AdamState adam = AdamState::for_params(model.parameters());

    TrainResult result{model, {}, {}, -1, 0, 0};
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;
    int since_plateau = 0;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        Rng shuffle_rng = Rng::for_stream(config.seed, 0x10000u + epoch);
        fisher_yates(train_idx, shuffle_rng);

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        ForwardCache cache;
        for (std::size_t b = 0; b < n_train; b += config.batch_size) {
            const std::size_t e = std::min(n_train, b + config.batch_size);
            Tensor x = expand_batch(packed, stride, train_idx, b, e, data.header.n_qubits,
                                    data.header.depth, data.header.gate_set.channel_count());
            Tensor y = gather_targets(data, train_idx, b, e, n_outputs, label_index);
            Tensor pred = model.forward_train(x, cache);
            epoch_loss += bce_loss(pred, y);
            auto grads = model.backward(cache, y);
            auto params = model.parameters();
            adam_step(params, grads, adam, hyper);
            ++batches;
            ++result.steps;
        }
        result.train_loss.push_back(epoch_loss / static_cast<double>(batches));

        if (n_val > 0) {
            const double val = eval_bce(model, val_idx);
            result.val_loss.push_back(val);
            if (config.log_every > 0 && (epoch % config.log_every == 0)) {
                std::printf("epoch %3d  train %.6f  val %.6f  lr %.2e\n", epoch,
                            result.train_loss.back(), val, hyper.lr);
                std::fflush(stdout);
            }
            if (val < best_val) {
                best_val = val;
                result.model = model;
                result.best_epoch = epoch;
                since_best = 0;
                since_plateau = 0;
            } else {
                ++since_best;
                ++since_plateau;
                if (config.lr_halving && since_plateau >= config.plateau_patience) {
                    hyper.lr = std::max(hyper.lr * 0.5, 1e-6);
                    since_plateau = 0;
                }
                if (since_best >= config.patience) break;
            }
        } else if (config.log_every > 0 && (epoch % config.log_every == 0)) {
            std::printf("epoch %3d  train %.6f\n", epoch, result.train_loss.back());
            std::fflush(stdout);
        }
    }
    if (n_val == 0) {
        result.model = std::move(model);
        result.best_epoch = static_cast<int>(result.train_loss.size()) - 1;
    }
    if (!result.val_loss.empty())
        result.loss_digest =
            fnv1a64(reinterpret_cast<const std::uint8_t*>(result.val_loss.data()),
                    result.val_loss.size() * sizeof(double));
    else if (!result.train_loss.empty())
        result.loss_digest =
            fnv1a64(reinterpret_cast<const std::uint8_t*>(result.train_loss.data()),
                    result.train_loss.size() * sizeof(double));
    return result;
}

double r2_score(const std::vector<double>& predictions, const std::vector<double>& targets) {
    if (predictions.size() != targets.size() || targets.empty())
        throw ShapeMismatch("r2_score needs matching non-empty vectors");
    const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) /
                        static_cast<double>(targets.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        ss_res += (targets[i] - predictions[i]) * (targets[i] - predictions[i]);
        ss_tot += (targets[i] - mean) * (targets[i] - mean);
    }
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    return 1.0 - ss_res / ss_tot;
}

EvalReport evaluate_r2(const Model& model, const Dataset& test, const EvalOptions& options) {
    if (test.size() == 0) throw EmptyDataset("test dataset is empty");
    const int n_outputs = model.config().n_outputs;
    const int arity = test.label_arity();
    if (n_outputs > 1 && (options.qubit > 0 || options.pair))
        throw ConfigMismatch("row swaps apply to single-output models only");
    if (n_outputs > 1 && arity != n_outputs)
        throw ShapeMismatch("multi-output evaluation needs one label per qubit");

    int label_index = options.label_index;
    if (n_outputs == 1 && label_index < 0)
        label_index = (arity > 1 && options.qubit > 0) ? options.qubit : 0;
    if (label_index >= arity) throw ShapeMismatch("label index exceeds dataset label arity");

    const int n = test.header.n_qubits, p = test.header.depth;
    const int c = test.header.gate_set.channel_count();

    std::vector<double> preds;
    std::vector<double> targs;
    preds.reserve(test.size() * n_outputs);
    targs.reserve(test.size() * n_outputs);

    const std::size_t chunk = static_cast<std::size_t>(options.batch_size);
    for (std::size_t begin = 0; begin < test.size(); begin += chunk) {
        const std::size_t end = std::min(test.size(), begin + chunk);
        Tensor x = Tensor::uninit({static_cast<std::int64_t>(end - begin), n, p, c});
        for (std::size_t i = begin; i < end; ++i) {
            CircuitEncoding enc = encode_one_hot(test.circuit(i));
            if (options.pair)
                enc = swap_qubit_pair(enc, options.pair->first, options.pair->second);
            else if (options.qubit > 0)
                enc = swap_qubit_rows(enc, 0, options.qubit);
            double* dst = x.data() + (i - begin) * enc.data.size();
            for (std::size_t k = 0; k < enc.data.size(); ++k) dst[k] = enc.data[k];
        }
        const Tensor out = model.predict(x);
        for (std::int64_t i = 0; i < out.size(); ++i) preds.push_back(out[i]);
        for (std::size_t i = begin; i < end; ++i) {
            const double* row = test.label_row(i);
            if (n_outputs == arity && n_outputs > 1)
                targs.insert(targs.end(), row, row + arity);
            else
                targs.push_back(row[label_index]);
        }
    }

    EvalReport report;
    report.r2 = r2_score(preds, targs);
    report.n_test = test.size();
    report.n_outputs = n_outputs;
    report.per_output.resize(n_outputs);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        OutputStats& s = report.per_output[i % n_outputs];
        const double r = std::abs(preds[i] - targs[i]);
        s.mean_abs_residual += r;
        s.max_abs_residual = std::max(s.max_abs_residual, r);
        s.rmse += r * r;
    }
    const double rows = static_cast<double>(test.size());
    for (OutputStats& s : report.per_output) {
        s.mean_abs_residual /= rows;
        s.rmse = std::sqrt(s.rmse / rows);
    }
    if (options.collect_scatter) {
        report.scatter.reserve(preds.size());
        for (std::size_t i = 0; i < preds.size(); ++i)
            report.scatter.emplace_back(targs[i], preds[i]);
    }
    if (options.histogram_bins > 0) {
        report.histogram.assign(options.histogram_bins, 0);
        for (double t : targs) {
            int bin = static_cast<int>(t * options.histogram_bins);
            bin = std::clamp(bin, 0, options.histogram_bins - 1);
            ++report.histogram[bin];
        }
    }
    return report;
}

std::vector<std::pair<int, double>> extrapolate_eval(const Model& model,
                                                     const std::vector<const Dataset*>& tests,
                                                     const EvalOptions& options) {
    if (model.config().n_outputs != 1)
        throw ConfigMismatch("extrapolation needs a single-output model");
    std::vector<std::pair<int, double>> out;
    out.reserve(tests.size());
    for (const Dataset* ds : tests) {
        const EvalReport report = evaluate_r2(model, *ds, options);
        out.emplace_back(ds->header.n_qubits, report.r2);
    }
    return out;
}

}  // namespace qclearn
