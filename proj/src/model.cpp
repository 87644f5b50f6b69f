#include "qclearn/model.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "qclearn/fastmath.hpp"
#include "qclearn/gemm.hpp"
#include "qclearn/rng.hpp"
#include "qclearn/threading.hpp"

namespace qclearn {

using nlohmann::json;

void ModelConfig::validate() const {
    if (n_conv < 1) throw ShapeMismatch("model needs at least one conv layer");
    if (filters < 1) throw ShapeMismatch("filter count must be positive");
    if (kernel_h % 2 == 0 || kernel_w % 2 == 0 || kernel_h < 1 || kernel_w < 1)
        throw ShapeMismatch("kernel dims must be odd for same padding");
    if (n_outputs < 1) throw ShapeMismatch("n_outputs must be positive");
    if (gate_channels != 4 && gate_channels != 5)
        throw ShapeMismatch("gate_channels must be 4 or 5");
    for (int d : dense_sizes)
        if (d < 1) throw ShapeMismatch("dense sizes must be positive");
}

std::string ModelConfig::to_json() const {
    json j;
    j["n_conv"] = n_conv;
    j["filters"] = filters;
    j["kernel"] = {kernel_h, kernel_w};
    j["dense_sizes"] = dense_sizes;
    j["n_outputs"] = n_outputs;
    j["gate_channels"] = gate_channels;
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    ModelConfig cfg;
    cfg.n_conv = j.at("n_conv").get<int>();
    cfg.filters = j.at("filters").get<int>();
    cfg.kernel_h = j.at("kernel").at(0).get<int>();
    cfg.kernel_w = j.at("kernel").at(1).get<int>();
    cfg.dense_sizes = j.at("dense_sizes").get<std::vector<int>>();
    cfg.n_outputs = j.at("n_outputs").get<int>();
    cfg.gate_channels = j.at("gate_channels").get<int>();
    cfg.validate();
    return cfg;
}

BatchNorm::BatchNorm(std::int64_t channels)
    : gamma({channels}), beta({channels}), running_mean({channels}), running_var({channels}) {
    gamma.fill(1.0);
    running_var.fill(1.0);
}

double mish(double x) {
    if (x > 30.0) return x;  // tanh(softplus) is 1 to better than 1e-25
    const double u = std::exp(x);
    const double w = u * u + 2.0 * u;
    return x * (w / (w + 2.0));
}

double mish_derivative(double x) {
    if (x > 30.0) return 1.0;
    const double u = std::exp(x);
    const double w = u * u + 2.0 * u;
    const double t = w / (w + 2.0);
    const double sig = u / (1.0 + u);
    return t + x * (1.0 - t * t) * sig;
}

namespace {

// ---- elementwise / reduction helpers on (rows x channels) matrices ----

// In-place Mish via the vectorized exp; optionally stores tanh(softplus(x))
// and sigmoid(x) so the backward pass needs no exp at all. With u = e^x,
// tanh(softplus(x)) = (u^2 + 2u) / (u^2 + 2u + 2) and sigmoid = u / (1 + u).
void mish_apply(Tensor& t, Tensor* t_cache, Tensor* sig_cache) {
    double* p = t.data();
    double* tc = t_cache ? t_cache->data() : nullptr;
    double* sc = sig_cache ? sig_cache->data() : nullptr;
    auto run = [&](std::int64_t b, std::int64_t e) {
        constexpr std::int64_t kBlock = 512;
        double u[kBlock];
        for (std::int64_t base = b; base < e; base += kBlock) {
            const std::int64_t len = std::min(kBlock, e - base);
            vec_exp(p + base, u, len);
            for (std::int64_t k = 0; k < len; ++k) {
                // Clamp so u^2 stays finite; tanh saturates to 1 long before.
                const double uc = std::min(u[k], 1e150);
                const double w = uc * uc + 2.0 * uc;
                if (tc) {
                    // Both ratios from one reciprocal.
                    const double inv = 1.0 / ((w + 2.0) * (1.0 + uc));
                    const double tanh_sp = w * (1.0 + uc) * inv;
                    tc[base + k] = tanh_sp;
                    sc[base + k] = uc * (w + 2.0) * inv;
                    p[base + k] *= tanh_sp;
                } else {
                    p[base + k] *= w / (w + 2.0);
                }
            }
        }
    };
    if (t.size() >= 32768) {
        parallel_chunks(t.size(), run);
    } else {
        run(0, t.size());
    }
}

void add_bias(Tensor& t, const Tensor& bias, std::int64_t rows, std::int64_t channels) {
    double* p = t.data();
    const double* bp = bias.data();
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = 0; c < channels; ++c) p[r * channels + c] += bp[c];
}

// Fixed eight-way chunking keeps the reduction order independent of the
// thread count, so parallel and serial runs produce identical statistics.
constexpr std::int64_t kReduceChunks = 8;

void batch_stats(const Tensor& x, std::int64_t rows, std::int64_t channels, Tensor& mean,
                 Tensor& var) {
    mean = Tensor({channels});
    var = Tensor({channels});
    const double* p = x.data();
    const std::int64_t step = (rows + kReduceChunks - 1) / kReduceChunks;
    std::vector<double> partial(kReduceChunks * channels, 0.0);
    parallel_chunks(kReduceChunks, [&](std::int64_t cb, std::int64_t ce) {
        for (std::int64_t chunk = cb; chunk < ce; ++chunk) {
            double* acc = partial.data() + chunk * channels;
            const std::int64_t hi = std::min(rows, (chunk + 1) * step);
            for (std::int64_t r = chunk * step; r < hi; ++r)
                for (std::int64_t c = 0; c < channels; ++c) acc[c] += p[r * channels + c];
        }
    });
    for (std::int64_t chunk = 0; chunk < kReduceChunks; ++chunk)
        for (std::int64_t c = 0; c < channels; ++c) mean[c] += partial[chunk * channels + c];
    for (std::int64_t c = 0; c < channels; ++c) mean[c] /= static_cast<double>(rows);

    std::fill(partial.begin(), partial.end(), 0.0);
    parallel_chunks(kReduceChunks, [&](std::int64_t cb, std::int64_t ce) {
        for (std::int64_t chunk = cb; chunk < ce; ++chunk) {
            double* acc = partial.data() + chunk * channels;
            const std::int64_t hi = std::min(rows, (chunk + 1) * step);
            for (std::int64_t r = chunk * step; r < hi; ++r)
                for (std::int64_t c = 0; c < channels; ++c) {
                    const double d = p[r * channels + c] - mean[c];
                    acc[c] += d * d;
                }
        }
    });
    for (std::int64_t chunk = 0; chunk < kReduceChunks; ++chunk)
        for (std::int64_t c = 0; c < channels; ++c) var[c] += partial[chunk * channels + c];
    for (std::int64_t c = 0; c < channels; ++c) var[c] /= static_cast<double>(rows);
}

Tensor bn_apply(const Tensor& x, std::int64_t rows, std::int64_t channels, const Tensor& mean,
                const Tensor& var, const BatchNorm& bn) {
    Tensor out = Tensor::uninit({rows, channels});
    std::vector<double> scale(channels), shift(channels);
    for (std::int64_t c = 0; c < channels; ++c) {
        scale[c] = bn.gamma[c] / std::sqrt(var[c] + Model::kBnEpsilon);
        shift[c] = bn.beta[c] - scale[c] * mean[c];
    }
    const double* p = x.data();
    double* o = out.data();
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = 0; c < channels; ++c)
            o[r * channels + c] = scale[c] * p[r * channels + c] + shift[c];
    return out;
}

// ---- conv via im2col ----

struct ConvGeom {
    std::int64_t batch, height, width, in_channels, kh, kw;
    std::int64_t patch() const { return kh * kw * in_channels; }
    std::int64_t rows() const { return batch * height * width; }
};

void im2col(const double* input, const ConvGeom& g, double* col) {
    const std::int64_t ph = (g.kh - 1) / 2;
    const std::int64_t pw = (g.kw - 1) / 2;
    parallel_chunks(g.batch, [&](std::int64_t bb, std::int64_t be) {
        for (std::int64_t b = bb; b < be; ++b) {
            const double* in_b = input + b * g.height * g.width * g.in_channels;
            double* col_row = col + b * g.height * g.width * g.patch();
            for (std::int64_t y = 0; y < g.height; ++y)
                for (std::int64_t x = 0; x < g.width; ++x) {
                    for (std::int64_t ky = 0; ky < g.kh; ++ky) {
                        const std::int64_t sy = y + ky - ph;
                        double* dst = col_row + (ky * g.kw) * g.in_channels;
                        if (sy < 0 || sy >= g.height) {
                            std::fill(dst, dst + g.kw * g.in_channels, 0.0);
                            continue;
                        }
                        for (std::int64_t kx = 0; kx < g.kw; ++kx) {
                            const std::int64_t sx = x + kx - pw;
                            double* d = dst + kx * g.in_channels;
                            if (sx < 0 || sx >= g.width) {
                                std::fill(d, d + g.in_channels, 0.0);
                            } else {
                                const double* s = in_b + (sy * g.width + sx) * g.in_channels;
                                std::copy(s, s + g.in_channels, d);
                            }
                        }
                    }
                    col_row += g.patch();
                }
        }
    });
}

void col2im_add(const double* col, const ConvGeom& g, double* input_grad) {
    const std::int64_t ph = (g.kh - 1) / 2;
    const std::int64_t pw = (g.kw - 1) / 2;
    parallel_chunks(g.batch, [&](std::int64_t bb, std::int64_t be) {
        for (std::int64_t b = bb; b < be; ++b) {
            double* out_b = input_grad + b * g.height * g.width * g.in_channels;
            const double* col_row = col + b * g.height * g.width * g.patch();
            for (std::int64_t y = 0; y < g.height; ++y)
                for (std::int64_t x = 0; x < g.width; ++x) {
                    for (std::int64_t ky = 0; ky < g.kh; ++ky) {
                        const std::int64_t sy = y + ky - ph;
                        if (sy < 0 || sy >= g.height) continue;
                        for (std::int64_t kx = 0; kx < g.kw; ++kx) {
                            const std::int64_t sx = x + kx - pw;
                            if (sx < 0 || sx >= g.width) continue;
                            const double* s = col_row + (ky * g.kw + kx) * g.in_channels;
                            double* d = out_b + (sy * g.width + sx) * g.in_channels;
                            for (std::int64_t c = 0; c < g.in_channels; ++c) d[c] += s[c];
                        }
                    }
                    col_row += g.patch();
                }
        }
    });
}

}  // namespace

Tensor global_max_pool(const Tensor& features) {
    if (features.rank() != 4) throw ShapeMismatch("global_max_pool expects (B, H, W, F)");
    const std::int64_t b = features.dim(0), hw = features.dim(1) * features.dim(2),
                       f = features.dim(3);
    Tensor out({b, f});
    const double* p = features.data();
    for (std::int64_t s = 0; s < b; ++s) {
        const double* sample = p + s * hw * f;
        double* o = out.data() + s * f;
        std::copy(sample, sample + f, o);
        for (std::int64_t pos = 1; pos < hw; ++pos)
            for (std::int64_t c = 0; c < f; ++c)
                o[c] = std::max(o[c], sample[pos * f + c]);
    }
    return out;
}

double bce_loss(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape() || pred.rank() != 2)
        throw ShapeMismatch("bce_loss expects matching (B, N_o) tensors");
    const std::int64_t b = pred.dim(0), no = pred.dim(1);
    double total = 0.0;
    for (std::int64_t i = 0; i < b * no; ++i) {
        const double p = std::clamp(pred[i], Model::kBceClamp, 1.0 - Model::kBceClamp);
        const double y = target[i];
        total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
    return total / static_cast<double>(b);
}

Model::Model(const ModelConfig& config, std::uint64_t init_seed) : config_(config) {
    config_.validate();
    Rng rng = Rng::for_stream(init_seed, 0);
    auto he_fill = [&rng](Tensor& t, std::int64_t fan_in) {
        const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.next_normal() * std_dev;
    };

    std::int64_t in_ch = config_.gate_channels;
    for (int i = 0; i < config_.n_conv; ++i) {
        ConvLayer layer;
        const std::int64_t patch = config_.kernel_h * config_.kernel_w * in_ch;
        layer.kernel = Tensor({patch, config_.filters});
        he_fill(layer.kernel, patch);
        layer.bias = Tensor({config_.filters});
        layer.bn = BatchNorm(config_.filters);
        convs_.push_back(std::move(layer));
        in_ch = config_.filters;
    }
    std::int64_t width = config_.filters;
    for (int size : config_.dense_sizes) {
        DenseLayer layer;
        layer.weight = Tensor({width, size});
        he_fill(layer.weight, width);
        layer.bias = Tensor({size});
        layer.bn = BatchNorm(size);
        denses_.push_back(std::move(layer));
        width = size;
    }
    output_.weight = Tensor({width, config_.n_outputs});
    he_fill(output_.weight, width);
    output_.bias = Tensor({config_.n_outputs});
}

void Model::check_input(const Tensor& batch) const {
    if (batch.rank() != 4) throw ShapeMismatch("input must be (B, N, P, C), got " +
                                               batch.shape_string());
    if (batch.dim(3) != config_.gate_channels)
        throw ShapeMismatch("input channel count does not match gate_channels");
    if (config_.n_outputs > 1 && batch.dim(1) != config_.n_outputs)
        throw ConfigMismatch("multi-output model is fixed to " +
                             std::to_string(config_.n_outputs) + " qubit rows");
    if (batch.dim(0) < 1 || batch.dim(1) < 1 || batch.dim(2) < 1)
        throw ShapeMismatch("empty input batch");
}

Tensor Model::forward_impl(const Tensor& batch, bool train, ForwardCache* cache) const {
    check_input(batch);
    const std::int64_t b = batch.dim(0), h = batch.dim(1), w = batch.dim(2);
    const std::int64_t rows = b * h * w;

    if (cache) {
        *cache = ForwardCache{};
        cache->batch = b;
        cache->height = h;
        cache->width = w;
    }

    Tensor cur = Tensor::uninit({rows, batch.dim(3)});
    std::copy(batch.data(), batch.data() + batch.size(), cur.data());

    Tensor col;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        const ConvLayer& layer = convs_[i];
        const std::int64_t in_ch = cur.dim(1);
        const ConvGeom geom{b, h, w, in_ch, config_.kernel_h, config_.kernel_w};
        col = Tensor::uninit({rows, geom.patch()});
        im2col(cur.data(), geom, col.data());
        Tensor pre = Tensor::uninit({rows, config_.filters});
        gemm(false, false, rows, config_.filters, geom.patch(), 1.0, col.data(), geom.patch(),
             layer.kernel.data(), config_.filters, 0.0, pre.data(), config_.filters);
        add_bias(pre, layer.bias, rows, config_.filters);

        Tensor mean, var;
        if (train) {
            batch_stats(pre, rows, config_.filters, mean, var);
        } else {
            mean = layer.bn.running_mean;
            var = layer.bn.running_var;
        }
        Tensor bn_out = bn_apply(pre, rows, config_.filters, mean, var, layer.bn);
        Tensor* mish_t = nullptr;
        Tensor* mish_sig = nullptr;
        if (cache) {
            cache->conv_in.push_back(std::move(cur));
            cache->conv_col.push_back(std::move(col));
            cache->conv_pre.push_back(std::move(pre));
            cache->conv_mean.push_back(std::move(mean));
            cache->conv_var.push_back(std::move(var));
            cache->conv_bn_out.push_back(bn_out);  // copy: Mish below is in place
            cache->conv_mish_t.push_back(Tensor::uninit({rows, config_.filters}));
            cache->conv_mish_sig.push_back(Tensor::uninit({rows, config_.filters}));
            mish_t = &cache->conv_mish_t.back();
            mish_sig = &cache->conv_mish_sig.back();
        }
        mish_apply(bn_out, mish_t, mish_sig);
        cur = std::move(bn_out);
    }

    // Global max pool with argmax bookkeeping for the backward pass.
    Tensor pooled({b, config_.filters});
    std::vector<std::int32_t> argmax;
    if (cache) argmax.assign(static_cast<std::size_t>(b * config_.filters), 0);
    {
        const double* p = cur.data();
        const std::int64_t hw = h * w;
        for (std::int64_t s = 0; s < b; ++s) {
            const double* sample = p + s * hw * config_.filters;
            double* o = pooled.data() + s * config_.filters;
            std::copy(sample, sample + config_.filters, o);
            for (std::int64_t pos = 1; pos < hw; ++pos)
                for (std::int64_t c = 0; c < config_.filters; ++c) {
                    const double v = sample[pos * config_.filters + c];
                    if (v > o[c]) {
                        o[c] = v;
                        if (cache) argmax[s * config_.filters + c] = static_cast<std::int32_t>(pos);
                    }
                }
        }
    }
    if (cache) {
        cache->conv_in.push_back(std::move(cur));
        cache->pool_argmax = std::move(argmax);
    }
    cur = std::move(pooled);

    for (std::size_t i = 0; i < denses_.size(); ++i) {
        const DenseLayer& layer = denses_[i];
        const std::int64_t in = layer.weight.dim(0), out = layer.weight.dim(1);
        Tensor pre = Tensor::uninit({b, out});
        gemm(false, false, b, out, in, 1.0, cur.data(), in, layer.weight.data(), out, 0.0,
             pre.data(), out);
        add_bias(pre, layer.bias, b, out);
        Tensor mean, var;
        if (train) {
            batch_stats(pre, b, out, mean, var);
        } else {
            mean = layer.bn.running_mean;
            var = layer.bn.running_var;
        }
        Tensor bn_out = bn_apply(pre, b, out, mean, var, layer.bn);
        Tensor* mish_t = nullptr;
        Tensor* mish_sig = nullptr;
        if (cache) {
            cache->dense_in.push_back(std::move(cur));
            cache->dense_pre.push_back(std::move(pre));
            cache->dense_mean.push_back(std::move(mean));
            cache->dense_var.push_back(std::move(var));
            cache->dense_bn_out.push_back(bn_out);
            cache->dense_mish_t.push_back(Tensor::uninit({b, out}));
            cache->dense_mish_sig.push_back(Tensor::uninit({b, out}));
            mish_t = &cache->dense_mish_t.back();
            mish_sig = &cache->dense_mish_sig.back();
        }
        mish_apply(bn_out, mish_t, mish_sig);
        cur = std::move(bn_out);
    }

    const std::int64_t in = output_.weight.dim(0), out = output_.weight.dim(1);
    Tensor logits = Tensor::uninit({b, out});
    gemm(false, false, b, out, in, 1.0, cur.data(), in, output_.weight.data(), out, 0.0,
         logits.data(), out);
    add_bias(logits, output_.bias, b, out);
    Tensor pred = Tensor::uninit({b, out});
    for (std::int64_t i = 0; i < logits.size(); ++i)
        pred[i] = 1.0 / (1.0 + std::exp(-logits[i]));
    if (cache) {
        cache->dense_in.push_back(std::move(cur));
        cache->logits = std::move(logits);
        cache->pred = pred;
    }
    return pred;
}

void Model::update_running_stats(const ForwardCache& cache) {
    auto update = [](BatchNorm& bn, const Tensor& mean, const Tensor& var) {
        for (std::int64_t c = 0; c < mean.size(); ++c) {
            bn.running_mean[c] =
                kBnMomentum * bn.running_mean[c] + (1.0 - kBnMomentum) * mean[c];
            bn.running_var[c] = kBnMomentum * bn.running_var[c] + (1.0 - kBnMomentum) * var[c];
        }
    };
    for (std::size_t i = 0; i < convs_.size(); ++i)
        update(convs_[i].bn, cache.conv_mean[i], cache.conv_var[i]);
    for (std::size_t i = 0; i < denses_.size(); ++i)
        update(denses_[i].bn, cache.dense_mean[i], cache.dense_var[i]);
}

Tensor Model::predict(const Tensor& batch) const { return forward_impl(batch, false, nullptr); }

Tensor Model::forward_train(const Tensor& batch, ForwardCache& cache, bool update_running) {
    Tensor pred = forward_impl(batch, true, &cache);
    if (update_running) update_running_stats(cache);
    return pred;
}

std::vector<Tensor> Model::backward(const ForwardCache& cache, const Tensor& targets) const {
    const std::int64_t b = cache.batch, h = cache.height, w = cache.width;
    if (targets.shape() != cache.pred.shape())
        throw ShapeMismatch("target shape does not match predictions");

    std::vector<Tensor> grads;
    for (const Tensor* p : parameters()) grads.emplace_back(p->shape());
    // Index of each layer's gradient block in the flat list.
    std::size_t gi = 0;
    std::vector<std::size_t> conv_base(convs_.size());
    for (std::size_t i = 0; i < convs_.size(); ++i, gi += 4) conv_base[i] = gi;
    std::vector<std::size_t> dense_base(denses_.size());
    for (std::size_t i = 0; i < denses_.size(); ++i, gi += 4) dense_base[i] = gi;
    const std::size_t out_base = gi;

    // Fused sigmoid + BCE: dL/dlogit = (pred - target) / B.
    Tensor delta({b, config_.n_outputs});
    for (std::int64_t i = 0; i < delta.size(); ++i)
        delta[i] = (cache.pred[i] - targets[i]) / static_cast<double>(b);

    auto dense_backward = [&](const Tensor& d_out, const Tensor& input, const Tensor& weight,
                              Tensor& d_weight, Tensor& d_bias) {
        const std::int64_t rows = d_out.dim(0), out = weight.dim(1), in = weight.dim(0);
        gemm(true, false, in, out, rows, 1.0, input.data(), in, d_out.data(), out, 0.0,
             d_weight.data(), out);
        for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t c = 0; c < out; ++c) d_bias[c] += d_out[r * out + c];
        Tensor d_in = Tensor::uninit({rows, in});
        gemm(false, true, rows, in, out, 1.0, d_out.data(), out, weight.data(), out, 0.0,
             d_in.data(), in);
        return d_in;
    };

    // Mish backward from the cached tanh(softplus) and sigmoid values:
    // mish'(x) = t + x (1 - t^2) sigma.
    auto mish_backward = [](const Tensor& d_out, const Tensor& x, const Tensor& t_cache,
                            const Tensor& sig_cache) {
        Tensor d_x = Tensor::uninit(d_out.shape());
        const std::int64_t size = d_out.size();
        auto run = [&](std::int64_t b2, std::int64_t e2) {
            for (std::int64_t j = b2; j < e2; ++j) {
                const double t = t_cache[j];
                d_x[j] = d_out[j] * (t + x[j] * (1.0 - t * t) * sig_cache[j]);
            }
        };
        if (size >= 32768) {
            parallel_chunks(size, run);
        } else {
            run(0, size);
        }
        return d_x;
    };

    auto bn_backward = [](const Tensor& d_y, const Tensor& pre, const Tensor& mean,
                          const Tensor& var, const BatchNorm& bn, Tensor& d_gamma,
                          Tensor& d_beta) {
        const std::int64_t channels = mean.size();
        const std::int64_t rows = d_y.size() / channels;
        std::vector<double> inv_std(channels);
        for (std::int64_t c = 0; c < channels; ++c)
            inv_std[c] = 1.0 / std::sqrt(var[c] + Model::kBnEpsilon);
        // d_gamma = sum dy * x_hat, d_beta = sum dy; fixed chunk grid keeps
        // the reduction order thread-count independent.
        const std::int64_t step = (rows + kReduceChunks - 1) / kReduceChunks;
        std::vector<double> partial(2 * kReduceChunks * channels, 0.0);
        parallel_chunks(kReduceChunks, [&](std::int64_t cb, std::int64_t ce) {
            for (std::int64_t chunk = cb; chunk < ce; ++chunk) {
                double* acc_g = partial.data() + 2 * chunk * channels;
                double* acc_b = acc_g + channels;
                const std::int64_t hi = std::min(rows, (chunk + 1) * step);
                for (std::int64_t r = chunk * step; r < hi; ++r)
                    for (std::int64_t c = 0; c < channels; ++c) {
                        const double dy = d_y[r * channels + c];
                        acc_g[c] += dy * (pre[r * channels + c] - mean[c]) * inv_std[c];
                        acc_b[c] += dy;
                    }
            }
        });
        for (std::int64_t chunk = 0; chunk < kReduceChunks; ++chunk)
            for (std::int64_t c = 0; c < channels; ++c) {
                d_gamma[c] += partial[2 * chunk * channels + c];
                d_beta[c] += partial[(2 * chunk + 1) * channels + c];
            }
        Tensor d_x = Tensor::uninit(d_y.shape());
        const double inv_rows = 1.0 / static_cast<double>(rows);
        parallel_chunks(rows, [&](std::int64_t rb, std::int64_t re) {
            for (std::int64_t r = rb; r < re; ++r)
                for (std::int64_t c = 0; c < channels; ++c) {
                    const double dy = d_y[r * channels + c];
                    const double x_hat = (pre[r * channels + c] - mean[c]) * inv_std[c];
                    d_x[r * channels + c] =
                        bn.gamma[c] * inv_std[c] *
                        (dy - d_beta[c] * inv_rows - x_hat * d_gamma[c] * inv_rows);
                }
        });
        return d_x;
    };

    // ---- output layer ----
    Tensor d_cur = dense_backward(delta, cache.dense_in.back(), output_.weight,
                                  grads[out_base], grads[out_base + 1]);

    // ---- dense head ----
    for (std::size_t i = denses_.size(); i-- > 0;) {
        const DenseLayer& layer = denses_[i];
        Tensor d_bn = mish_backward(d_cur, cache.dense_bn_out[i], cache.dense_mish_t[i],
                                    cache.dense_mish_sig[i]);
        Tensor d_pre = bn_backward(d_bn, cache.dense_pre[i], cache.dense_mean[i],
                                   cache.dense_var[i], layer.bn, grads[dense_base[i] + 2],
                                   grads[dense_base[i] + 3]);
        d_cur = dense_backward(d_pre, cache.dense_in[i], layer.weight, grads[dense_base[i]],
                               grads[dense_base[i] + 1]);
    }

    // ---- unpool: route gradients to the argmax positions ----
    const std::int64_t hw = h * w;
    Tensor d_act({b * hw, config_.filters});
    for (std::int64_t s = 0; s < b; ++s)
        for (std::int64_t c = 0; c < config_.filters; ++c) {
            const std::int64_t pos = cache.pool_argmax[s * config_.filters + c];
            d_act[(s * hw + pos) * config_.filters + c] += d_cur[s * config_.filters + c];
        }

    // ---- conv stack ----
    for (std::size_t i = convs_.size(); i-- > 0;) {
        const ConvLayer& layer = convs_[i];
        Tensor d_bn = mish_backward(d_act, cache.conv_bn_out[i], cache.conv_mish_t[i],
                                    cache.conv_mish_sig[i]);
        Tensor d_pre = bn_backward(d_bn, cache.conv_pre[i], cache.conv_mean[i], cache.conv_var[i],
                                   layer.bn, grads[conv_base[i] + 2], grads[conv_base[i] + 3]);

        const std::int64_t in_ch = cache.conv_in[i].dim(1);
        const ConvGeom geom{b, h, w, in_ch, config_.kernel_h, config_.kernel_w};
        const std::int64_t rows = geom.rows();
        const Tensor& col = cache.conv_col[i];
        // d_kernel = col^T . d_pre. The bias gradient stays zero: the layer
        // feeds a train-mode batch norm, which is invariant under input
        // shifts, so the loss derivative w.r.t. the bias vanishes exactly.
        gemm(true, false, geom.patch(), config_.filters, rows, 1.0, col.data(), geom.patch(),
             d_pre.data(), config_.filters, 0.0, grads[conv_base[i]].data(), config_.filters);
        if (i == 0) break;  // input gradient not needed
        // d_col = d_pre . kernel^T, scattered back through col2im
        Tensor d_col = Tensor::uninit({rows, geom.patch()});
        gemm(false, true, rows, geom.patch(), config_.filters, 1.0, d_pre.data(),
             config_.filters, layer.kernel.data(), config_.filters, 0.0, d_col.data(),
             geom.patch());
        d_act = Tensor({rows, in_ch});
        col2im_add(d_col.data(), geom, d_act.data());
    }

    return grads;
}

std::vector<Tensor*> Model::parameters() {
    std::vector<Tensor*> out;
    for (auto& l : convs_) {
        out.push_back(&l.kernel);
        out.push_back(&l.bias);
        out.push_back(&l.bn.gamma);
        out.push_back(&l.bn.beta);
    }
    for (auto& l : denses_) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
        out.push_back(&l.bn.gamma);
        out.push_back(&l.bn.beta);
    }
    out.push_back(&output_.weight);
    out.push_back(&output_.bias);
    return out;
}

std::vector<const Tensor*> Model::parameters() const {
    std::vector<const Tensor*> out;
    auto mutable_list = const_cast<Model*>(this)->parameters();
    out.assign(mutable_list.begin(), mutable_list.end());
    return out;
}

std::vector<std::string> Model::parameter_names() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        const std::string base = "conv" + std::to_string(i);
        out.push_back(base + ".kernel");
        out.push_back(base + ".bias");
        out.push_back(base + ".bn.gamma");
        out.push_back(base + ".bn.beta");
    }
    for (std::size_t i = 0; i < denses_.size(); ++i) {
        const std::string base = "dense" + std::to_string(i);
        out.push_back(base + ".weight");
        out.push_back(base + ".bias");
        out.push_back(base + ".bn.gamma");
        out.push_back(base + ".bn.beta");
    }
    out.push_back("output.weight");
    out.push_back("output.bias");
    return out;
}

std::vector<Tensor*> Model::running_stats() {
    std::vector<Tensor*> out;
    for (auto& l : convs_) {
        out.push_back(&l.bn.running_mean);
        out.push_back(&l.bn.running_var);
    }
    for (auto& l : denses_) {
        out.push_back(&l.bn.running_mean);
        out.push_back(&l.bn.running_var);
    }
    return out;
}

std::vector<const Tensor*> Model::running_stats() const {
    std::vector<const Tensor*> out;
    auto mutable_list = const_cast<Model*>(this)->running_stats();
    out.assign(mutable_list.begin(), mutable_list.end());
    return out;
}

std::vector<std::string> Model::running_stat_names() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        const std::string base = "conv" + std::to_string(i) + ".bn.";
        out.push_back(base + "running_mean");
        out.push_back(base + "running_var");
    }
    for (std::size_t i = 0; i < denses_.size(); ++i) {
        const std::string base = "dense" + std::to_string(i) + ".bn.";
        out.push_back(base + "running_mean");
        out.push_back(base + "running_var");
    }
    return out;
}

std::int64_t Model::parameter_count() const {
    std::int64_t n = 0;
    for (const Tensor* t : parameters()) n += t->size();
    return n;
}

}  // namespace qclearn
