#include "sgdlab/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sgdlab/error.hpp"

namespace sgdlab {

namespace {

void partition_groups(int rows, int ghost_size, std::vector<std::pair<int, int>>& groups) {
    groups.clear();
    const int g = std::min(ghost_size, rows);
    int begin = 0;
    while (begin < rows) {
        int end = std::min(begin + g, rows);
        groups.emplace_back(begin, end);
        begin = end;
    }
    if (!groups.empty() && groups.back().second - groups.back().first == 1) {
        throw Error("ghost_bn: remainder group of size 1 in train mode");
    }
}

void check_finite(const double* data, std::size_t n, const char* where) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(data[i])) {
            throw NumericsError(std::string("mlp: non-finite activation in ") + where);
        }
    }
}

} // namespace

void ghost_bn_forward_train(const double* z, int rows, int features, int ghost_size,
                            const double* scale, const double* shift, double eps,
                            double* out, BnCache& cache) {
    require(ghost_size >= 2, "ghost_bn: ghost_size must be >= 2");
    require(rows >= 2, "ghost_bn: need at least 2 rows in train mode");
    partition_groups(rows, ghost_size, cache.groups);
    cache.features = features;
    const std::size_t gcount = cache.groups.size();
    cache.mean.assign(gcount * features, 0.0);
    cache.inv_sd.assign(gcount * features, 0.0);
    cache.xhat.assign(static_cast<std::size_t>(rows) * features, 0.0);
    cache.batch_mean.assign(static_cast<std::size_t>(features), 0.0);
    cache.batch_var.assign(static_cast<std::size_t>(features), 0.0);

    for (std::size_t g = 0; g < gcount; ++g) {
        const auto [begin, end] = cache.groups[g];
        const int n = end - begin;
        double* mu = cache.mean.data() + g * features;
        double* isd = cache.inv_sd.data() + g * features;
        for (int r = begin; r < end; ++r) {
            const double* row = z + static_cast<std::size_t>(r) * features;
            for (int f = 0; f < features; ++f) mu[f] += row[f];
        }
        for (int f = 0; f < features; ++f) mu[f] /= n;
        for (int r = begin; r < end; ++r) {
            const double* row = z + static_cast<std::size_t>(r) * features;
            for (int f = 0; f < features; ++f) {
                const double d = row[f] - mu[f];
                isd[f] += d * d;
            }
        }
        for (int f = 0; f < features; ++f) {
            const double var = isd[f] / n;
            cache.batch_mean[static_cast<std::size_t>(f)] += mu[f] * n;
            cache.batch_var[static_cast<std::size_t>(f)] += var * n;
            isd[f] = 1.0 / std::sqrt(var + eps);
        }
        for (int r = begin; r < end; ++r) {
            const double* row = z + static_cast<std::size_t>(r) * features;
            double* xh = cache.xhat.data() + static_cast<std::size_t>(r) * features;
            double* o = out + static_cast<std::size_t>(r) * features;
            for (int f = 0; f < features; ++f) {
                xh[f] = (row[f] - mu[f]) * isd[f];
                o[f] = scale[f] * xh[f] + shift[f];
            }
        }
    }
    for (int f = 0; f < features; ++f) {
        cache.batch_mean[static_cast<std::size_t>(f)] /= rows;
        cache.batch_var[static_cast<std::size_t>(f)] /= rows;
    }
}

void ghost_bn_forward_eval(const double* z, int rows, int features,
                           const double* running_mean, const double* running_var,
                           const double* scale, const double* shift, double eps,
                           double* out) {
    for (int r = 0; r < rows; ++r) {
        const double* row = z + static_cast<std::size_t>(r) * features;
        double* o = out + static_cast<std::size_t>(r) * features;
        for (int f = 0; f < features; ++f) {
            const double xh = (row[f] - running_mean[f]) / std::sqrt(running_var[f] + eps);
            o[f] = scale[f] * xh + shift[f];
        }
    }
}

void ghost_bn_backward(const double* dout, const BnCache& cache, const double* scale,
                       double* dz, double* dscale, double* dshift) {
    const int features = cache.features;
    for (std::size_t g = 0; g < cache.groups.size(); ++g) {
        const auto [begin, end] = cache.groups[g];
        const int n = end - begin;
        const double* isd = cache.inv_sd.data() + g * features;
        // Per-feature reductions over the group.
        Vec sum_dxhat(static_cast<std::size_t>(features), 0.0);
        Vec sum_dxhat_xhat(static_cast<std::size_t>(features), 0.0);
        for (int r = begin; r < end; ++r) {
            const double* go = dout + static_cast<std::size_t>(r) * features;
            const double* xh = cache.xhat.data() + static_cast<std::size_t>(r) * features;
            for (int f = 0; f < features; ++f) {
                dscale[f] += go[f] * xh[f];
                dshift[f] += go[f];
                const double dxh = go[f] * scale[f];
                sum_dxhat[static_cast<std::size_t>(f)] += dxh;
                sum_dxhat_xhat[static_cast<std::size_t>(f)] += dxh * xh[f];
            }
        }
        const double inv_n = 1.0 / n;
        for (int r = begin; r < end; ++r) {
            const double* go = dout + static_cast<std::size_t>(r) * features;
            const double* xh = cache.xhat.data() + static_cast<std::size_t>(r) * features;
            double* dzr = dz + static_cast<std::size_t>(r) * features;
            for (int f = 0; f < features; ++f) {
                const double dxh = go[f] * scale[f];
                dzr[f] = isd[f] * (dxh - inv_n * sum_dxhat[static_cast<std::size_t>(f)] -
                                   xh[f] * inv_n * sum_dxhat_xhat[static_cast<std::size_t>(f)]);
            }
        }
    }
}

MlpModel::MlpModel(MlpConfig cfg) : cfg_(std::move(cfg)) {
    require(cfg_.input_dim >= 1, "mlp: input_dim must be >= 1");
    require(cfg_.classes >= 2, "mlp: classes must be >= 2");
    require(!cfg_.hidden.empty(), "mlp: need at least one hidden layer");
    require(!cfg_.ghost_bn || cfg_.ghost_batch_size >= 2,
            "mlp: ghost_batch_size must be >= 2");

    int offset = 0;
    int in = cfg_.input_dim;
    for (int width : cfg_.hidden) {
        require(width >= 1, "mlp: hidden width must be >= 1");
        Layer l;
        l.in = in;
        l.out = width;
        l.w = offset;
        offset += width * in;
        l.b = offset;
        offset += width;
        if (cfg_.ghost_bn) {
            l.scale = offset;
            offset += width;
            l.shift = offset;
            offset += width;
        }
        hidden_.push_back(l);
        in = width;
    }
    out_.in = in;
    out_.out = cfg_.classes;
    out_.w = offset;
    offset += cfg_.classes * in;
    out_.b = offset;
    offset += cfg_.classes;
    param_count_ = offset;
}

Vec MlpModel::init_params(Rng& rng) const {
    Vec p(static_cast<std::size_t>(param_count_), 0.0);
    for (const Layer& l : hidden_) {
        const double sd = std::sqrt(2.0 / l.in);
        for (int i = 0; i < l.out * l.in; ++i) p[static_cast<std::size_t>(l.w + i)] = sd * rng.gaussian();
        if (cfg_.ghost_bn) {
            for (int i = 0; i < l.out; ++i) p[static_cast<std::size_t>(l.scale + i)] = 1.0;
        }
    }
    const double sd = std::sqrt(1.0 / out_.in);
    for (int i = 0; i < out_.out * out_.in; ++i) {
        p[static_cast<std::size_t>(out_.w + i)] = sd * rng.gaussian();
    }
    return p;
}

MlpModel::BnState MlpModel::init_bn_state() const {
    BnState s;
    if (cfg_.ghost_bn) {
        for (const Layer& l : hidden_) {
            s.running_mean.emplace_back(static_cast<std::size_t>(l.out), 0.0);
            s.running_var.emplace_back(static_cast<std::size_t>(l.out), 1.0);
        }
    }
    return s;
}

double MlpModel::forward(const Vec& params, const BnState* bn, const Batch& batch,
                         Mode mode, Workspace& ws, BnState* update_bn) const {
    require(batch.count >= 1, "mlp: empty batch");
    const int rows = batch.count;
    const std::size_t nlayers = hidden_.size();
    ws.act.resize(nlayers + 1);
    ws.pre.resize(nlayers);
    ws.post.resize(nlayers);
    ws.bn.resize(nlayers);

    ws.act[0].assign(batch.x, batch.x + static_cast<std::size_t>(rows) * cfg_.input_dim);

    for (std::size_t li = 0; li < nlayers; ++li) {
        const Layer& l = hidden_[li];
        Vec& z = ws.pre[li];
        z.assign(static_cast<std::size_t>(rows) * l.out, 0.0);
        const double* x = ws.act[li].data();
        const double* w = params.data() + l.w;
        const double* b = params.data() + l.b;
        for (int r = 0; r < rows; ++r) {
            const double* xr = x + static_cast<std::size_t>(r) * l.in;
            double* zr = z.data() + static_cast<std::size_t>(r) * l.out;
            for (int o = 0; o < l.out; ++o) {
                const double* wr = w + static_cast<std::size_t>(o) * l.in;
                double s = b[o];
                for (int i = 0; i < l.in; ++i) s += wr[i] * xr[i];
                zr[o] = s;
            }
        }
        check_finite(z.data(), z.size(), ("hidden linear " + std::to_string(li + 1)).c_str());

        Vec& post = ws.post[li];
        post.assign(z.size(), 0.0);
        if (cfg_.ghost_bn) {
            const double* scale = params.data() + l.scale;
            const double* shift = params.data() + l.shift;
            if (mode == Mode::Train) {
                ghost_bn_forward_train(z.data(), rows, l.out, cfg_.ghost_batch_size,
                                       scale, shift, cfg_.bn_eps, post.data(), ws.bn[li]);
                if (update_bn) {
                    Vec& rm = update_bn->running_mean[li];
                    Vec& rv = update_bn->running_var[li];
                    const double m = cfg_.bn_momentum;
                    for (int f = 0; f < l.out; ++f) {
                        rm[static_cast<std::size_t>(f)] =
                            m * rm[static_cast<std::size_t>(f)] +
                            (1.0 - m) * ws.bn[li].batch_mean[static_cast<std::size_t>(f)];
                        rv[static_cast<std::size_t>(f)] =
                            m * rv[static_cast<std::size_t>(f)] +
                            (1.0 - m) * ws.bn[li].batch_var[static_cast<std::size_t>(f)];
                    }
                }
            } else {
                ghost_bn_forward_eval(z.data(), rows, l.out,
                                      bn->running_mean[li].data(), bn->running_var[li].data(),
                                      scale, shift, cfg_.bn_eps, post.data());
            }
        } else {
            post = z;
        }

        Vec& a = ws.act[li + 1];
        a.assign(post.size(), 0.0);
        for (std::size_t i = 0; i < post.size(); ++i) a[i] = post[i] > 0.0 ? post[i] : 0.0;
    }

    // Output layer + stable softmax cross-entropy.
    const Layer& ol = out_;
    ws.logits.assign(static_cast<std::size_t>(rows) * ol.out, 0.0);
    {
        const double* x = ws.act[nlayers].data();
        const double* w = params.data() + ol.w;
        const double* b = params.data() + ol.b;
        for (int r = 0; r < rows; ++r) {
            const double* xr = x + static_cast<std::size_t>(r) * ol.in;
            double* zr = ws.logits.data() + static_cast<std::size_t>(r) * ol.out;
            for (int o = 0; o < ol.out; ++o) {
                const double* wr = w + static_cast<std::size_t>(o) * ol.in;
                double s = b[o];
                for (int i = 0; i < ol.in; ++i) s += wr[i] * xr[i];
                zr[o] = s;
            }
        }
    }
    check_finite(ws.logits.data(), ws.logits.size(), "output linear");

    ws.probs.assign(ws.logits.size(), 0.0);
    double ce = 0.0;
    for (int r = 0; r < rows; ++r) {
        const double* zr = ws.logits.data() + static_cast<std::size_t>(r) * ol.out;
        double* pr = ws.probs.data() + static_cast<std::size_t>(r) * ol.out;
        double zmax = zr[0];
        for (int k = 1; k < ol.out; ++k) zmax = std::max(zmax, zr[k]);
        double denom = 0.0;
        for (int k = 0; k < ol.out; ++k) {
            pr[k] = std::exp(zr[k] - zmax);
            denom += pr[k];
        }
        const int y = batch.labels[r];
        require(y >= 0 && y < ol.out, "mlp: label out of range");
        ce += -(zr[y] - zmax - std::log(denom));
        for (int k = 0; k < ol.out; ++k) pr[k] /= denom;
    }
    ce /= rows;

    const double l2 = 0.5 * cfg_.l2_coeff * dot(params, params);
    return ce + l2;
}

double MlpModel::loss(const Vec& params, const BnState& bn, const Batch& batch,
                      Mode mode, Workspace& ws) const {
    return forward(params, &bn, batch, mode, ws, nullptr);
}

double MlpModel::loss_and_grad(const Vec& params, BnState& bn, const Batch& batch,
                               Mode mode, Vec& grad, Workspace& ws) const {
    const double total =
        forward(params, &bn, batch, mode, ws, mode == Mode::Train ? &bn : nullptr);

    const int rows = batch.count;
    const std::size_t nlayers = hidden_.size();
    grad.assign(static_cast<std::size_t>(param_count_), 0.0);
    ws.dact.resize(nlayers + 1);

    // d(mean CE)/dlogits = (probs - onehot) / rows
    Vec dlogits = ws.probs;
    for (int r = 0; r < rows; ++r) {
        dlogits[static_cast<std::size_t>(r) * out_.out + batch.labels[r]] -= 1.0;
    }
    scale(dlogits, 1.0 / rows);

    // Output layer.
    {
        const Layer& l = out_;
        const double* x = ws.act[nlayers].data();
        double* dw = grad.data() + l.w;
        double* db = grad.data() + l.b;
        Vec& dx = ws.dact[nlayers];
        dx.assign(static_cast<std::size_t>(rows) * l.in, 0.0);
        const double* w = params.data() + l.w;
        for (int r = 0; r < rows; ++r) {
            const double* xr = x + static_cast<std::size_t>(r) * l.in;
            const double* dzr = dlogits.data() + static_cast<std::size_t>(r) * l.out;
            double* dxr = dx.data() + static_cast<std::size_t>(r) * l.in;
            for (int o = 0; o < l.out; ++o) {
                const double g = dzr[o];
                if (g == 0.0) continue;
                const double* wr = w + static_cast<std::size_t>(o) * l.in;
                double* dwr = dw + static_cast<std::size_t>(o) * l.in;
                for (int i = 0; i < l.in; ++i) {
                    dwr[i] += g * xr[i];
                    dxr[i] += g * wr[i];
                }
                db[o] += g;
            }
        }
    }

    // Hidden layers, last to first.
    for (std::size_t li = nlayers; li-- > 0;) {
        const Layer& l = hidden_[li];
        Vec& dpost = ws.dact[li + 1]; // gradient w.r.t. relu output, reuse as relu input grad
        const Vec& post = ws.post[li];
        for (std::size_t i = 0; i < dpost.size(); ++i) {
            if (post[i] <= 0.0) dpost[i] = 0.0;
        }

        Vec dz;
        if (cfg_.ghost_bn) {
            dz.assign(dpost.size(), 0.0);
            ghost_bn_backward(dpost.data(), ws.bn[li], params.data() + l.scale,
                              dz.data(), grad.data() + l.scale, grad.data() + l.shift);
        } else {
            dz = dpost;
        }

        const double* x = ws.act[li].data();
        const double* w = params.data() + l.w;
        double* dw = grad.data() + l.w;
        double* db = grad.data() + l.b;
        Vec& dx = ws.dact[li];
        dx.assign(static_cast<std::size_t>(rows) * l.in, 0.0);
        for (int r = 0; r < rows; ++r) {
            const double* xr = x + static_cast<std::size_t>(r) * l.in;
            const double* dzr = dz.data() + static_cast<std::size_t>(r) * l.out;
            double* dxr = dx.data() + static_cast<std::size_t>(r) * l.in;
            for (int o = 0; o < l.out; ++o) {
                const double g = dzr[o];
                if (g == 0.0) continue;
                const double* wr = w + static_cast<std::size_t>(o) * l.in;
                double* dwr = dw + static_cast<std::size_t>(o) * l.in;
                for (int i = 0; i < l.in; ++i) {
                    dwr[i] += g * xr[i];
                    dxr[i] += g * wr[i];
                }
                db[o] += g;
            }
        }
    }

    axpy(cfg_.l2_coeff, params, grad);
    return total;
}

MlpModel::EvalMetrics MlpModel::evaluate(const Vec& params, const BnState& bn,
                                         const double* xs, const int* labels, int count,
                                         Workspace& ws) const {
    require(count >= 1, "mlp: evaluate on empty range");
    constexpr int kChunk = 256;
    double ce = 0.0, correct = 0.0, mse = 0.0;
    for (int begin = 0; begin < count; begin += kChunk) {
        const int rows = std::min(kChunk, count - begin);
        Batch b;
        b.x = xs + static_cast<std::size_t>(begin) * cfg_.input_dim;
        b.labels = labels + begin;
        b.count = rows;
        // forward() returns mean CE + L2 for the chunk; recover the CE sum.
        const double l2 = 0.5 * cfg_.l2_coeff * dot(params, params);
        const double chunk_loss = forward(params, &bn, b, Mode::Eval, ws, nullptr);
        ce += (chunk_loss - l2) * rows;
        for (int r = 0; r < rows; ++r) {
            const double* pr = ws.probs.data() + static_cast<std::size_t>(r) * cfg_.classes;
            int argmax = 0;
            for (int k = 1; k < cfg_.classes; ++k) {
                if (pr[k] > pr[argmax]) argmax = k;
            }
            if (argmax == b.labels[r]) correct += 1.0;
            double e = 0.0;
            for (int k = 0; k < cfg_.classes; ++k) {
                const double t = (k == b.labels[r]) ? 1.0 : 0.0;
                e += (pr[k] - t) * (pr[k] - t);
            }
            mse += e;
        }
    }
    EvalMetrics m;
    m.loss = ce / count + 0.5 * cfg_.l2_coeff * dot(params, params);
    m.accuracy = correct / count;
    m.mse = mse / count;
    return m;
}

MlpModel::Batch MlpModel::gather(const double* xs, const int* labels,
                                 const std::vector<int>& indices, std::vector<int>& label_buf,
                                 Workspace& ws) const {
    const int d = cfg_.input_dim;
    ws.gathered.resize(indices.size() * static_cast<std::size_t>(d));
    label_buf.resize(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const double* src = xs + static_cast<std::size_t>(indices[r]) * d;
        std::copy(src, src + d, ws.gathered.data() + r * d);
        label_buf[r] = labels[indices[r]];
    }
    Batch b;
    b.x = ws.gathered.data();
    b.labels = label_buf.data();
    b.count = static_cast<int>(indices.size());
    return b;
}

} // namespace sgdlab
