#include "scalar_oracle.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

Mat to_mat(const wmagin::Tensor& t) {
    Mat m(t.rows(), Vec(t.cols()));
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.data()[i * t.cols() + j];
    return m;
}

Vec to_vec(const wmagin::Tensor& t) { return Vec(t.data().begin(), t.data().end()); }

Adjacency cycle(std::size_t n) {
    Adjacency adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        adj[i].push_back((i + n - 1) % n);
        if ((i + 1) % n != (i + n - 1) % n) adj[i].push_back((i + 1) % n);
    }
    return adj;
}

Adjacency complete(std::size_t n) {
    Adjacency adj(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) adj[i].push_back(j);
    return adj;
}

Mat linear(const Mat& x, const Mat& w, const Vec& b) {
    Mat out(x.size(), Vec(b.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k) acc += x[i][k] * w[k][j];
            out[i][j] = acc + b[j];
        }
    }
    return out;
}

Mat aggregate_sum(const Mat& x, const Adjacency& adj) {
    Mat out(x.size(), Vec(x[0].size(), 0.0));
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j : adj[i])
            for (std::size_t d = 0; d < x[0].size(); ++d) out[i][d] += x[j][d];
    return out;
}

Mat aggregate_mean(const Mat& x, const Adjacency& adj) {
    Mat out = aggregate_sum(x, adj);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (double& v : out[i]) v /= static_cast<double>(adj[i].size());
    return out;
}

Mat aggregate_softmax(const Mat& x, const Adjacency& adj) {
    Mat out(x.size(), Vec(x[0].size(), 0.0));
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t d = 0; d < x[0].size(); ++d) {
            double m = -INFINITY;
            for (std::size_t j : adj[i]) m = std::max(m, x[j][d]);
            double z = 0.0, acc = 0.0;
            for (std::size_t j : adj[i]) {
                const double w = std::exp(x[j][d] - m);
                z += w;
                acc += w * x[j][d];
            }
            out[i][d] = acc / z;
        }
    }
    return out;
}

Mat plain_gin(const Mat& x, const Adjacency& adj, double eps, const Mat& w, const Vec& b) {
    Mat pre(x.size(), Vec(x[0].size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::vector<std::size_t> nbrs = adj[i];
        std::sort(nbrs.begin(), nbrs.end());
        for (std::size_t d = 0; d < x[0].size(); ++d) {
            double agg = 0.0;
            for (std::size_t j : nbrs) agg += x[j][d];
            pre[i][d] = (1.0 + eps) * x[i][d] + agg;
        }
    }
    return linear(pre, w, b);
}

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Gate weights are (in + hidden) x hidden over the concatenation [x, h].
Mat gru_direction(const Mat& x, const wmagin::GruCell& cell, bool reverse) {
    const Mat wz = to_mat(cell.w_z), wr = to_mat(cell.w_r), wh = to_mat(cell.w_h);
    const Vec bz = to_vec(cell.b_z), br = to_vec(cell.b_r), bh = to_vec(cell.b_h);
    const std::size_t n = x.size(), in = x[0].size(), hid = bz.size();
    Mat out(n, Vec(hid));
    Vec h(hid, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t t = reverse ? n - 1 - s : s;
        Vec z(hid), r(hid), c(hid);
        for (std::size_t j = 0; j < hid; ++j) {
            double az = bz[j], ar = br[j];
            for (std::size_t k = 0; k < in; ++k) {
                az += x[t][k] * wz[k][j];
                ar += x[t][k] * wr[k][j];
            }
            for (std::size_t k = 0; k < hid; ++k) {
                az += h[k] * wz[in + k][j];
                ar += h[k] * wr[in + k][j];
            }
            z[j] = sigmoid(az);
            r[j] = sigmoid(ar);
        }
        for (std::size_t j = 0; j < hid; ++j) {
            double ac = bh[j];
            for (std::size_t k = 0; k < in; ++k) ac += x[t][k] * wh[k][j];
            for (std::size_t k = 0; k < hid; ++k) ac += r[k] * h[k] * wh[in + k][j];
            c[j] = std::tanh(ac);
        }
        for (std::size_t j = 0; j < hid; ++j) h[j] = (1.0 - z[j]) * h[j] + z[j] * c[j];
        out[t] = h;
    }
    return out;
}

Vec masked_mean(const Mat& x, const wmagin::Mask& mask) {
    Vec out(x[0].size(), 0.0);
    double count = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!mask[i]) continue;
        count += 1.0;
        for (std::size_t d = 0; d < out.size(); ++d) out[d] += x[i][d];
    }
    for (double& v : out) v /= count;
    return out;
}

Vec head(const Vec& x, const wmagin::Linear& lin) {
    return linear(Mat{x}, to_mat(lin.weight), to_vec(lin.bias))[0];
}

Mat apply_linear(const wmagin::Linear& lin, const Mat& x) {
    return linear(x, to_mat(lin.weight), to_vec(lin.bias));
}

}  // namespace

Logits model_forward(const wmagin::FrameGraph& graph, const wmagin::ModelParams& params,
                     const wmagin::ModelConfig& config) {
    const std::size_t n = graph.num_nodes();
    Mat s(n, Vec(graph.node_features.cols));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < s[i].size(); ++k) s[i][k] = graph.node_features(i, k);

    const Mat fwd = gru_direction(s, params.gru.forward, false);
    const Mat bwd = gru_direction(s, params.gru.backward, true);
    Mat g(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = fwd[i];
        g[i].insert(g[i].end(), bwd[i].begin(), bwd[i].end());
    }

    const auto& w = config.aggregator_weights;
    std::vector<Mat> layers;
    Mat x = g;
    for (std::size_t l = 1; l <= params.gin.size(); ++l) {
        const Adjacency adj = l == config.fa_layer_index ? complete(n) : cycle(n);
        const auto& p = params.gin[l - 1];
        const double eps = p.epsilon.data()[0];
        const Mat su = aggregate_sum(x, adj), me = aggregate_mean(x, adj),
                  so = aggregate_softmax(x, adj);
        Mat pre(n, Vec(x[0].size()));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t d = 0; d < pre[i].size(); ++d)
                pre[i][d] = (1.0 + eps) * x[i][d] + w.alpha * su[i][d] + w.beta * me[i][d] +
                            w.gamma * so[i][d];
        Mat out = apply_linear(p.mlp, pre);
        if (config.residual && l >= 2)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t d = 0; d < out[i].size(); ++d) out[i][d] += x[i][d];
        layers.push_back(out);
        x = out;
    }

    Mat deepest = layers.back();
    if (config.stage_e_source == wmagin::StageESource::Mpa) {
        const Mat q = apply_linear(params.mpa.query, s), k = apply_linear(params.mpa.key, g),
                  v = apply_linear(params.mpa.value, layers.back());
        const double scale = 1.0 / std::sqrt(static_cast<double>(q[0].size()));
        for (std::size_t i = 0; i < n; ++i) {
            Vec score(n, -INFINITY);
            double m = -INFINITY;
            for (std::size_t j = 0; j < n; ++j) {
                if (!graph.mask[j]) continue;
                double dot = 0.0;
                for (std::size_t d = 0; d < q[i].size(); ++d) dot += q[i][d] * k[j][d];
                score[j] = dot * scale;
                m = std::max(m, score[j]);
            }
            double z = 0.0;
            for (std::size_t j = 0; j < n; ++j) z += graph.mask[j] ? std::exp(score[j] - m) : 0.0;
            Vec row(v[0].size(), 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                if (!graph.mask[j]) continue;
                const double a = std::exp(score[j] - m) / z;
                for (std::size_t d = 0; d < row.size(); ++d) row[d] += a * v[j][d];
            }
            deepest[i] = row;
        }
    }

    Logits out;
    out.a = head(masked_mean(g, graph.mask), params.head_a);
    for (std::size_t l = 0; l + 1 < layers.size(); ++l)
        out.gin.push_back(head(masked_mean(layers[l], graph.mask), params.gin_heads[l]));
    out.e = head(masked_mean(deepest, graph.mask), params.head_e);
    out.total = out.a;
    for (std::size_t c = 0; c < out.total.size(); ++c) {
        for (const auto& s_l : out.gin) out.total[c] += s_l[c];
        out.total[c] += out.e[c];
    }
    return out;
}

double cross_entropy(const Vec& logits, int label) {
    double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    return std::log(z) + m - logits[static_cast<std::size_t>(label)];
}

}  // namespace oracle
