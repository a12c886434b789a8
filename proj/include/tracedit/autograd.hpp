#pragma once

// Reverse-mode differentiation over a recorded tape. A Graph owns the tape
// for one forward pass: every primitive appends its backward closure in
// execution order, so replaying the tape in reverse is already a reverse
// topological traversal. Tensors produced while recording are "tracked" when
// any input is tracked; frozen weights participate in backward as constants
// and never accumulate gradient.

#include "tracedit/tensor.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace tracedit {

namespace detail {

template <typename T>
inline void check_finite(const Tensor<T>& t, const char* op) {
    if (!t.all_finite())
        throw std::runtime_error(std::string("autograd: non-finite value produced by '") + op + "'");
}

}  // namespace detail

template <typename T>
class Graph {
public:
    explicit Graph(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }
    size_t tape_size() const { return steps_.size(); }

    // ---------------------------------------------------------------- add
    Tensor<T> add(Tensor<T> a, Tensor<T> b) {
        if (!same_shape(a, b))
            throw std::invalid_argument("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
        Tensor<T> out = Tensor<T>::zeros(a.shape());
        out.vec() = a.vec() + b.vec();
        finish("add", out, {a, b}, [a, b, out]() mutable {
            if (a.tracked()) a.grad_vec() += ConstVecMap<T>(out.grad(), out.size());
            if (b.tracked()) b.grad_vec() += ConstVecMap<T>(out.grad(), out.size());
        });
        return out;
    }

    Tensor<T> scale(Tensor<T> a, T c) {
        Tensor<T> out = Tensor<T>::zeros(a.shape());
        out.vec() = a.vec() * c;
        finish("scale", out, {a}, [a, c, out]() mutable {
            if (a.tracked()) a.grad_vec() += c * ConstVecMap<T>(out.grad(), out.size());
        });
        return out;
    }

    Tensor<T> mul(Tensor<T> a, Tensor<T> b) {
        if (!same_shape(a, b))
            throw std::invalid_argument("mul: shape mismatch");
        Tensor<T> out = Tensor<T>::zeros(a.shape());
        out.vec() = a.vec().cwiseProduct(b.vec());
        finish("mul", out, {a, b}, [a, b, out]() mutable {
            ConstVecMap<T> g(out.grad(), out.size());
            if (a.tracked()) a.grad_vec() += g.cwiseProduct(b.vec());
            if (b.tracked()) b.grad_vec() += g.cwiseProduct(a.vec());
        });
        return out;
    }

    Tensor<T> sum(Tensor<T> a) {
        Tensor<T> out = Tensor<T>::scalar(a.vec().sum());
        finish("sum", out, {a}, [a, out]() mutable {
            if (a.tracked()) a.grad_vec().array() += out.grad()[0];
        });
        return out;
    }

    // ------------------------------------------------------------- matmul
    Tensor<T> matmul(Tensor<T> a, Tensor<T> b) {
        if (a.cols() != b.rows())
            throw std::invalid_argument("matmul: inner dimensions disagree " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
        Tensor<T> out = Tensor<T>::zeros({a.rows(), b.cols()});
        out.mat().noalias() = a.mat() * b.mat();
        finish("matmul", out, {a, b}, [a, b, out]() mutable {
            ConstMatMap<T> g(out.grad(), out.rows(), out.cols());
            if (a.tracked()) a.grad_mat().noalias() += g * b.mat().transpose();
            if (b.tracked()) b.grad_mat().noalias() += a.mat().transpose() * g;
        });
        return out;
    }

    Tensor<T> gather_rows(Tensor<T> x, std::vector<int> rows) {
        const int cols = x.cols();
        Tensor<T> out = Tensor<T>::zeros({static_cast<int>(rows.size()), cols});
        {
            auto xm = x.mat();
            auto om = out.mat();
            for (size_t i = 0; i < rows.size(); ++i) {
                if (rows[i] < 0 || rows[i] >= x.rows())
                    throw std::invalid_argument("gather_rows: row index out of range");
                om.row(static_cast<int>(i)) = xm.row(rows[i]);
            }
        }
        finish("gather_rows", out, {x}, [x, rows, out]() mutable {
            if (!x.tracked()) return;
            ConstMatMap<T> g(out.grad(), out.rows(), out.cols());
            auto xg = x.grad_mat();
            for (size_t i = 0; i < rows.size(); ++i)
                xg.row(rows[i]) += g.row(static_cast<int>(i));
        });
        return out;
    }

    // Token + position embedding lookup: out[i] = emb[ids[i]] + pos[positions[i]].
    Tensor<T> embed(const std::vector<int>& ids, const std::vector<int>& positions,
                    Tensor<T> emb, Tensor<T> pos) {
        if (ids.size() != positions.size())
            throw std::invalid_argument("embed: ids/positions length mismatch");
        const int d = emb.cols();
        if (pos.cols() != d) throw std::invalid_argument("embed: embedding widths disagree");
        Tensor<T> out = Tensor<T>::zeros({static_cast<int>(ids.size()), d});
        {
            auto em = emb.mat();
            auto pm = pos.mat();
            auto om = out.mat();
            for (size_t i = 0; i < ids.size(); ++i) {
                if (ids[i] < 0 || ids[i] >= emb.rows())
                    throw std::invalid_argument("embed: token id out of range");
                if (positions[i] < 0 || positions[i] >= pos.rows())
                    throw std::invalid_argument("embed: position out of range");
                om.row(static_cast<int>(i)) = em.row(ids[i]) + pm.row(positions[i]);
            }
        }
        finish("embed", out, {emb, pos}, [ids, positions, emb, pos, out]() mutable {
            ConstMatMap<T> g(out.grad(), out.rows(), out.cols());
            if (emb.tracked()) {
                auto eg = emb.grad_mat();
                for (size_t i = 0; i < ids.size(); ++i) eg.row(ids[i]) += g.row(static_cast<int>(i));
            }
            if (pos.tracked()) {
                auto pg = pos.grad_mat();
                for (size_t i = 0; i < ids.size(); ++i) pg.row(positions[i]) += g.row(static_cast<int>(i));
            }
        });
        return out;
    }

    // --------------------------------------------------------- rms_norm
    Tensor<T> rms_norm(Tensor<T> x, Tensor<T> gain, T eps) {
        const int n = x.rows(), d = x.cols();
        if (gain.size() != d) throw std::invalid_argument("rms_norm: gain width mismatch");
        Tensor<T> out = Tensor<T>::zeros({n, d});
        Tensor<T> inv_rms = Tensor<T>::zeros({n});
        {
            auto xm = x.mat();
            auto gv = gain.vec();
            MatMap<T> om = out.mat();
            for (int i = 0; i < n; ++i) {
                T ms = xm.row(i).squaredNorm() / static_cast<T>(d) + eps;
                inv_rms.data()[i] = T(1) / std::sqrt(ms);
                om.row(i) = xm.row(i).cwiseProduct(gv.transpose()) * inv_rms.data()[i];
            }
        }
        finish("rms_norm", out, {x, gain}, [x, gain, inv_rms, out]() mutable {
            const int n = x.rows(), d = x.cols();
            ConstMatMap<T> g(out.grad(), n, d);
            auto xm = x.mat();
            auto gv = gain.vec();
            for (int i = 0; i < n; ++i) {
                const T ir = inv_rms.data()[i];
                auto xi = xm.row(i);
                auto gi = g.row(i);
                if (gain.tracked())
                    gain.grad_vec().transpose() += gi.cwiseProduct(xi) * ir;
                if (x.tracked()) {
                    T dot = gi.cwiseProduct(gv.transpose()).cwiseProduct(xi).sum();
                    x.grad_mat().row(i) += gi.cwiseProduct(gv.transpose()) * ir -
                                           xi * (dot * ir * ir * ir / static_cast<T>(d));
                }
            }
        });
        return out;
    }

    // ------------------------------------------------------------- gelu
    Tensor<T> gelu(Tensor<T> x) {
        Tensor<T> out = Tensor<T>::zeros(x.shape());
        const T c = static_cast<T>(std::sqrt(2.0 / M_PI));
        const T k = static_cast<T>(0.044715);
        for (int64_t i = 0; i < x.size(); ++i) {
            T v = x.data()[i];
            out.data()[i] = T(0.5) * v * (T(1) + std::tanh(c * (v + k * v * v * v)));
        }
        finish("gelu", out, {x}, [x, out, c, k]() mutable {
            if (!x.tracked()) return;
            for (int64_t i = 0; i < x.size(); ++i) {
                T v = x.data()[i];
                T u = c * (v + k * v * v * v);
                T th = std::tanh(u);
                T dudv = c * (T(1) + T(3) * k * v * v);
                T d = T(0.5) * (T(1) + th) + T(0.5) * v * (T(1) - th * th) * dudv;
                x.grad()[i] += d * out.grad()[i];
            }
        });
        return out;
    }

    // ----------------------------------------------------- causal attention
    // q, k, v: [batch*seq, width]; multi-head softmax attention with a strict
    // causal mask within each batch element. Returns [batch*seq, width].
    Tensor<T> causal_attention(Tensor<T> q, Tensor<T> k, Tensor<T> v, int n_heads, int batch, int seq) {
        const int width = q.cols();
        if (q.rows() != batch * seq || !same_shape(q, k) || !same_shape(q, v))
            throw std::invalid_argument("causal_attention: bad input shapes");
        if (width % n_heads != 0)
            throw std::invalid_argument("causal_attention: width not divisible by head count");
        const int hd = width / n_heads;
        const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(hd));

        Tensor<T> out = Tensor<T>::zeros({batch * seq, width});
        // Attention probabilities kept for backward: [batch*n_heads*seq, seq].
        Tensor<T> probs = Tensor<T>::zeros({batch * n_heads * seq, seq});

        using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        {
            auto qm = q.mat();
            auto km = k.mat();
            auto vm = v.mat();
            auto pm = probs.mat();
            auto om = out.mat();
            for (int b = 0; b < batch; ++b) {
                for (int h = 0; h < n_heads; ++h) {
                    auto qb = qm.block(b * seq, h * hd, seq, hd);
                    auto kb = km.block(b * seq, h * hd, seq, hd);
                    auto vb = vm.block(b * seq, h * hd, seq, hd);
                    auto pb = pm.block((b * n_heads + h) * seq, 0, seq, seq);
                    Mat scores = (qb * kb.transpose()) * inv_sqrt;
                    for (int i = 0; i < seq; ++i) {
                        auto row = scores.row(i).head(i + 1);
                        T m = row.maxCoeff();
                        row = (row.array() - m).exp();
                        row /= row.sum();
                        pb.row(i).head(i + 1) = row;
                        // strictly causal: columns > i stay zero
                    }
                    om.block(b * seq, h * hd, seq, hd).noalias() = pb * vb;
                }
            }
        }
        finish("causal_attention", out, {q, k, v},
               [q, k, v, probs, out, n_heads, batch, seq, hd, inv_sqrt]() mutable {
            ConstMatMap<T> g(out.grad(), out.rows(), out.cols());
            auto qm = q.mat();
            auto km = k.mat();
            auto vm = v.mat();
            auto pm0 = probs.mat();
            using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
            for (int b = 0; b < batch; ++b) {
                for (int h = 0; h < n_heads; ++h) {
                    auto qb = qm.block(b * seq, h * hd, seq, hd);
                    auto kb = km.block(b * seq, h * hd, seq, hd);
                    auto vb = vm.block(b * seq, h * hd, seq, hd);
                    auto pb = pm0.block((b * n_heads + h) * seq, 0, seq, seq);
                    auto gb = g.block(b * seq, h * hd, seq, hd);
                    if (v.tracked())
                        v.grad_mat().block(b * seq, h * hd, seq, hd).noalias() += pb.transpose() * gb;
                    if (!q.tracked() && !k.tracked()) continue;
                    Mat dp = gb * vb.transpose();                       // [seq, seq]
                    Mat ds(seq, seq);
                    for (int i = 0; i < seq; ++i) {
                        auto pi = pb.row(i).head(i + 1);
                        auto di = dp.row(i).head(i + 1);
                        T dot = pi.cwiseProduct(di).sum();
                        ds.row(i).setZero();
                        ds.row(i).head(i + 1) = (pi.array() * (di.array() - dot)).matrix();
                    }
                    if (q.tracked())
                        q.grad_mat().block(b * seq, h * hd, seq, hd).noalias() += (ds * kb) * inv_sqrt;
                    if (k.tracked())
                        k.grad_mat().block(b * seq, h * hd, seq, hd).noalias() += (ds.transpose() * qb) * inv_sqrt;
                }
            }
        });
        return out;
    }

    // ------------------------------------------- subspace intervention
    // Rewrites a rank-r subspace of selected rows:
    //   out_i = h_i + R^T (Ws h_i + b - R h_i)   for i in rows,
    // all other rows pass through unchanged.
    Tensor<T> subspace_intervention(Tensor<T> h, Tensor<T> r_proj, Tensor<T> w_star,
                                    Tensor<T> bias, std::vector<int> rows) {
        const int d = h.cols(), r = r_proj.rows();
        if (r_proj.cols() != d || !same_shape(r_proj, w_star) || bias.size() != r)
            throw std::invalid_argument("subspace_intervention: shape mismatch");
        Tensor<T> out = h.clone();
        out.set_requires_grad(false);
        Tensor<T> residual = Tensor<T>::zeros({std::max<int>(1, static_cast<int>(rows.size())), r});
        {
            auto hm = h.mat();
            auto rm = r_proj.mat();
            auto wm = w_star.mat();
            auto bv = bias.vec();
            auto om = out.mat();
            auto um = residual.mat();
            for (size_t idx = 0; idx < rows.size(); ++idx) {
                int i = rows[idx];
                if (i < 0 || i >= h.rows())
                    throw std::invalid_argument("subspace_intervention: row out of range");
                auto hi = hm.row(i).transpose();
                um.row(static_cast<int>(idx)).transpose() = wm * hi + bv - rm * hi;
                om.row(i) += (rm.transpose() * um.row(static_cast<int>(idx)).transpose()).transpose();
            }
        }
        finish("subspace_intervention", out, {h, r_proj, w_star, bias},
               [h, r_proj, w_star, bias, residual, rows, out]() mutable {
            ConstMatMap<T> g(out.grad(), out.rows(), out.cols());
            auto hm = h.mat();
            auto rm = r_proj.mat();
            auto wm = w_star.mat();
            auto um = residual.mat();
            if (h.tracked()) h.grad_mat() += g;
            for (size_t idx = 0; idx < rows.size(); ++idx) {
                int i = rows[idx];
                auto gi = g.row(i).transpose();
                auto hi = hm.row(i).transpose();
                auto u = um.row(static_cast<int>(idx)).transpose();
                Eigen::Matrix<T, Eigen::Dynamic, 1> s = rm * gi;
                if (h.tracked())
                    h.grad_mat().row(i) += (s.transpose() * (wm - rm));
                if (w_star.tracked()) w_star.grad_mat().noalias() += s * hi.transpose();
                if (bias.tracked()) bias.grad_vec() += s;
                if (r_proj.tracked())
                    r_proj.grad_mat().noalias() += u * gi.transpose() - s * hi.transpose();
            }
        });
        return out;
    }

    // ---------------------------------------------------- cross entropy
    // Weighted negative log-likelihood over rows of logits. A target of -1
    // (its weight must be 0) marks an ignored row.
    Tensor<T> cross_entropy(Tensor<T> logits, std::vector<int> targets, std::vector<T> weights) {
        const int n = logits.rows(), vsize = logits.cols();
        if (static_cast<int>(targets.size()) != n || static_cast<int>(weights.size()) != n)
            throw std::invalid_argument("cross_entropy: targets/weights length mismatch");
        T loss = 0;
        std::vector<T> lse(static_cast<size_t>(n));
        {
            auto lm = logits.mat();
            for (int i = 0; i < n; ++i) {
                if (weights[i] == T(0)) continue;
                if (targets[i] < 0 || targets[i] >= vsize)
                    throw std::invalid_argument("cross_entropy: target out of range");
                auto row = lm.row(i);
                T m = row.maxCoeff();
                lse[static_cast<size_t>(i)] = m + std::log((row.array() - m).exp().sum());
                loss += weights[i] * (lse[static_cast<size_t>(i)] - row(targets[i]));
            }
        }
        Tensor<T> out = Tensor<T>::scalar(loss);
        finish("cross_entropy", out, {logits}, [logits, targets, weights, lse, out]() mutable {
            if (!logits.tracked()) return;
            const T go = out.grad()[0];
            auto lm = logits.mat();
            auto lg = logits.grad_mat();
            for (int i = 0; i < logits.rows(); ++i) {
                if (weights[i] == T(0)) continue;
                auto row = lm.row(i);
                lg.row(i) += (row.array() - lse[static_cast<size_t>(i)]).exp().matrix() * (weights[i] * go);
                lg(i, targets[i]) -= weights[i] * go;
            }
        });
        return out;
    }

    // ----------------------------------------------------------- backward
    void backward(Tensor<T> loss) {
        if (loss.size() != 1)
            throw std::invalid_argument("backward: loss must be a scalar");
        if (consumed_)
            throw std::runtime_error("backward: tape already consumed");
        if (!loss.tracked())
            throw std::runtime_error("backward: loss is not connected to the recording tape");
        consumed_ = true;
        loss.grad()[0] = T(1);
        for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) it->fn();
    }

private:
    struct Step {
        const char* op;
        std::function<void()> fn;
    };

    void finish(const char* op, Tensor<T>& out, std::initializer_list<Tensor<T>> inputs,
                std::function<void()> backward_fn) {
        detail::check_finite(out, op);
        if (!recording_) return;
        bool tracked = false;
        for (const auto& in : inputs) tracked |= in.tracked();
        if (!tracked) return;
        out.mark_tracked();
        steps_.push_back(Step{op, std::move(backward_fn)});
    }

    std::vector<Step> steps_;
    bool recording_;
    bool consumed_ = false;
};

// Central finite differences against the analytic gradient for every
// coordinate of every parameter. Returns the maximum relative error
// |analytic - central| / max(|analytic|, |central|, 1e-12).
template <typename T>
double finite_difference_check(const std::function<Tensor<T>(Graph<T>&)>& f,
                               std::vector<Tensor<T>> params, double eps) {
    if (eps <= 0) throw std::invalid_argument("finite_difference_check: eps must be positive");
    for (auto& p : params) p.zero_grad();
    Graph<T> g(true);
    Tensor<T> loss = f(g);
    if (!loss.all_finite()) throw std::runtime_error("finite_difference_check: non-finite loss");
    g.backward(loss);

    std::vector<AlignedVec<T>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) analytic.push_back(p.grad_vector());

    double max_rel = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi];
        for (int64_t i = 0; i < p.size(); ++i) {
            const T saved = p.data()[i];
            p.data()[i] = saved + static_cast<T>(eps);
            Graph<T> gp(false);
            double up = static_cast<double>(f(gp).item());
            p.data()[i] = saved - static_cast<T>(eps);
            Graph<T> gm(false);
            double um = static_cast<double>(f(gm).item());
            p.data()[i] = saved;
            if (!std::isfinite(up) || !std::isfinite(um))
                throw std::runtime_error("finite_difference_check: f returned non-finite");
            double central = (up - um) / (2.0 * eps);
            double a = static_cast<double>(analytic[pi][static_cast<size_t>(i)]);
            double rel = std::abs(a - central) /
                         std::max({std::abs(a), std::abs(central), 1e-12});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

template <typename T>
inline void zero_grads(std::vector<Tensor<T>>& params) {
    for (auto& p : params) p.zero_grad();
}

}  // namespace tracedit
