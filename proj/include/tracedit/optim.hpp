#pragma once

// AdamW with decoupled weight decay and per-group hyperparameters.

#include "tracedit/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace tracedit {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

template <typename T>
class AdamW {
public:
    void add_group(AdamWConfig config, std::vector<Tensor<T>> params) {
        Group g;
        g.config = config;
        for (auto& p : params) {
            Slot s;
            s.param = p;
            s.m.assign(static_cast<size_t>(p.size()), T(0));
            s.v.assign(static_cast<size_t>(p.size()), T(0));
            g.slots.push_back(std::move(s));
        }
        groups_.push_back(std::move(g));
    }

    int64_t step_count() const { return step_; }

    void step() {
        ++step_;
        for (auto& g : groups_) {
            const double bc1 = 1.0 - std::pow(g.config.beta1, static_cast<double>(step_));
            const double bc2 = 1.0 - std::pow(g.config.beta2, static_cast<double>(step_));
            const T b1 = static_cast<T>(g.config.beta1);
            const T b2 = static_cast<T>(g.config.beta2);
            const T lr = static_cast<T>(g.config.lr);
            const T eps = static_cast<T>(g.config.eps);
            const T wd = static_cast<T>(g.config.weight_decay);
            for (auto& s : g.slots) {
                T* p = s.param.data();
                T* grad = s.param.grad();
                for (int64_t i = 0; i < s.param.size(); ++i) {
                    const T gi = grad[i];
                    if (!std::isfinite(static_cast<double>(gi)))
                        throw std::runtime_error("optimizer: non-finite gradient");
                    s.m[static_cast<size_t>(i)] = b1 * s.m[static_cast<size_t>(i)] + (T(1) - b1) * gi;
                    s.v[static_cast<size_t>(i)] = b2 * s.v[static_cast<size_t>(i)] + (T(1) - b2) * gi * gi;
                    const T mhat = s.m[static_cast<size_t>(i)] / static_cast<T>(bc1);
                    const T vhat = s.v[static_cast<size_t>(i)] / static_cast<T>(bc2);
                    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * p[i]);
                }
            }
        }
    }

    void zero_grad() {
        for (auto& g : groups_)
            for (auto& s : g.slots) s.param.zero_grad();
    }

private:
    struct Slot {
        Tensor<T> param;
        std::vector<T> m, v;
    };
    struct Group {
        AdamWConfig config;
        std::vector<Slot> slots;
    };

    std::vector<Group> groups_;
    int64_t step_ = 0;
};

}  // namespace tracedit
