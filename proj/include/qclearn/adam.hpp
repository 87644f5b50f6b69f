#pragma once

#include <cstdint>
#include <vector>

#include "qclearn/tensor.hpp"

namespace qclearn {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Tensor> m, v;
    std::int64_t step = 0;

    static AdamState for_params(const std::vector<Tensor*>& params) {
        AdamState s;
        for (const Tensor* p : params) {
            s.m.emplace_back(p->shape());
            s.v.emplace_back(p->shape());
        }
        return s;
    }
};

// Standard Adam with bias correction.
void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, const AdamHyper& hyper);

}  // namespace qclearn
