// Adam with canonical defaults and bias correction; only the learning rate
// and schedule (constant) are externally tuned.
#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ecase/common.hpp"
#include "ecase/tensor.hpp"

namespace ecase {

class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
        if (!(lr > 0.0)) throw ConfigError("adam: learning rate must be > 0");
    }

    void step(const std::vector<Tensor*>& params) {
        ++t_;
        const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
        for (Tensor* p : params) {
            State& s = state_[p->name];
            if (s.m.size() != p->w.size()) {
                s.m = Mat(p->w.rows, p->w.cols);
                s.v = Mat(p->w.rows, p->w.cols);
            }
            for (std::size_t i = 0; i < p->w.a.size(); ++i) {
                const double g = p->g.a[i];
                s.m.a[i] = b1_ * s.m.a[i] + (1.0 - b1_) * g;
                s.v.a[i] = b2_ * s.v.a[i] + (1.0 - b2_) * g * g;
                const double mhat = s.m.a[i] / bc1;
                const double vhat = s.v.a[i] / bc2;
                p->w.a[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    double lr() const { return lr_; }
    long steps_taken() const { return t_; }

private:
    struct State {
        Mat m, v;
    };
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::map<std::string, State> state_;
};

}  // namespace ecase
