#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace dsi {

template <typename Scalar>
struct AdamWOptions {
    Scalar learning_rate = Scalar(5e-4);
    Scalar beta1 = Scalar(0.9);
    Scalar beta2 = Scalar(0.999);
    Scalar weight_decay = Scalar(1e-2);
    Scalar epsilon = Scalar(1e-8);
};

/// Adam with decoupled weight decay:
///   p <- p - lr * wd * p
///   m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2
///   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
template <typename Scalar>
class AdamW {
public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    AdamW(Eigen::Index dim, AdamWOptions<Scalar> options)
        : options_(options), m_(Vector::Zero(dim)), v_(Vector::Zero(dim)) {}

    template <typename ParamDerived, typename GradDerived>
    void step(Eigen::MatrixBase<ParamDerived>& params, const Eigen::MatrixBase<GradDerived>& grad) {
        ++t_;
        const Scalar lr = options_.learning_rate;
        params -= (lr * options_.weight_decay) * params;
        m_ = options_.beta1 * m_ + (Scalar(1) - options_.beta1) * grad;
        v_ = options_.beta2 * v_ + (Scalar(1) - options_.beta2) * grad.cwiseAbs2();
        const Scalar bias1 = Scalar(1) - std::pow(options_.beta1, static_cast<Scalar>(t_));
        const Scalar bias2 = Scalar(1) - std::pow(options_.beta2, static_cast<Scalar>(t_));
        params -= (lr * (m_.array() / bias1) / ((v_.array() / bias2).sqrt() + options_.epsilon)).matrix();
    }

    Eigen::Index dim() const { return m_.size(); }
    std::int64_t steps_taken() const { return t_; }
    const Vector& first_moment() const { return m_; }
    const Vector& second_moment() const { return v_; }
    const AdamWOptions<Scalar>& options() const { return options_; }

private:
    AdamWOptions<Scalar> options_;
    Vector m_;
    Vector v_;
    std::int64_t t_ = 0;
};

}  // namespace dsi
