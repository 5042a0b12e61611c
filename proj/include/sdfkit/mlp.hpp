// mlp.hpp — Dense feed-forward network with reverse-mode gradients, plus Adam

#pragma once

#include <Eigen/Dense>

#include "json.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sdfkit {

enum class Activation { tanh, softplus, relu, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct DenseLayer {
    Eigen::MatrixXd W; // out x in
    Eigen::VectorXd b; // out
    Activation act{Activation::identity};
};

// Samples are columns: forward maps (in x B) to (out x B).
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<DenseLayer> layers);

    // Weights ~ N(0, 1/fan_in), biases zero. The output layer is linear.
    static Mlp random(const std::vector<std::size_t>& sizes, Activation hidden, std::uint64_t seed);

    std::size_t input_dim() const { return static_cast<std::size_t>(layers_.front().W.cols()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(layers_.back().W.rows()); }
    std::size_t n_params() const;
    std::vector<std::size_t> layer_sizes() const;
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }

    // Per layer: W in column-major order, then b.
    std::vector<double> flatten() const;
    void assign(std::span<const double> theta);

    struct Tape {
        std::vector<Eigen::MatrixXd> pre;  // z = W a + b per layer
        std::vector<Eigen::MatrixXd> post; // a per layer, post[0] is the input
    };

    Eigen::MatrixXd forward(const Eigen::MatrixXd& X, Tape* tape = nullptr) const;

    // Gradient of sum_ij dY_ij * Y_ij with respect to the flattened parameters.
    // If dX is given it receives the gradient with respect to the input.
    std::vector<double> backward(const Tape& tape, const Eigen::MatrixXd& dY, Eigen::MatrixXd* dX = nullptr) const;

private:
    void check() const;
    std::vector<DenseLayer> layers_;
};

struct EvalGrad {
    double value{0.0};
    std::vector<double> gradient; // empty unless requested
};

// Scalar network N(omega) and, optionally, dN/dtheta.
EvalGrad mlp_eval_and_grad(const Mlp& net, double omega, bool with_grad);

nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

// Adam with bias correction; lr may be changed between steps.
class Adam {
public:
    explicit Adam(std::size_t n, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(std::vector<double>& theta, const std::vector<double>& grad);
    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    std::uint64_t t_{0};
};

} // namespace sdfkit
