// mlp.cpp — Dense feed-forward network with reverse-mode gradients, plus Adam

#include "sdfkit/mlp.hpp"

#include "sdfkit/errors.hpp"
#include "sdfkit/random.hpp"

#include <cmath>

namespace sdfkit {

std::string to_string(Activation a) {
    switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::softplus: return "softplus";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
    }
    return "identity";
}

Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "softplus") return Activation::softplus;
    if (s == "relu") return Activation::relu;
    if (s == "identity" || s == "linear") return Activation::identity;
    throw ConfigError("unknown activation '" + s + "'");
}

namespace {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
    switch (a) {
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::softplus: return z.unaryExpr([](double x) { return softplus(x); });
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::identity: return z;
    }
    return z;
}

// Derivative of the activation, expressed through z and a = act(z).
Eigen::MatrixXd activation_slope(const Eigen::MatrixXd& z, const Eigen::MatrixXd& a, Activation act) {
    switch (act) {
    case Activation::tanh: return (1.0 - a.array().square()).matrix();
    case Activation::softplus: return z.unaryExpr([](double x) { return sigmoid(x); });
    case Activation::relu: return z.unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; });
    case Activation::identity: return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    }
    return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

} // namespace

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { check(); }

void Mlp::check() const {
    if (layers_.empty()) throw InputError("Mlp: at least one layer is required");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& L = layers_[l];
        if (L.W.rows() == 0 || L.W.cols() == 0 || L.b.size() != L.W.rows()) {
            throw InputError("Mlp: layer " + std::to_string(l) + " has inconsistent shapes");
        }
        if (l > 0 && L.W.cols() != layers_[l - 1].W.rows()) {
            throw InputError("Mlp: layer " + std::to_string(l) + " input width does not match the previous layer");
        }
        if (!L.W.allFinite() || !L.b.allFinite()) throw InputError("Mlp: non-finite parameters");
    }
}

Mlp Mlp::random(const std::vector<std::size_t>& sizes, Activation hidden, std::uint64_t seed) {
    if (sizes.size() < 2) throw InputError("Mlp::random: need input and output sizes");
    Rng rng(seed);
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const auto in = static_cast<Eigen::Index>(sizes[l]);
        const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
        DenseLayer L{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out),
                     l + 2 == sizes.size() ? Activation::identity : hidden};
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        for (Eigen::Index j = 0; j < in; ++j) {
            for (Eigen::Index i = 0; i < out; ++i) L.W(i, j) = scale * rng.normal();
        }
        layers.push_back(std::move(L));
    }
    return Mlp(std::move(layers));
}

std::size_t Mlp::n_params() const {
    std::size_t n = 0;
    for (const auto& L : layers_) n += static_cast<std::size_t>(L.W.size() + L.b.size());
    return n;
}

std::vector<std::size_t> Mlp::layer_sizes() const {
    std::vector<std::size_t> s{input_dim()};
    for (const auto& L : layers_) s.push_back(static_cast<std::size_t>(L.W.rows()));
    return s;
}

std::vector<double> Mlp::flatten() const {
    std::vector<double> theta;
    theta.reserve(n_params());
    for (const auto& L : layers_) {
        theta.insert(theta.end(), L.W.data(), L.W.data() + L.W.size());
        theta.insert(theta.end(), L.b.data(), L.b.data() + L.b.size());
    }
    return theta;
}

void Mlp::assign(std::span<const double> theta) {
    if (theta.size() != n_params()) throw InputError("Mlp::assign: parameter count mismatch");
    std::size_t pos = 0;
    for (auto& L : layers_) {
        std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(pos), L.W.size(), L.W.data());
        pos += static_cast<std::size_t>(L.W.size());
        std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(pos), L.b.size(), L.b.data());
        pos += static_cast<std::size_t>(L.b.size());
    }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& X, Tape* tape) const {
    if (static_cast<std::size_t>(X.rows()) != input_dim()) throw InputError("Mlp::forward: input width mismatch");
    if (tape) {
        tape->pre.clear();
        tape->post.assign(1, X);
    }
    Eigen::MatrixXd a = X;
    for (const auto& L : layers_) {
        Eigen::MatrixXd z = L.W * a;
        z.colwise() += L.b;
        a = activate(z, L.act);
        if (tape) {
            tape->pre.push_back(z);
            tape->post.push_back(a);
        }
    }
    return a;
}

std::vector<double> Mlp::backward(const Tape& tape, const Eigen::MatrixXd& dY, Eigen::MatrixXd* dX) const {
    if (tape.pre.size() != layers_.size()) throw InputError("Mlp::backward: tape does not match the network");
    std::vector<double> grad(n_params());
    std::vector<std::size_t> offset(layers_.size());
    std::size_t pos = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        offset[l] = pos;
        pos += static_cast<std::size_t>(layers_[l].W.size() + layers_[l].b.size());
    }
    Eigen::MatrixXd delta = dY;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& L = layers_[l];
        delta = delta.cwiseProduct(activation_slope(tape.pre[l], tape.post[l + 1], L.act));
        const Eigen::MatrixXd gW = delta * tape.post[l].transpose();
        const Eigen::VectorXd gb = delta.rowwise().sum();
        std::copy_n(gW.data(), gW.size(), grad.begin() + static_cast<std::ptrdiff_t>(offset[l]));
        std::copy_n(gb.data(), gb.size(), grad.begin() + static_cast<std::ptrdiff_t>(offset[l] + gW.size()));
        if (l > 0 || dX) delta = L.W.transpose() * delta;
    }
    if (dX) *dX = delta;
    return grad;
}

EvalGrad mlp_eval_and_grad(const Mlp& net, double omega, bool with_grad) {
    if (net.input_dim() != 1 || net.output_dim() != 1) throw InputError("mlp_eval_and_grad: expected a 1-in 1-out network");
    Eigen::MatrixXd X(1, 1);
    X(0, 0) = omega;
    Mlp::Tape tape;
    const Eigen::MatrixXd Y = net.forward(X, with_grad ? &tape : nullptr);
    EvalGrad r{Y(0, 0), {}};
    if (with_grad) r.gradient = net.backward(tape, Eigen::MatrixXd::Ones(1, 1));
    return r;
}

nlohmann::json to_json(const Mlp& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& L : net.layers()) {
        layers.push_back({{"rows", L.W.rows()},
                          {"cols", L.W.cols()},
                          {"activation", to_string(L.act)},
                          {"W", std::vector<double>(L.W.data(), L.W.data() + L.W.size())},
                          {"b", std::vector<double>(L.b.data(), L.b.data() + L.b.size())}});
    }
    return nlohmann::json{{"layer_sizes", net.layer_sizes()}, {"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
    try {
        std::vector<DenseLayer> layers;
        for (const auto& l : j.at("layers")) {
            const auto rows = l.at("rows").get<Eigen::Index>();
            const auto cols = l.at("cols").get<Eigen::Index>();
            const auto W = l.at("W").get<std::vector<double>>();
            const auto b = l.at("b").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(W.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows) {
                throw ConfigError("network JSON: weight count does not match the declared shape");
            }
            DenseLayer L{Eigen::Map<const Eigen::MatrixXd>(W.data(), rows, cols),
                         Eigen::Map<const Eigen::VectorXd>(b.data(), rows),
                         activation_from_string(l.at("activation").get<std::string>())};
            layers.push_back(std::move(L));
        }
        return Mlp(std::move(layers));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("network JSON: ") + e.what());
    }
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {
    if (!(lr > 0.0)) throw InputError("Adam: learning rate must be positive");
}

void Adam::step(std::vector<double>& theta, const std::vector<double>& grad) {
    if (theta.size() != m_.size() || grad.size() != m_.size()) throw InputError("Adam::step: size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        theta[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

} // namespace sdfkit
