#include "mmloc/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "mmloc/error.hpp"

namespace mmloc {

namespace {

constexpr double kSpanFloor = 1e-12;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Eigen::VectorXd NormalizationSpec::encode(const Eigen::VectorXd& x) const {
    return (x - lo).cwiseQuotient(span);
}

Eigen::VectorXd NormalizationSpec::decode(const Eigen::VectorXd& y) const {
    return lo + y.cwiseProduct(span);
}

NormalizationSpec NormalizationSpec::fit(const Eigen::MatrixXd& columns) {
    if (columns.cols() == 0) {
        throw error("bad_training_set", "cannot fit normalization on no samples");
    }
    NormalizationSpec spec;
    spec.lo = columns.rowwise().minCoeff();
    spec.span = (columns.rowwise().maxCoeff() - spec.lo).cwiseMax(kSpanFloor);
    return spec;
}

Eigen::VectorXd mlp_forward(const MlpParams& p, const Eigen::VectorXd& x) {
    Eigen::VectorXd a = x;
    const std::size_t last = p.weights.size() - 1;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        Eigen::VectorXd z = p.weights[l] * a + p.biases[l];
        if (l == last) {
            a = z.unaryExpr([](double v) { return sigmoid(v); });
        } else {
            a = z.cwiseMax(0.0);
        }
    }
    return a;
}

Eigen::VectorXd net_predict(const TrainedNet& net, const Eigen::VectorXd& raw_input) {
    return net.target_norm.decode(
        mlp_forward(net.params, net.input_norm.encode(raw_input)));
}

double mlp_loss_and_gradients(const MlpParams& p, const Eigen::MatrixXd& x,
                              const Eigen::MatrixXd& y,
                              std::vector<Eigen::MatrixXd>* grad_w,
                              std::vector<Eigen::VectorXd>* grad_b) {
    const std::size_t layers = p.weights.size();
    std::vector<Eigen::MatrixXd> acts(layers + 1);
    acts[0] = x;
    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd z =
            (p.weights[l] * acts[l]).colwise() + p.biases[l];
        if (l + 1 == layers) {
            acts[l + 1] = z.unaryExpr([](double v) { return sigmoid(v); });
        } else {
            acts[l + 1] = z.cwiseMax(0.0);
        }
    }

    const double count = static_cast<double>(y.rows() * y.cols());
    const Eigen::MatrixXd diff = acts[layers] - y;
    const double loss = diff.squaredNorm() / count;

    if (grad_w && grad_b) {
        grad_w->assign(layers, Eigen::MatrixXd());
        grad_b->assign(layers, Eigen::VectorXd());
        // Output layer: d(loss)/dz = 2*diff/count * sigmoid'(z).
        Eigen::MatrixXd delta =
            (2.0 / count) * diff.cwiseProduct(
                acts[layers].cwiseProduct(
                    (1.0 - acts[layers].array()).matrix()));
        for (std::size_t l = layers; l-- > 0;) {
            (*grad_w)[l] = delta * acts[l].transpose();
            (*grad_b)[l] = delta.rowwise().sum();
            if (l > 0) {
                delta = (p.weights[l].transpose() * delta)
                            .cwiseProduct((acts[l].array() > 0.0)
                                              .cast<double>()
                                              .matrix());
            }
        }
    }
    return loss;
}

namespace {

MlpParams init_params(int input_dim, const std::vector<int>& hidden,
                      int output_dim, std::mt19937_64& rng) {
    std::vector<int> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(output_dim);

    MlpParams p;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) w(r, c) = dist(rng);
        }
        p.weights.push_back(std::move(w));
        p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return p;
}

}  // namespace

TrainedNet train_net(const TrainingSet& data, const TrainOptions& opts) {
    if (data.inputs.cols() != data.targets.cols() || data.inputs.cols() < 4) {
        throw error("bad_training_set",
                    "training inputs/targets must align and have >= 4 samples");
    }

    TrainedNet net;
    net.input_norm = NormalizationSpec::fit(data.inputs);
    net.target_norm = NormalizationSpec::fit(data.targets);

    const int n = static_cast<int>(data.inputs.cols());
    Eigen::MatrixXd x(data.inputs.rows(), n);
    Eigen::MatrixXd y(data.targets.rows(), n);
    for (int i = 0; i < n; ++i) {
        x.col(i) = net.input_norm.encode(data.inputs.col(i));
        y.col(i) = net.target_norm.encode(data.targets.col(i));
    }

    std::mt19937_64 rng(opts.seed);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    const int n_val = std::max(
        1, static_cast<int>(std::lround(opts.validation_fraction * n)));
    const int n_train = n - n_val;
    if (n_train < 1) {
        throw error("bad_training_set", "validation split leaves no training data");
    }

    Eigen::MatrixXd xt(x.rows(), n_train), yt(y.rows(), n_train);
    Eigen::MatrixXd xv(x.rows(), n_val), yv(y.rows(), n_val);
    for (int i = 0; i < n_train; ++i) {
        xt.col(i) = x.col(order[static_cast<std::size_t>(i)]);
        yt.col(i) = y.col(order[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < n_val; ++i) {
        xv.col(i) = x.col(order[static_cast<std::size_t>(n_train + i)]);
        yv.col(i) = y.col(order[static_cast<std::size_t>(n_train + i)]);
    }

    MlpParams p = init_params(static_cast<int>(x.rows()), opts.hidden,
                              static_cast<int>(y.rows()), rng);

    // Adaptive-moment state.
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    for (const auto& w : p.weights) {
        mw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        vw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : p.biases) {
        mb.push_back(Eigen::VectorXd::Zero(b.size()));
        vb.push_back(Eigen::VectorXd::Zero(b.size()));
    }
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long long step = 0;

    MlpParams best = p;
    double best_val = mlp_loss_and_gradients(p, xv, yv, nullptr, nullptr);

    std::vector<int> batch_order(static_cast<std::size_t>(n_train));
    std::iota(batch_order.begin(), batch_order.end(), 0);
    std::vector<Eigen::MatrixXd> gw;
    std::vector<Eigen::VectorXd> gb;

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::shuffle(batch_order.begin(), batch_order.end(), rng);
        for (int start = 0; start < n_train; start += opts.batch_size) {
            const int bsz = std::min(opts.batch_size, n_train - start);
            Eigen::MatrixXd xb(x.rows(), bsz), yb(y.rows(), bsz);
            for (int i = 0; i < bsz; ++i) {
                const int src = batch_order[static_cast<std::size_t>(start + i)];
                xb.col(i) = xt.col(src);
                yb.col(i) = yt.col(src);
            }
            mlp_loss_and_gradients(p, xb, yb, &gw, &gb);
            ++step;
            const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t l = 0; l < p.weights.size(); ++l) {
                mw[l] = beta1 * mw[l] + (1.0 - beta1) * gw[l];
                vw[l] = beta2 * vw[l] + (1.0 - beta2) * gw[l].cwiseProduct(gw[l]);
                mb[l] = beta1 * mb[l] + (1.0 - beta1) * gb[l];
                vb[l] = beta2 * vb[l] + (1.0 - beta2) * gb[l].cwiseProduct(gb[l]);
                p.weights[l] -=
                    (opts.learning_rate * (mw[l] / corr1).array() /
                     ((vw[l] / corr2).array().sqrt() + eps))
                        .matrix();
                p.biases[l] -=
                    (opts.learning_rate * (mb[l] / corr1).array() /
                     ((vb[l] / corr2).array().sqrt() + eps))
                        .matrix();
            }
        }
        const double val = mlp_loss_and_gradients(p, xv, yv, nullptr, nullptr);
        if (val < best_val) {
            best_val = val;
            best = p;
        }
    }

    net.params = std::move(best);
    net.best_validation_mse = best_val;
    return net;
}

namespace {

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%a", v(i));
        out << buf << (i + 1 < v.size() ? ' ' : '\n');
    }
    if (v.size() == 0) out << '\n';
}

Eigen::VectorXd read_vector(std::istream& in, Eigen::Index size) {
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        std::string tok;
        if (!(in >> tok)) throw error("bad_net_file", "truncated network file");
        v(i) = std::strtod(tok.c_str(), nullptr);
    }
    return v;
}

}  // namespace

void save_net(const TrainedNet& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw error("io_error", "cannot write network file: " + path);
    out << "mmloc-net 1\n";
    out << "layers " << net.params.weights.size() << '\n';
    out << "dims " << net.params.input_dim();
    for (const auto& w : net.params.weights) out << ' ' << w.rows();
    out << '\n';
    out << "validation_mse ";
    {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%a", net.best_validation_mse);
        out << buf << '\n';
    }
    for (std::size_t l = 0; l < net.params.weights.size(); ++l) {
        const auto& w = net.params.weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            write_vector(out, w.row(r).transpose());
        }
        write_vector(out, net.params.biases[l]);
    }
    write_vector(out, net.input_norm.lo);
    write_vector(out, net.input_norm.span);
    write_vector(out, net.target_norm.lo);
    write_vector(out, net.target_norm.span);
}

TrainedNet load_net(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("io_error", "cannot read network file: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "mmloc-net" || version != 1) {
        throw error("bad_net_file", "unrecognized network file header");
    }
    std::string word;
    std::size_t layers = 0;
    in >> word >> layers;
    if (word != "layers" || layers == 0 || layers > 64) {
        throw error("bad_net_file", "bad layer count");
    }
    in >> word;
    if (word != "dims") throw error("bad_net_file", "missing dims line");
    std::vector<Eigen::Index> dims(layers + 1);
    for (auto& d : dims) {
        if (!(in >> d) || d <= 0) throw error("bad_net_file", "bad dimension");
    }
    in >> word;
    if (word != "validation_mse") throw error("bad_net_file", "missing validation line");
    std::string tok;
    in >> tok;

    TrainedNet net;
    net.best_validation_mse = std::strtod(tok.c_str(), nullptr);
    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd w(dims[l + 1], dims[l]);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            w.row(r) = read_vector(in, dims[l]).transpose();
        }
        net.params.weights.push_back(std::move(w));
        net.params.biases.push_back(read_vector(in, dims[l + 1]));
    }
    net.input_norm.lo = read_vector(in, dims.front());
    net.input_norm.span = read_vector(in, dims.front());
    net.target_norm.lo = read_vector(in, dims.back());
    net.target_norm.span = read_vector(in, dims.back());
    return net;
}

}  // namespace mmloc
