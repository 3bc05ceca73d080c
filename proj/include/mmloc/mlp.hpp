#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace mmloc {

// Fully connected network: input -> hidden(relu) x N -> output(sigmoid).
// Weights are stored row-major per layer: y = W x + b.
struct MlpParams {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    int input_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols()); }
    int output_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.back().rows()); }
};

// Per-component affine map to/from the unit interval, fit on training data.
struct NormalizationSpec {
    Eigen::VectorXd lo;    // component minimum
    Eigen::VectorXd span;  // max - min, floored at a tiny positive value

    Eigen::VectorXd encode(const Eigen::VectorXd& x) const;
    Eigen::VectorXd decode(const Eigen::VectorXd& y) const;

    static NormalizationSpec fit(const Eigen::MatrixXd& columns);
};

struct TrainingSet {
    Eigen::MatrixXd inputs;   // one sample per column
    Eigen::MatrixXd targets;  // one sample per column
};

struct TrainOptions {
    std::vector<int> hidden = {32, 32};
    int epochs = 500;
    int batch_size = 128;
    double learning_rate = 1e-3;
    double validation_fraction = 0.2;
    std::uint64_t seed = 1;
};

struct TrainedNet {
    MlpParams params;
    NormalizationSpec input_norm;
    NormalizationSpec target_norm;
    double best_validation_mse = 0.0;  // on normalized targets
};

// Forward pass on a normalized input (values expected in [0,1]).
Eigen::VectorXd mlp_forward(const MlpParams& p, const Eigen::VectorXd& x);

// Forward pass including normalization of input and denormalization of output.
Eigen::VectorXd net_predict(const TrainedNet& net, const Eigen::VectorXd& raw_input);

// Mean squared error loss gradient via backpropagation, for testing and
// training.  Returns the loss for the batch.
double mlp_loss_and_gradients(const MlpParams& p, const Eigen::MatrixXd& x,
                              const Eigen::MatrixXd& y,
                              std::vector<Eigen::MatrixXd>* grad_w,
                              std::vector<Eigen::VectorXd>* grad_b);

// Trains with adaptive-moment gradient descent on mini-batches.  Keeps the
// parameters from the epoch with the best validation loss.  Deterministic
// for a fixed seed and options.
TrainedNet train_net(const TrainingSet& data, const TrainOptions& opts);

// Plain-text serialization (self-describing, round-trips exactly via hex
// doubles).
void save_net(const TrainedNet& net, const std::string& path);
TrainedNet load_net(const std::string& path);

}  // namespace mmloc
