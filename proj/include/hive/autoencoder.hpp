#pragma once

#include "hive/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hive {

struct AeConfig {
    std::size_t hidden_size = 16; // recurrent state width, >= 2
    std::size_t layers = 1;       // stacked cells in encoder and decoder, >= 1
    std::size_t sensors = 0;      // S: values per timestep
    std::size_t window_length = 0; // L: timesteps per window
    double learning_rate = 1e-3;
    int patience = 5;    // epochs without validation improvement before stopping
    int max_epochs = 200;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
};

struct AeEpoch {
    double training_loss;
    double validation_loss;
};

// Outcome of threshold calibration over a labeled holdout.
struct AlphaChoice {
    double alpha;
    double f1;
    bool degenerate; // losses carried no signal; alpha flags nothing
};

// Recurrent reconstruction model: a stack of gated recurrent cells reads the
// window timestep by timestep and its final hidden state becomes the code; a
// decoder stack unrolls from the code (fed as input at every step) and a
// linear readout rebuilds the window in input order. Windows are flat
// time-major [t * S + s] vectors of scaled values. Reconstruction loss is
// elementwise mean squared error; losses at or above the calibrated alpha
// flag anomalies.
class AeModel {
public:
    // Trains with the adaptive-moment optimizer (batched, shuffled each epoch
    // from the run seed), stops when validation loss fails to improve for
    // `patience` consecutive epochs, and keeps the parameters of the best
    // validation epoch. Throws std::invalid_argument on empty or misshaped
    // data and std::runtime_error when the loss turns non-finite.
    static AeModel train(const std::vector<std::vector<double>>& training,
                         const std::vector<std::vector<double>>& validation,
                         const AeConfig& config);

    std::vector<double> reconstruct(std::span<const double> window) const;
    double loss(std::span<const double> window) const;
    std::vector<double> loss_batch(const std::vector<std::vector<double>>& windows) const;

    // Mean reconstruction loss over a window set and its analytic gradient
    // with respect to parameters() (same flat layout).
    double batch_loss(const std::vector<std::vector<double>>& windows) const;
    std::vector<double> gradient(const std::vector<std::vector<double>>& windows) const;

    // Picks the loss threshold maximizing F1 of (loss >= alpha) against the
    // swarm labels, scanning the observed loss values; ties break toward the
    // larger alpha. With no loss spread the choice is degenerate: alpha sits
    // just above the common value and flags nothing. Throws
    // std::invalid_argument without at least one positive label.
    static AlphaChoice choose_alpha(std::span<const double> losses,
                                    const std::vector<bool>& positives);
    double calibrate_alpha(const std::vector<std::vector<double>>& windows,
                           const std::vector<Label>& labels);

    // Anomaly iff loss(window) >= alpha. Throws std::logic_error before
    // calibration.
    Verdict classify(std::span<const double> window) const;

    double alpha() const;
    bool calibrated() const { return calibrated_; }
    bool degenerate_alpha() const { return degenerate_; }
    void set_alpha(double alpha, bool degenerate = false);

    const std::vector<AeEpoch>& history() const { return history_; }
    std::size_t best_epoch() const { return best_epoch_; }
    const std::vector<double>& parameters() const { return params_; }
    void set_parameters(std::vector<double> params);
    const AeConfig& config() const { return config_; }

    // A model with freshly initialized (untrained) parameters from the seed.
    static AeModel create(const AeConfig& config);
    static AeModel restore(const AeConfig& config, std::vector<double> params);

private:
    AeConfig config_;
    std::vector<double> params_;
    std::vector<AeEpoch> history_;
    std::size_t best_epoch_ = 0;
    double alpha_ = 0.0;
    bool calibrated_ = false;
    bool degenerate_ = false;
};

} // namespace hive
