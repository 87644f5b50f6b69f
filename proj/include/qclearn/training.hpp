#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qclearn/adam.hpp"
#include "qclearn/dataset.hpp"
#include "qclearn/model.hpp"

namespace qclearn {

struct TrainConfig {
    int batch_size = 256;          // the supported range is [128, 512]
    bool allow_any_batch = false;  // explicit override of the range check
    int max_epochs = 100;
    double val_fraction = 0.05;    // validation split, taken from the tail
    int patience = 10;             // early stop after this many evals without improvement
    bool lr_halving = true;        // halve learning rate on validation plateau
    int plateau_patience = 5;
    std::uint64_t seed = 1;
    AdamHyper adam;
    int label_index = -1;          // single-output target column; -1 means 0
    int log_every = 0;             // print losses every k epochs; 0 = silent
};

struct TrainResult {
    Model model;  // best-validation weights (final weights when no validation)
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    int best_epoch = -1;
    std::int64_t steps = 0;
    std::uint64_t loss_digest = 0;
};

// Minimizes BCE with Adam over seeded shuffled mini-batches. The model
// argument carries the initialization: freshly constructed for cold starts,
// loaded from a checkpoint for transfer learning.
TrainResult train(Model model, const Dataset& data, const TrainConfig& config);

struct EvalOptions {
    int qubit = -1;                             // single-output: swap rows (0, qubit)
    std::optional<std::pair<int, int>> pair;    // z12 models: swap (0,1) <-> (i,j)
    int label_index = -1;                       // -1: qubit column (or 0)
    int batch_size = 512;
    bool collect_scatter = false;
    int histogram_bins = 0;                     // >0: histogram of targets over [0,1]
};

struct OutputStats {
    double mean_abs_residual = 0.0;
    double max_abs_residual = 0.0;
    double rmse = 0.0;
};

struct EvalReport {
    double r2 = 0.0;
    std::size_t n_test = 0;
    int n_outputs = 0;
    std::vector<OutputStats> per_output;
    std::vector<std::pair<double, double>> scatter;  // (target, prediction)
    std::vector<std::int64_t> histogram;
};

// Coefficient of determination pooled over outputs and test samples,
// with the mean taken over the test-set targets.
double r2_score(const std::vector<double>& predictions, const std::vector<double>& targets);

EvalReport evaluate_r2(const Model& model, const Dataset& test, const EvalOptions& options = {});

// Single-output extrapolation sweep; returns (n_qubits, r2) per dataset.
std::vector<std::pair<int, double>> extrapolate_eval(const Model& model,
                                                     const std::vector<const Dataset*>& tests,
                                                     const EvalOptions& options = {});

}  // namespace qclearn
