#pragma once

#include <functional>
#include <vector>

#include "qclearn/circuit.hpp"

namespace qclearn {

// Recovered support of a two-outcome output distribution.
struct TwoOutcomeResult {
    BitString a;
    BitString b;
    double p_a = 1.0;

    double p_b() const { return 1.0 - p_a; }
};

using ZzProvider = std::function<double(int, int)>;

struct ReconstructOptions {
    double tol = 1e-6;
    // For noisy (CNN-predicted) inputs: snap each <Z_i> to the nearest
    // admissible value {+1, -1, +d, -d}, where d is the input of smallest
    // magnitude, before dispatching.
    bool snap = false;
};

// Recovers the two bit strings a, b (and p_a) from single-qubit expectations
// <Z_i>, querying <Z_i Z_j> only when p_a = p_b = 1/2. Qubits are analyzed
// in index order; the first qubit with an interior expectation gets a_i = 1.
// Throws InconsistentInput when a value matches no admissible branch.
TwoOutcomeResult reconstruct(const std::vector<double>& z_raw, const ZzProvider& zz_provider,
                             const ReconstructOptions& options = {});

// Forward oracle: <Z_i> = p_a (1 - 2 a_i) + (1 - p_a)(1 - 2 b_i).
std::vector<double> forward_expectations(const BitString& a, const BitString& b, double p_a);
double forward_zz(const BitString& a, const BitString& b, double p_a, int i, int j);

// Secret decoder for Bernstein-Vazirani predictions: w_i = 1 iff the
// rescaled z prediction for data qubit i exceeds the threshold.
BitString decode_bv(const std::vector<double>& z_pred, double threshold = 0.5);

}  // namespace qclearn
