#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "qclearn/circuit.hpp"

namespace qclearn {

// Basis-state convention: index x = sum_i x_i * 2^(N-1-i), i.e. qubit 0 is
// the most significant bit. Row 0 of the one-hot encoding is the paper's
// qubit 1.
class StateVector {
  public:
    explicit StateVector(int n_qubits);  // |0...0>
    static StateVector from_amplitudes(std::vector<std::complex<double>> amps);

    int n_qubits() const { return n_qubits_; }
    std::size_t size() const { return amps_.size(); }
    std::complex<double> amp(std::size_t x) const { return amps_[x]; }
    const std::vector<std::complex<double>>& amplitudes() const { return amps_; }
    double norm_sq() const;

    void apply_t(int qubit);
    void apply_h(int qubit);
    void apply_cx(int control, int target);

  private:
    int n_qubits_;
    std::vector<std::complex<double>> amps_;

    std::size_t bit_mask(int qubit) const;
};

// Single-gate dispatch; I is a no-op, CX needs apply_cx.
void apply_gate(StateVector& state, GateKind kind, int qubit);

StateVector run_circuit(const Circuit& circuit, int max_qubits = 24);

struct ExpectationRecord {
    std::vector<double> raw_z;      // <Z_i> in [-1, 1]
    std::vector<double> z;          // rescaled, z_i = 1 - (<Z_i> + 1) / 2
    std::optional<double> raw_zz;   // <Z_i Z_j> for the requested pair
    std::optional<double> z12;      // rescaled two-qubit value
};

ExpectationRecord expectations(const StateVector& state,
                               std::optional<std::pair<int, int>> want_zz = std::nullopt);

struct MeasurementEstimate {
    std::int64_t n_measure = 0;
    std::vector<double> z_tilde;        // per qubit, on the grid {k / n_measure}
    std::vector<std::uint64_t> shots;   // retained outcomes when requested
};

// n_measure i.i.d. computational-basis samples from |psi|^2. Cumulative
// inversion: one pass with sorted uniforms above 1024 shots, per-draw search
// below. Deterministic given the seed.
MeasurementEstimate sample_measurements(const StateVector& state, std::int64_t n_measure,
                                        std::uint64_t seed, bool keep_shots = false);

// Brute-force test oracle: the full 2^N x 2^N unitary of the circuit, built
// from explicit Kronecker embeddings and dense matrix products.
struct DenseMatrix {
    std::size_t dim = 0;
    std::vector<std::complex<double>> values;  // row-major

    std::complex<double>& at(std::size_t r, std::size_t c) { return values[r * dim + c]; }
    const std::complex<double>& at(std::size_t r, std::size_t c) const {
        return values[r * dim + c];
    }
};

DenseMatrix dense_unitary_oracle(const Circuit& circuit);  // N <= 6

}  // namespace qclearn
