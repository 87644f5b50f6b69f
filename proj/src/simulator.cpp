#include "qclearn/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "qclearn/errors.hpp"
#include "qclearn/rng.hpp"

namespace qclearn {

StateVector::StateVector(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits_ < 1) throw Error("state vector needs at least one qubit");
    amps_.assign(std::size_t{1} << n_qubits_, {0.0, 0.0});
    amps_[0] = {1.0, 0.0};
}

StateVector StateVector::from_amplitudes(std::vector<std::complex<double>> amps) {
    int n = 1;
    while ((std::size_t{1} << n) < amps.size()) ++n;
    if ((std::size_t{1} << n) != amps.size())
        throw Error("amplitude count must be a power of two, at least 2");
    StateVector s(n);
    s.amps_ = std::move(amps);
    return s;
}

double StateVector::norm_sq() const {
    double total = 0.0;
    for (const auto& a : amps_) total += std::norm(a);
    return total;
}

std::size_t StateVector::bit_mask(int qubit) const {
    if (qubit < 0 || qubit >= n_qubits_) throw IndexOutOfRange("qubit index out of range");
    return std::size_t{1} << (n_qubits_ - 1 - qubit);
}

void StateVector::apply_t(int qubit) {
    const std::size_t mask = bit_mask(qubit);
    const std::complex<double> phase{std::sqrt(0.5), std::sqrt(0.5)};  // e^{i pi/4}
    const std::size_t dim = amps_.size();
    for (std::size_t base = 0; base < dim; base += 2 * mask)
        for (std::size_t k = base; k < base + mask; ++k) amps_[k + mask] *= phase;
}

void StateVector::apply_h(int qubit) {
    const std::size_t mask = bit_mask(qubit);
    const double inv_sqrt2 = std::sqrt(0.5);
    const std::size_t dim = amps_.size();
    for (std::size_t base = 0; base < dim; base += 2 * mask)
        for (std::size_t k = base; k < base + mask; ++k) {
            const std::complex<double> a = amps_[k];
            const std::complex<double> b = amps_[k + mask];
            amps_[k] = (a + b) * inv_sqrt2;
            amps_[k + mask] = (a - b) * inv_sqrt2;
        }
}

void StateVector::apply_cx(int control, int target) {
    const std::size_t cmask = bit_mask(control);
    const std::size_t tmask = bit_mask(target);
    if (control == target) throw IndexOutOfRange("CX control equals target");
    const std::size_t dim = amps_.size();
    for (std::size_t x = 0; x < dim; ++x)
        if ((x & cmask) != 0 && (x & tmask) == 0) std::swap(amps_[x], amps_[x | tmask]);
}

void apply_gate(StateVector& state, GateKind kind, int qubit) {
    switch (kind) {
        case GateKind::I: return;
        case GateKind::T: state.apply_t(qubit); return;
        case GateKind::H: state.apply_h(qubit); return;
        default: throw Error("apply_gate: CX needs explicit control and target");
    }
}

StateVector run_circuit(const Circuit& circuit, int max_qubits) {
    if (circuit.n_qubits() > max_qubits)
        throw TooManyQubits("circuit exceeds the configured qubit limit");
    StateVector state(circuit.n_qubits());
    for (const Layer& layer : circuit.layers()) {
        for (int q = 0; q < circuit.n_qubits(); ++q) {
            const GateKind g = layer.gate(q);
            if (g == GateKind::CxControl)
                state.apply_cx(q, layer.cx_pair()->target);
            else if (g != GateKind::CxTarget)
                apply_gate(state, g, q);
        }
    }
    return state;
}

ExpectationRecord expectations(const StateVector& state,
                               std::optional<std::pair<int, int>> want_zz) {
    const int n = state.n_qubits();
    const std::size_t dim = state.size();
    std::vector<double> prob_one(n, 0.0);
    double total = 0.0;
    double zz_acc = 0.0;
    std::size_t pair_mask_i = 0;
    std::size_t pair_mask_j = 0;
    if (want_zz) {
        if (want_zz->first == want_zz->second)
            throw IndexOutOfRange("ZZ pair indices must differ");
        pair_mask_i = std::size_t{1} << (n - 1 - want_zz->first);
        pair_mask_j = std::size_t{1} << (n - 1 - want_zz->second);
        if (want_zz->first < 0 || want_zz->first >= n || want_zz->second < 0 ||
            want_zz->second >= n)
            throw IndexOutOfRange("ZZ pair index out of range");
    }
    for (std::size_t x = 0; x < dim; ++x) {
        const double p = std::norm(state.amp(x));
        if (p == 0.0) continue;
        total += p;
        std::size_t rem = x;
        while (rem != 0) {
            const int bit = std::countr_zero(rem);
            prob_one[n - 1 - bit] += p;
            rem &= rem - 1;
        }
        if (want_zz) {
            const bool bi = (x & pair_mask_i) != 0;
            const bool bj = (x & pair_mask_j) != 0;
            zz_acc += (bi == bj) ? p : -p;
        }
    }
    ExpectationRecord rec;
    rec.raw_z.resize(n);
    rec.z.resize(n);
    for (int i = 0; i < n; ++i) {
        rec.raw_z[i] = total - 2.0 * prob_one[i];
        rec.z[i] = 1.0 - (rec.raw_z[i] + 1.0) / 2.0;
    }
    if (want_zz) {
        rec.raw_zz = zz_acc;
        rec.z12 = 1.0 - (zz_acc + 1.0) / 2.0;
    }
    return rec;
}

MeasurementEstimate sample_measurements(const StateVector& state, std::int64_t n_measure,
                                        std::uint64_t seed, bool keep_shots) {
    if (n_measure < 1) throw Error("n_measure must be at least 1");
    const int n = state.n_qubits();
    const std::size_t dim = state.size();
    Rng rng = Rng::for_stream(seed, 0);

    std::vector<std::uint64_t> outcomes;
    outcomes.reserve(static_cast<std::size_t>(n_measure));

    if (n_measure > 1024) {
        std::vector<double> uniforms(static_cast<std::size_t>(n_measure));
        for (auto& u : uniforms) u = rng.next_double();
        std::sort(uniforms.begin(), uniforms.end());
        double cum = 0.0;
        std::size_t next = 0;
        for (std::size_t x = 0; x < dim && next < uniforms.size(); ++x) {
            cum += std::norm(state.amp(x));
            while (next < uniforms.size() && uniforms[next] < cum) {
                outcomes.push_back(x);
                ++next;
            }
        }
        while (next++ < uniforms.size()) outcomes.push_back(dim - 1);  // rounding spill
    } else {
        for (std::int64_t s = 0; s < n_measure; ++s) {
            const double u = rng.next_double();
            double cum = 0.0;
            std::uint64_t hit = dim - 1;
            for (std::size_t x = 0; x < dim; ++x) {
                cum += std::norm(state.amp(x));
                if (u < cum) {
                    hit = x;
                    break;
                }
            }
            outcomes.push_back(hit);
        }
    }

    MeasurementEstimate est;
    est.n_measure = n_measure;
    est.z_tilde.assign(n, 0.0);
    for (std::uint64_t x : outcomes) {
        std::uint64_t rem = x;
        while (rem != 0) {
            const int bit = std::countr_zero(rem);
            est.z_tilde[n - 1 - bit] += 1.0;
            rem &= rem - 1;
        }
    }
    for (double& v : est.z_tilde) v /= static_cast<double>(n_measure);
    if (keep_shots) est.shots = std::move(outcomes);
    return est;
}

namespace {

DenseMatrix identity_matrix(std::size_t dim) {
    DenseMatrix m;
    m.dim = dim;
    m.values.assign(dim * dim, {0.0, 0.0});
    for (std::size_t i = 0; i < dim; ++i) m.at(i, i) = {1.0, 0.0};
    return m;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c;
    c.dim = a.dim;
    c.values.assign(a.dim * a.dim, {0.0, 0.0});
    for (std::size_t i = 0; i < a.dim; ++i)
        for (std::size_t k = 0; k < a.dim; ++k) {
            const std::complex<double> aik = a.at(i, k);
            if (aik == std::complex<double>{0.0, 0.0}) continue;
            for (std::size_t j = 0; j < a.dim; ++j) c.at(i, j) += aik * b.at(k, j);
        }
    return c;
}

// I_{2^q} (x) g (x) I_{2^{N-1-q}}
DenseMatrix embed_single(int n, int qubit, const std::complex<double> g[2][2]) {
    const std::size_t dim = std::size_t{1} << n;
    const std::size_t mask = std::size_t{1} << (n - 1 - qubit);
    DenseMatrix m;
    m.dim = dim;
    m.values.assign(dim * dim, {0.0, 0.0});
    for (std::size_t col = 0; col < dim; ++col) {
        const int cb = (col & mask) ? 1 : 0;
        m.at(col & ~mask, col) += g[0][cb];
        m.at(col | mask, col) += g[1][cb];
    }
    return m;
}

DenseMatrix embed_cx(int n, int control, int target) {
    const std::size_t dim = std::size_t{1} << n;
    const std::size_t cmask = std::size_t{1} << (n - 1 - control);
    const std::size_t tmask = std::size_t{1} << (n - 1 - target);
    DenseMatrix m;
    m.dim = dim;
    m.values.assign(dim * dim, {0.0, 0.0});
    for (std::size_t col = 0; col < dim; ++col) {
        const std::size_t row = (col & cmask) ? (col ^ tmask) : col;
        m.at(row, col) = {1.0, 0.0};
    }
    return m;
}

}  // namespace

DenseMatrix dense_unitary_oracle(const Circuit& circuit) {
    if (circuit.n_qubits() > 6) throw TooManyQubits("dense oracle is limited to 6 qubits");
    const int n = circuit.n_qubits();
    const std::size_t dim = std::size_t{1} << n;
    const double s = std::sqrt(0.5);
    const std::complex<double> h_gate[2][2] = {{{s, 0}, {s, 0}}, {{s, 0}, {-s, 0}}};
    const std::complex<double> t_gate[2][2] = {{{1, 0}, {0, 0}}, {{0, 0}, {s, s}}};

    DenseMatrix total = identity_matrix(dim);
    for (const Layer& layer : circuit.layers()) {
        DenseMatrix layer_u = identity_matrix(dim);
        for (int q = 0; q < n; ++q) {
            switch (layer.gate(q)) {
                case GateKind::I: break;
                case GateKind::T: layer_u = matmul(embed_single(n, q, t_gate), layer_u); break;
                case GateKind::H: layer_u = matmul(embed_single(n, q, h_gate), layer_u); break;
                case GateKind::CxControl:
                    layer_u = matmul(embed_cx(n, q, layer.cx_pair()->target), layer_u);
                    break;
                case GateKind::CxTarget: break;
            }
        }
        total = matmul(layer_u, total);
    }
    return total;
}

}  // namespace qclearn
