#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qclearn/bigint.hpp"

namespace qclearn {

// Gate alphabet. I is only valid under the extended set S*; CX control and
// target markers always occur in matched pairs within a layer.
enum class GateKind : std::uint8_t { I, T, H, CxControl, CxTarget };

enum class GateSetId : std::uint8_t { S = 0, SStar = 1 };

struct GateSet {
    GateSetId id = GateSetId::S;

    static GateSet s() { return {GateSetId::S}; }
    static GateSet s_star() { return {GateSetId::SStar}; }

    bool has_identity() const { return id == GateSetId::SStar; }
    // One-hot width: S -> (T, H, CXc, CXt), S* -> (I, T, H, CXc, CXt).
    int channel_count() const { return id == GateSetId::S ? 4 : 5; }
    // Serialization / encoding channel for a gate kind.
    int channel_of(GateKind kind) const;
    GateKind kind_of_channel(int channel) const;

    bool operator==(const GateSet& o) const { return id == o.id; }
    bool operator!=(const GateSet& o) const { return id != o.id; }
};

struct CxPair {
    int control = -1;
    int target = -1;
};

// One layer: exactly one gate per qubit, at most one CX pair.
class Layer {
  public:
    Layer(std::vector<GateKind> gates, GateSet gate_set);

    const std::vector<GateKind>& gates() const { return gates_; }
    GateKind gate(int qubit) const { return gates_.at(qubit); }
    const std::optional<CxPair>& cx_pair() const { return cx_; }
    int n_qubits() const { return static_cast<int>(gates_.size()); }

  private:
    std::vector<GateKind> gates_;
    std::optional<CxPair> cx_;
};

class Circuit {
  public:
    Circuit(GateSet gate_set, int n_qubits, std::vector<Layer> layers);

    int n_qubits() const { return n_qubits_; }
    int depth() const { return static_cast<int>(layers_.size()); }
    GateSet gate_set() const { return gate_set_; }
    const std::vector<Layer>& layers() const { return layers_; }
    const Layer& layer(int p) const { return layers_.at(p); }

    // Canonical byte serialization: "QC", gate-set id, N (u16 LE), P (u16 LE),
    // then N*P gate codes layer-major. Codes equal the one-hot channel index.
    std::vector<std::uint8_t> serialize() const;
    static Circuit deserialize(const std::uint8_t* data, std::size_t len);
    static Circuit deserialize(const std::vector<std::uint8_t>& bytes) {
        return deserialize(bytes.data(), bytes.size());
    }

    // FNV-1a of the canonical serialization. Dedup keys pair this with a
    // full-byte comparison, so hash collisions are harmless.
    std::uint64_t hash64() const;

  private:
    GateSet gate_set_;
    int n_qubits_;
    std::vector<Layer> layers_;
};

// One-hot descriptor: N x P x C binary tensor, row-major (qubit, layer,
// channel). Channel order matches GateSet::channel_of.
struct CircuitEncoding {
    GateSet gate_set;
    int n_qubits = 0;
    int depth = 0;
    std::vector<std::uint8_t> data;

    std::uint8_t at(int qubit, int layer, int channel) const {
        return data[(static_cast<std::size_t>(qubit) * depth + layer) * gate_set.channel_count() +
                    channel];
    }
};

struct BitString {
    std::vector<std::uint8_t> bits;

    int size() const { return static_cast<int>(bits.size()); }
    int popcount() const;
    std::string to_string() const;
    static BitString from_string(const std::string& s);

    bool operator==(const BitString& o) const { return bits == o.bits; }
};

CircuitEncoding encode_one_hot(const Circuit& circuit);
Circuit decode_one_hot(const CircuitEncoding& enc);

// Number of distinct circuits with the one-CX-per-layer constraint:
//   Q = sum_m base^(N*P - 2m) * C(P,m) * 2^m * C(N,2)^m
// with base 2 for S and 3 for S*.
BigUint count_circuits(int n_qubits, int depth, GateSet gate_set);

// Distinct single-layer configurations (the counting formula equals this
// raised to the P-th power; the sampler draws layers i.i.d. from it).
unsigned __int128 count_layer_configs(int n_qubits, GateSet gate_set);

// Uniform draw over the full constrained ensemble; a pure function of
// (seed, index) via a counter-based RNG substream.
Circuit sample_random_circuit(int n_qubits, int depth, GateSet gate_set, std::uint64_t seed,
                              std::uint64_t index);

// All valid circuits, guarded to ensembles of at most 10^6 members.
std::vector<Circuit> enumerate_circuits(int n_qubits, int depth, GateSet gate_set);

Circuit swap_qubit_rows(const Circuit& c, int i, int j);
CircuitEncoding swap_qubit_rows(const CircuitEncoding& enc, int i, int j);

// Double exchange placing qubits (i, j) at rows (0, 1).
Circuit swap_qubit_pair(const Circuit& c, int i, int j);
CircuitEncoding swap_qubit_pair(const CircuitEncoding& enc, int i, int j);

// Bernstein-Vazirani circuit over gate set S for an (N-1)-bit secret; the
// last qubit is the ancilla. Depth is 6 + popcount(secret).
Circuit build_bv_circuit(int n_qubits, const BitString& secret);

}  // namespace qclearn
