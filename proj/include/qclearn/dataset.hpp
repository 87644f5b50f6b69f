#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qclearn/circuit.hpp"
#include "qclearn/tensor.hpp"

namespace qclearn {

enum class LabelKind : std::uint8_t { ExactZ, NoisyZ, ExactZ12 };

std::string label_kind_name(LabelKind kind);
LabelKind label_kind_from_name(const std::string& name);

struct DatasetHeader {
    GateSet gate_set;
    int n_qubits = 0;
    int depth = 0;
    LabelKind label_kind = LabelKind::ExactZ;
    std::int64_t n_measure = 0;  // 0 for exact labels
    std::uint64_t seed = 0;
    std::uint64_t count = 0;
};

// Labeled circuit collection. Circuits are stored in canonical serialized
// form; labels are rescaled expectation values in [0, 1], label_arity()
// per record. File format "QCML": u32 version, length-prefixed JSON header,
// records (circuit bytes + u8 label count + f64 labels), trailing CRC-32.
struct Dataset {
    DatasetHeader header;
    std::vector<std::vector<std::uint8_t>> circuits;
    std::vector<double> labels;  // row-major, count x label_arity

    int label_arity() const {
        return header.label_kind == LabelKind::ExactZ12 ? 1 : header.n_qubits;
    }
    std::size_t size() const { return circuits.size(); }
    const double* label_row(std::size_t i) const { return labels.data() + i * label_arity(); }

    Circuit circuit(std::size_t i) const { return Circuit::deserialize(circuits[i]); }

    // One-hot encodings of all circuits, packed count x (N*P*C) bytes.
    std::vector<std::uint8_t> packed_encodings() const;

    void save(const std::string& path) const;
    static Dataset load(const std::string& path);
    void export_jsonl(const std::string& path) const;
};

// Samples `count` distinct circuits (duplicates are skipped and replaced by
// later sample indices) and labels them with the exact simulator, or with
// finite-measurement estimates for NoisyZ. Deterministic in all arguments.
Dataset generate_dataset(int n_qubits, int depth, GateSet gate_set, std::uint64_t count,
                         LabelKind label_kind, std::int64_t n_measure, std::uint64_t seed);

// Measurement-noise relabeling of an exact-z dataset.
Dataset make_noisy_dataset(const Dataset& exact, std::int64_t n_measure, std::uint64_t seed);

// Measurement seed for record `index` of a dataset generated/relabeled with
// `seed`; exposed so stored noisy labels can be recomputed exactly.
std::uint64_t noisy_measure_seed(std::uint64_t seed, std::uint64_t index);

// Verifies train/test hash disjointness. In repair mode colliding test
// records are dropped and the number removed is returned; otherwise any
// overlap throws OverlapDetected.
std::size_t disjoint_split(const Dataset& train, Dataset& test, bool repair);

}  // namespace qclearn
