#include "qclearn/dataset.hpp"

#include <algorithm>
#include <unordered_set>

#include "json.hpp"
#include "qclearn/io_util.hpp"
#include "qclearn/rng.hpp"
#include "qclearn/simulator.hpp"
#include "qclearn/threading.hpp"

namespace qclearn {

using nlohmann::json;

namespace {
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kMeasureSalt = 0x6d65617375726531ull;  // "measure1"

struct ByteVecHash {
    std::size_t operator()(const std::vector<std::uint8_t>& v) const {
        return fnv1a64(v.data(), v.size());
    }
};
}  // namespace

std::string label_kind_name(LabelKind kind) {
    switch (kind) {
        case LabelKind::ExactZ: return "exact-z";
        case LabelKind::NoisyZ: return "noisy-z";
        case LabelKind::ExactZ12: return "exact-z12";
    }
    throw Error("unknown label kind");
}

LabelKind label_kind_from_name(const std::string& name) {
    if (name == "exact-z") return LabelKind::ExactZ;
    if (name == "noisy-z") return LabelKind::NoisyZ;
    if (name == "exact-z12") return LabelKind::ExactZ12;
    throw Error("unknown label kind: " + name);
}

std::uint64_t noisy_measure_seed(std::uint64_t seed, std::uint64_t index) {
    return Rng::for_stream(seed ^ kMeasureSalt, index).next_u64();
}

std::vector<std::uint8_t> Dataset::packed_encodings() const {
    const std::size_t stride = static_cast<std::size_t>(header.n_qubits) * header.depth *
                               header.gate_set.channel_count();
    std::vector<std::uint8_t> out(stride * circuits.size());
    parallel_chunks(static_cast<std::int64_t>(circuits.size()),
                    [&](std::int64_t b, std::int64_t e) {
                        for (std::int64_t i = b; i < e; ++i) {
                            const CircuitEncoding enc = encode_one_hot(circuit(i));
                            std::copy(enc.data.begin(), enc.data.end(),
                                      out.begin() + i * stride);
                        }
                    });
    return out;
}

void Dataset::save(const std::string& path) const {
    ByteWriter w;
    w.str("QCML");
    w.u32(kVersion);
    json h;
    h["gate_set"] = header.gate_set.id == GateSetId::S ? "s" : "s-star";
    h["n_qubits"] = header.n_qubits;
    h["depth"] = header.depth;
    h["label_kind"] = label_kind_name(header.label_kind);
    h["n_measure"] = header.n_measure;
    h["seed"] = header.seed;
    h["count"] = header.count;
    const std::string hs = h.dump();
    w.u32(static_cast<std::uint32_t>(hs.size()));
    w.str(hs);
    const int arity = label_arity();
    for (std::size_t i = 0; i < circuits.size(); ++i) {
        w.raw(circuits[i].data(), circuits[i].size());
        w.u8(static_cast<std::uint8_t>(arity));
        for (int k = 0; k < arity; ++k) w.f64(labels[i * arity + k]);
    }
    w.u32(crc32(w.bytes().data(), w.bytes().size()));
    write_file(path, w.bytes());
}

Dataset Dataset::load(const std::string& path) {
    const auto bytes = read_file(path);
    if (bytes.size() < 12) throw IoError("dataset file is too short: " + path);
    {
        ByteReader tail(bytes.data() + bytes.size() - 4, 4);
        if (tail.u32() != crc32(bytes.data(), bytes.size() - 4))
            throw IoError("dataset CRC mismatch: " + path);
    }
    ByteReader r(bytes.data(), bytes.size() - 4);
    if (r.str(4) != "QCML") throw IoError("bad dataset magic: " + path);
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw VersionMismatch("unsupported dataset version " + std::to_string(version));

    Dataset ds;
    try {
        const std::uint32_t len = r.u32();
        json h = json::parse(r.str(len));
        ds.header.gate_set =
            h.at("gate_set").get<std::string>() == "s" ? GateSet::s() : GateSet::s_star();
        ds.header.n_qubits = h.at("n_qubits").get<int>();
        ds.header.depth = h.at("depth").get<int>();
        ds.header.label_kind = label_kind_from_name(h.at("label_kind").get<std::string>());
        ds.header.n_measure = h.at("n_measure").get<std::int64_t>();
        ds.header.seed = h.at("seed").get<std::uint64_t>();
        ds.header.count = h.at("count").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw IoError(std::string("bad dataset header: ") + e.what());
    }

    const std::size_t circuit_len =
        7 + static_cast<std::size_t>(ds.header.n_qubits) * ds.header.depth;
    ds.circuits.reserve(ds.header.count);
    ds.labels.reserve(ds.header.count * ds.label_arity());
    for (std::uint64_t i = 0; i < ds.header.count; ++i) {
        std::vector<std::uint8_t> cbytes(circuit_len);
        r.raw(cbytes.data(), circuit_len);
        ds.circuits.push_back(std::move(cbytes));
        const int arity = r.u8();
        if (arity != ds.label_arity()) throw IoError("record label arity mismatch");
        for (int k = 0; k < arity; ++k) {
            const double v = r.f64();
            ds.labels.push_back(v);
        }
    }
    if (r.remaining() != 0) throw IoError("trailing bytes in dataset file");
    return ds;
}

void Dataset::export_jsonl(const std::string& path) const {
    std::string out;
    const int arity = label_arity();
    for (std::size_t i = 0; i < circuits.size(); ++i) {
        const Circuit c = circuit(i);
        json rec;
        rec["index"] = i;
        rec["gate_set"] = header.gate_set.id == GateSetId::S ? "s" : "s-star";
        rec["n_qubits"] = c.n_qubits();
        rec["depth"] = c.depth();
        json layers = json::array();
        for (const Layer& layer : c.layers()) {
            json codes = json::array();
            for (GateKind g : layer.gates()) codes.push_back(header.gate_set.channel_of(g));
            layers.push_back(codes);
        }
        rec["codes"] = layers;
        json lab = json::array();
        for (int k = 0; k < arity; ++k) lab.push_back(labels[i * arity + k]);
        rec["labels"] = lab;
        out += rec.dump();
        out += '\n';
    }
    write_file(path, std::vector<std::uint8_t>(out.begin(), out.end()));
}

namespace {

std::vector<double> label_circuit(const Circuit& c, LabelKind kind, std::int64_t n_measure,
                                  std::uint64_t measure_seed) {
    const StateVector state = run_circuit(c);
    std::vector<double> labels;
    switch (kind) {
        case LabelKind::ExactZ: labels = expectations(state).z; break;
        case LabelKind::ExactZ12: {
            if (c.n_qubits() < 2) throw ShapeMismatch("z12 labels need at least two qubits");
            labels = {*expectations(state, std::make_pair(0, 1)).z12};
            break;
        }
        case LabelKind::NoisyZ:
            labels = sample_measurements(state, n_measure, measure_seed).z_tilde;
            break;
        default: throw Error("unknown label kind");
    }
    // Rounding in the amplitude sums can push values a few ulp outside [0, 1].
    for (double& v : labels) v = std::clamp(v, 0.0, 1.0);
    return labels;
}

}  // namespace

Dataset generate_dataset(int n_qubits, int depth, GateSet gate_set, std::uint64_t count,
                         LabelKind label_kind, std::int64_t n_measure, std::uint64_t seed) {
    if (count == 0) throw EmptyDataset("cannot generate an empty dataset");
    if (label_kind == LabelKind::NoisyZ && n_measure < 1)
        throw Error("noisy labels need n_measure >= 1");
    if (!(BigUint(count) <= count_circuits(n_qubits, depth, gate_set)))
        throw EnsembleExhausted("requested more circuits than the ensemble contains");

    Dataset ds;
    ds.header.gate_set = gate_set;
    ds.header.n_qubits = n_qubits;
    ds.header.depth = depth;
    ds.header.label_kind = label_kind;
    ds.header.n_measure = label_kind == LabelKind::NoisyZ ? n_measure : 0;
    ds.header.seed = seed;
    ds.header.count = count;

    // Distinct circuits first: sample in index order, skipping replicas
    // (hash set keyed by the full canonical bytes).
    std::unordered_set<std::vector<std::uint8_t>, ByteVecHash> seen;
    seen.reserve(count * 2);
    ds.circuits.reserve(count);
    const std::uint64_t batch = 4096;
    std::vector<std::vector<std::uint8_t>> scratch(batch);
    for (std::uint64_t index = 0; ds.circuits.size() < count;) {
        const std::uint64_t n = batch;
        parallel_chunks(static_cast<std::int64_t>(n), [&](std::int64_t b, std::int64_t e) {
            for (std::int64_t i = b; i < e; ++i)
                scratch[i] =
                    sample_random_circuit(n_qubits, depth, gate_set, seed, index + i)
                        .serialize();
        });
        for (std::uint64_t i = 0; i < n && ds.circuits.size() < count; ++i) {
            if (seen.insert(scratch[i]).second) ds.circuits.push_back(std::move(scratch[i]));
        }
        index += n;
    }

    ds.labels.assign(count * ds.label_arity(), 0.0);
    const int arity = ds.label_arity();
    parallel_chunks(static_cast<std::int64_t>(count), [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t i = b; i < e; ++i) {
            const auto row = label_circuit(Circuit::deserialize(ds.circuits[i]), label_kind,
                                           n_measure, noisy_measure_seed(seed, i));
            std::copy(row.begin(), row.end(), ds.labels.begin() + i * arity);
        }
    });
    return ds;
}

Dataset make_noisy_dataset(const Dataset& exact, std::int64_t n_measure, std::uint64_t seed) {
    if (exact.header.label_kind == LabelKind::ExactZ12)
        throw ShapeMismatch("noisy relabeling needs per-qubit labels");
    if (n_measure < 1) throw Error("n_measure must be at least 1");
    Dataset out;
    out.header = exact.header;
    out.header.label_kind = LabelKind::NoisyZ;
    out.header.n_measure = n_measure;
    out.header.seed = seed;
    out.circuits = exact.circuits;
    out.labels.assign(exact.size() * out.label_arity(), 0.0);
    const int arity = out.label_arity();
    parallel_chunks(static_cast<std::int64_t>(exact.size()),
                    [&](std::int64_t b, std::int64_t e) {
                        for (std::int64_t i = b; i < e; ++i) {
                            const auto row =
                                label_circuit(out.circuit(i), LabelKind::NoisyZ, n_measure,
                                              noisy_measure_seed(seed, i));
                            std::copy(row.begin(), row.end(), out.labels.begin() + i * arity);
                        }
                    });
    return out;
}

std::size_t disjoint_split(const Dataset& train, Dataset& test, bool repair) {
    if (train.header.gate_set != test.header.gate_set ||
        train.header.n_qubits != test.header.n_qubits ||
        train.header.depth != test.header.depth)
        throw ShapeMismatch("train/test header geometry differs");
    std::unordered_set<std::vector<std::uint8_t>, ByteVecHash> train_set(train.circuits.begin(),
                                                                         train.circuits.end());
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < test.size(); ++i)
        if (train_set.find(test.circuits[i]) == train_set.end()) keep.push_back(i);
    const std::size_t removed = test.size() - keep.size();
    if (removed == 0) return 0;
    if (!repair)
        throw OverlapDetected(std::to_string(removed) + " test circuits collide with train set");
    std::vector<std::vector<std::uint8_t>> circuits;
    std::vector<double> labels;
    const int arity = test.label_arity();
    circuits.reserve(keep.size());
    labels.reserve(keep.size() * arity);
    for (std::size_t i : keep) {
        circuits.push_back(std::move(test.circuits[i]));
        for (int k = 0; k < arity; ++k) labels.push_back(test.labels[i * arity + k]);
    }
    test.circuits = std::move(circuits);
    test.labels = std::move(labels);
    test.header.count = test.circuits.size();
    return removed;
}

}  // namespace qclearn
