#include "qclearn/circuit.hpp"

#include <algorithm>

#include "qclearn/errors.hpp"
#include "qclearn/io_util.hpp"
#include "qclearn/rng.hpp"

namespace qclearn {

int GateSet::channel_of(GateKind kind) const {
    if (id == GateSetId::S) {
        switch (kind) {
            case GateKind::T: return 0;
            case GateKind::H: return 1;
            case GateKind::CxControl: return 2;
            case GateKind::CxTarget: return 3;
            case GateKind::I: break;
        }
        throw MalformedEncoding("gate I is not a member of set S");
    }
    switch (kind) {
        case GateKind::I: return 0;
        case GateKind::T: return 1;
        case GateKind::H: return 2;
        case GateKind::CxControl: return 3;
        case GateKind::CxTarget: return 4;
    }
    throw MalformedEncoding("unknown gate kind");
}

GateKind GateSet::kind_of_channel(int channel) const {
    static constexpr GateKind kS[] = {GateKind::T, GateKind::H, GateKind::CxControl,
                                      GateKind::CxTarget};
    static constexpr GateKind kSStar[] = {GateKind::I, GateKind::T, GateKind::H,
                                          GateKind::CxControl, GateKind::CxTarget};
    if (channel < 0 || channel >= channel_count())
        throw MalformedEncoding("channel index out of range");
    return id == GateSetId::S ? kS[channel] : kSStar[channel];
}

Layer::Layer(std::vector<GateKind> gates, GateSet gate_set) : gates_(std::move(gates)) {
    if (gates_.empty()) throw MalformedEncoding("layer must cover at least one qubit");
    int control = -1;
    int target = -1;
    for (int q = 0; q < static_cast<int>(gates_.size()); ++q) {
        switch (gates_[q]) {
            case GateKind::I:
                if (!gate_set.has_identity())
                    throw MalformedEncoding("gate I requires gate set S*");
                break;
            case GateKind::CxControl:
                if (control >= 0) throw MalformedEncoding("more than one CX control in layer");
                control = q;
                break;
            case GateKind::CxTarget:
                if (target >= 0) throw MalformedEncoding("more than one CX target in layer");
                target = q;
                break;
            default: break;
        }
    }
    if ((control >= 0) != (target >= 0))
        throw MalformedEncoding("unpaired CX control/target in layer");
    if (control >= 0) cx_ = CxPair{control, target};
}

Circuit::Circuit(GateSet gate_set, int n_qubits, std::vector<Layer> layers)
    : gate_set_(gate_set), n_qubits_(n_qubits), layers_(std::move(layers)) {
    if (n_qubits_ < 1) throw MalformedEncoding("circuit needs at least one qubit");
    if (layers_.empty()) throw MalformedEncoding("circuit needs at least one layer");
    for (const Layer& layer : layers_) {
        if (layer.n_qubits() != n_qubits_)
            throw MalformedEncoding("layer width does not match qubit count");
        for (GateKind g : layer.gates()) gate_set_.channel_of(g);  // validates membership
    }
}

std::vector<std::uint8_t> Circuit::serialize() const {
    ByteWriter w;
    w.u8('Q');
    w.u8('C');
    w.u8(static_cast<std::uint8_t>(gate_set_.id));
    w.u16(static_cast<std::uint16_t>(n_qubits_));
    w.u16(static_cast<std::uint16_t>(depth()));
    for (const Layer& layer : layers_)
        for (GateKind g : layer.gates()) w.u8(static_cast<std::uint8_t>(gate_set_.channel_of(g)));
    return w.take();
}

Circuit Circuit::deserialize(const std::uint8_t* data, std::size_t len) {
    ByteReader r(data, len);
    if (r.u8() != 'Q' || r.u8() != 'C') throw MalformedEncoding("bad circuit magic");
    const auto id = r.u8();
    if (id > 1) throw MalformedEncoding("unknown gate set id");
    GateSet gs{static_cast<GateSetId>(id)};
    const int n = r.u16();
    const int p = r.u16();
    if (n < 1 || p < 1) throw MalformedEncoding("degenerate circuit dimensions");
    std::vector<Layer> layers;
    layers.reserve(p);
    for (int l = 0; l < p; ++l) {
        std::vector<GateKind> gates(n);
        for (int q = 0; q < n; ++q) gates[q] = gs.kind_of_channel(r.u8());
        layers.emplace_back(std::move(gates), gs);
    }
    return Circuit(gs, n, std::move(layers));
}

std::uint64_t Circuit::hash64() const {
    const auto bytes = serialize();
    return fnv1a64(bytes.data(), bytes.size());
}

int BitString::popcount() const {
    int n = 0;
    for (auto b : bits) n += b != 0;
    return n;
}

std::string BitString::to_string() const {
    std::string s;
    s.reserve(bits.size());
    for (auto b : bits) s.push_back(b ? '1' : '0');
    return s;
}

BitString BitString::from_string(const std::string& s) {
    BitString out;
    out.bits.reserve(s.size());
    for (char c : s) {
        if (c != '0' && c != '1') throw InvalidSecret("bit strings may contain only 0 and 1");
        out.bits.push_back(c == '1' ? 1 : 0);
    }
    return out;
}

CircuitEncoding encode_one_hot(const Circuit& circuit) {
    CircuitEncoding enc;
    enc.gate_set = circuit.gate_set();
    enc.n_qubits = circuit.n_qubits();
    enc.depth = circuit.depth();
    const int c = enc.gate_set.channel_count();
    enc.data.assign(static_cast<std::size_t>(enc.n_qubits) * enc.depth * c, 0);
    for (int q = 0; q < enc.n_qubits; ++q)
        for (int l = 0; l < enc.depth; ++l) {
            const int channel = enc.gate_set.channel_of(circuit.layer(l).gate(q));
            enc.data[(static_cast<std::size_t>(q) * enc.depth + l) * c + channel] = 1;
        }
    return enc;
}

Circuit decode_one_hot(const CircuitEncoding& enc) {
    const int c = enc.gate_set.channel_count();
    if (enc.n_qubits < 1 || enc.depth < 1 ||
        enc.data.size() != static_cast<std::size_t>(enc.n_qubits) * enc.depth * c)
        throw MalformedEncoding("encoding shape does not match declared dimensions");
    std::vector<Layer> layers;
    layers.reserve(enc.depth);
    for (int l = 0; l < enc.depth; ++l) {
        std::vector<GateKind> gates(enc.n_qubits);
        for (int q = 0; q < enc.n_qubits; ++q) {
            int hot = -1;
            for (int ch = 0; ch < c; ++ch) {
                if (enc.at(q, l, ch) == 0) continue;
                if (enc.at(q, l, ch) != 1 || hot >= 0)
                    throw MalformedEncoding("fiber is not one-hot");
                hot = ch;
            }
            if (hot < 0) throw MalformedEncoding("fiber is not one-hot");
            gates[q] = enc.gate_set.kind_of_channel(hot);
        }
        layers.emplace_back(std::move(gates), enc.gate_set);  // validates CX pairing
    }
    return Circuit(enc.gate_set, enc.n_qubits, std::move(layers));
}

BigUint count_circuits(int n_qubits, int depth, GateSet gate_set) {
    if (n_qubits < 1 || depth < 1) throw Error("count_circuits requires N >= 1 and P >= 1");
    const std::uint64_t base = gate_set.has_identity() ? 3 : 2;
    const std::uint64_t pairs_c2 =
        static_cast<std::uint64_t>(n_qubits) * (n_qubits - 1) / 2;  // C(N,2)

    // Pascal row for C(P, m); BigUint because P is unbounded in principle.
    std::vector<BigUint> binom(depth + 1);
    binom[0] = BigUint(1);
    for (int p = 1; p <= depth; ++p)
        for (int m = p; m >= 1; --m) binom[m] = binom[m] + binom[m - 1];

    BigUint total(0);
    const BigUint big_base(base);
    for (int m = 0; m <= depth; ++m) {
        if (m > 0 && pairs_c2 == 0) break;
        BigUint term = big_base.pow(static_cast<std::uint32_t>(n_qubits) * depth - 2 * m);
        term *= binom[m];
        term *= BigUint(2).pow(m);
        term *= BigUint(pairs_c2).pow(m);
        total += term;
    }
    return total;
}

namespace {

unsigned __int128 pow_u128(unsigned __int128 base, int exp) {
    unsigned __int128 r = 1;
    while (exp-- > 0) r *= base;
    return r;
}

// Decodes a layer-configuration index in [0, count_layer_configs) into per
// qubit gate kinds. The first base^N indices are the CX-free assignments;
// the rest split into (ordered control/target pair) x (assignment of the
// remaining N-2 qubits).
std::vector<GateKind> layer_from_config(unsigned __int128 u, int n, GateSet gate_set) {
    const unsigned base = gate_set.has_identity() ? 3 : 2;
    const GateKind single[3] = {gate_set.has_identity() ? GateKind::I : GateKind::T,
                                gate_set.has_identity() ? GateKind::T : GateKind::H, GateKind::H};
    std::vector<GateKind> gates(n);
    const unsigned __int128 free_configs = pow_u128(base, n);
    if (u < free_configs) {
        for (int q = n - 1; q >= 0; --q) {
            gates[q] = single[static_cast<unsigned>(u % base)];
            u /= base;
        }
        return gates;
    }
    unsigned __int128 v = u - free_configs;
    const unsigned __int128 rest_configs = pow_u128(base, n - 2);
    const auto pair_idx = static_cast<std::uint64_t>(v / rest_configs);
    unsigned __int128 r = v % rest_configs;
    const int control = static_cast<int>(pair_idx / (n - 1));
    const int t = static_cast<int>(pair_idx % (n - 1));
    const int target = t + (t >= control ? 1 : 0);
    std::vector<int> rest;
    rest.reserve(n - 2);
    for (int q = 0; q < n; ++q)
        if (q != control && q != target) rest.push_back(q);
    for (int k = n - 3; k >= 0; --k) {
        gates[rest[k]] = single[static_cast<unsigned>(r % base)];
        r /= base;
    }
    gates[control] = GateKind::CxControl;
    gates[target] = GateKind::CxTarget;
    return gates;
}

}  // namespace

unsigned __int128 count_layer_configs(int n_qubits, GateSet gate_set) {
    if (n_qubits < 1) throw Error("count_layer_configs requires N >= 1");
    if (n_qubits > 64) throw TooManyQubits("layer indexing supports at most 64 qubits");
    const unsigned base = gate_set.has_identity() ? 3 : 2;
    unsigned __int128 total = pow_u128(base, n_qubits);
    if (n_qubits >= 2) {
        total += static_cast<unsigned __int128>(n_qubits) * (n_qubits - 1) *
                 pow_u128(base, n_qubits - 2);
    }
    return total;
}

Circuit sample_random_circuit(int n_qubits, int depth, GateSet gate_set, std::uint64_t seed,
                              std::uint64_t index) {
    const unsigned __int128 configs = count_layer_configs(n_qubits, gate_set);
    Rng rng = Rng::for_stream(seed, index);
    std::vector<Layer> layers;
    layers.reserve(depth);
    for (int l = 0; l < depth; ++l)
        layers.emplace_back(layer_from_config(rng.next_below_u128(configs), n_qubits, gate_set),
                            gate_set);
    return Circuit(gate_set, n_qubits, std::move(layers));
}

std::vector<Circuit> enumerate_circuits(int n_qubits, int depth, GateSet gate_set) {
    const BigUint total = count_circuits(n_qubits, depth, gate_set);
    if (!(total <= BigUint(1000000)))
        throw EnsembleTooLarge("ensemble exceeds 10^6 circuits: " + total.to_string());
    const auto configs = static_cast<std::uint64_t>(count_layer_configs(n_qubits, gate_set));
    std::vector<Circuit> out;
    out.reserve(static_cast<std::size_t>(total.to_u64()));
    std::vector<std::uint64_t> odometer(depth, 0);
    for (;;) {
        std::vector<Layer> layers;
        layers.reserve(depth);
        for (int l = 0; l < depth; ++l)
            layers.emplace_back(layer_from_config(odometer[l], n_qubits, gate_set), gate_set);
        out.emplace_back(gate_set, n_qubits, std::move(layers));
        int pos = depth - 1;
        while (pos >= 0 && ++odometer[pos] == configs) odometer[pos--] = 0;
        if (pos < 0) break;
    }
    return out;
}

namespace {

void check_row(int q, int n) {
    if (q < 0 || q >= n) throw IndexOutOfRange("qubit row out of range");
}

}  // namespace

Circuit swap_qubit_rows(const Circuit& c, int i, int j) {
    check_row(i, c.n_qubits());
    check_row(j, c.n_qubits());
    std::vector<Layer> layers;
    layers.reserve(c.depth());
    for (const Layer& layer : c.layers()) {
        std::vector<GateKind> gates = layer.gates();
        std::swap(gates[i], gates[j]);
        layers.emplace_back(std::move(gates), c.gate_set());
    }
    return Circuit(c.gate_set(), c.n_qubits(), std::move(layers));
}

CircuitEncoding swap_qubit_rows(const CircuitEncoding& enc, int i, int j) {
    check_row(i, enc.n_qubits);
    check_row(j, enc.n_qubits);
    CircuitEncoding out = enc;
    const std::size_t row = static_cast<std::size_t>(enc.depth) * enc.gate_set.channel_count();
    std::swap_ranges(out.data.begin() + i * row, out.data.begin() + (i + 1) * row,
                     out.data.begin() + j * row);
    return out;
}

Circuit swap_qubit_pair(const Circuit& c, int i, int j) {
    if (i == j) throw DegeneratePair("qubit pair indices must differ");
    check_row(i, c.n_qubits());
    check_row(j, c.n_qubits());
    Circuit first = swap_qubit_rows(c, 0, i);
    return swap_qubit_rows(first, 1, j == 0 ? i : j);
}

CircuitEncoding swap_qubit_pair(const CircuitEncoding& enc, int i, int j) {
    if (i == j) throw DegeneratePair("qubit pair indices must differ");
    check_row(i, enc.n_qubits);
    check_row(j, enc.n_qubits);
    CircuitEncoding first = swap_qubit_rows(enc, 0, i);
    return swap_qubit_rows(first, 1, j == 0 ? i : j);
}

Circuit build_bv_circuit(int n_qubits, const BitString& secret) {
    if (n_qubits < 2) throw InvalidSecret("BV circuits need at least two qubits");
    if (secret.size() != n_qubits - 1)
        throw InvalidSecret("secret length must be N-1");
    for (auto b : secret.bits)
        if (b > 1) throw InvalidSecret("secret bits must be 0 or 1");

    std::vector<int> set_bits;
    for (int q = 0; q < secret.size(); ++q)
        if (secret.bits[q]) set_bits.push_back(q);
    const int k = static_cast<int>(set_bits.size());
    const int depth = 6 + k;
    const int ancilla = n_qubits - 1;
    const GateSet gs = GateSet::s();

    // Ancilla: H then T^4 prepares |->; it then sits as the CX target of the
    // contiguous kickback layers and takes the dangling T in the last layer.
    // The alpha-th set data qubit enters |+> with an H just before its CX
    // layer, picks up the kickback phase as the control, and an H one layer
    // later lands it in |1>; T everywhere else leaves |0>/|1> fixed.
    std::vector<Layer> layers;
    layers.reserve(depth);
    for (int l = 1; l <= depth; ++l) {
        std::vector<GateKind> gates(n_qubits, GateKind::T);
        if (l == 1) gates[ancilla] = GateKind::H;
        if (l >= 6 && l <= 5 + k) gates[ancilla] = GateKind::CxTarget;
        for (int alpha = 1; alpha <= k; ++alpha) {
            const int q = set_bits[alpha - 1];
            if (l == 4 + alpha || l == 6 + alpha) gates[q] = GateKind::H;
            if (l == 5 + alpha) gates[q] = GateKind::CxControl;
        }
        layers.emplace_back(std::move(gates), gs);
    }
    return Circuit(gs, n_qubits, std::move(layers));
}

}  // namespace qclearn
