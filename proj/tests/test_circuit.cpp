#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "qclearn/circuit.hpp"
#include "qclearn/errors.hpp"
#include "qclearn/simulator.hpp"
#include "test_util.hpp"

using namespace qclearn;
using qctest::make_circuit;

TEST_SUITE_BEGIN("circuit");

TEST_CASE("one-hot encoding matches the channel maps") {
    // Single T gate fiber.
    const Circuit t1 = make_circuit(GateSet::s(), {{GateKind::T}});
    CHECK(encode_one_hot(t1).data == std::vector<std::uint8_t>{1, 0, 0, 0});

    // N=1, P=2 circuit (H, H).
    const Circuit hh = make_circuit(GateSet::s(), {{GateKind::H}, {GateKind::H}});
    CHECK(encode_one_hot(hh).data == std::vector<std::uint8_t>{0, 1, 0, 0, 0, 1, 0, 0});

    // CX(control q0 -> target q1) row fibers.
    const Circuit cx = make_circuit(GateSet::s(), {{GateKind::CxControl, GateKind::CxTarget}});
    const CircuitEncoding enc = encode_one_hot(cx);
    CHECK(std::vector<std::uint8_t>(enc.data.begin(), enc.data.begin() + 4) ==
          std::vector<std::uint8_t>{0, 0, 1, 0});
    CHECK(std::vector<std::uint8_t>(enc.data.begin() + 4, enc.data.end()) ==
          std::vector<std::uint8_t>{0, 0, 0, 1});

    // S* uses five channels with I in front.
    const Circuit id = make_circuit(GateSet::s_star(), {{GateKind::I, GateKind::T}});
    CHECK(encode_one_hot(id).data == std::vector<std::uint8_t>{1, 0, 0, 0, 0, 0, 1, 0, 0, 0});
}

TEST_CASE("decoding inverts the encoding and rejects malformed tensors") {
    CircuitEncoding enc;
    enc.gate_set = GateSet::s();
    enc.n_qubits = 1;
    enc.depth = 1;
    enc.data = {1, 0, 0, 0};
    const Circuit c = decode_one_hot(enc);
    CHECK(c.n_qubits() == 1);
    CHECK(c.depth() == 1);
    CHECK(c.layer(0).gate(0) == GateKind::T);

    // Two CX controls in one layer.
    CircuitEncoding bad;
    bad.gate_set = GateSet::s();
    bad.n_qubits = 2;
    bad.depth = 1;
    bad.data = {0, 0, 1, 0, 0, 0, 1, 0};
    CHECK_THROWS_AS(decode_one_hot(bad), MalformedEncoding);

    // Non-one-hot fiber.
    CircuitEncoding two_hot = encode_one_hot(make_circuit(GateSet::s(), {{GateKind::T}}));
    two_hot.data[1] = 1;
    CHECK_THROWS_AS(decode_one_hot(two_hot), MalformedEncoding);

    CircuitEncoding zero_hot = encode_one_hot(make_circuit(GateSet::s(), {{GateKind::T}}));
    zero_hot.data[0] = 0;
    CHECK_THROWS_AS(decode_one_hot(zero_hot), MalformedEncoding);
}

TEST_CASE("encode/decode round-trips on sampled circuits") {
    int checked = 0;
    for (const GateSet gs : {GateSet::s(), GateSet::s_star()}) {
        for (const auto& [n, p] : {std::pair{3, 5}, std::pair{2, 4}, std::pair{5, 3}}) {
            for (std::uint64_t index = 0; index < 170; ++index) {
                const Circuit c = sample_random_circuit(n, p, gs, 99, index);
                const CircuitEncoding enc = encode_one_hot(c);
                // Every fiber one-hot.
                for (int q = 0; q < n; ++q)
                    for (int l = 0; l < p; ++l) {
                        int sum = 0;
                        for (int ch = 0; ch < gs.channel_count(); ++ch) sum += enc.at(q, l, ch);
                        REQUIRE(sum == 1);
                    }
                const Circuit back = decode_one_hot(enc);
                REQUIRE(back.serialize() == c.serialize());
                REQUIRE(encode_one_hot(back).data == enc.data);
                ++checked;
            }
        }
    }
    CHECK(checked == 1020);
}

TEST_CASE("circuit counting matches the paper value and enumeration") {
    CHECK(count_circuits(3, 5, GateSet::s()).to_string() == "3200000");
    CHECK(count_circuits(1, 1, GateSet::s()).to_u64() == 2);
    CHECK(count_circuits(1, 1, GateSet::s_star()).to_u64() == 3);
    CHECK(count_circuits(2, 1, GateSet::s()).to_u64() == 6);

    // Exhaustive enumeration agrees wherever it is feasible.
    for (const GateSet gs : {GateSet::s(), GateSet::s_star()}) {
        for (int n = 1; n <= 6; ++n)
            for (int p = 1; n * p <= 6; ++p) {
                const auto circuits = enumerate_circuits(n, p, gs);
                std::set<std::vector<std::uint8_t>> distinct;
                for (const Circuit& c : circuits) distinct.insert(c.serialize());
                REQUIRE(distinct.size() == circuits.size());
                REQUIRE(BigUint(circuits.size()) == count_circuits(n, p, gs));
            }
    }

    // The binomial sum collapses to (layer configurations)^P.
    for (const GateSet gs : {GateSet::s(), GateSet::s_star()}) {
        for (const auto& [n, p] : {std::pair{2, 3}, std::pair{3, 5}, std::pair{7, 4}}) {
            const auto layer_configs =
                BigUint(static_cast<std::uint64_t>(count_layer_configs(n, gs)));
            CHECK(layer_configs.pow(p) == count_circuits(n, p, gs));
        }
    }

    // Values reach ~10^48 at the paper's largest size.
    const std::string big = count_circuits(20, 6, GateSet::s()).to_string();
    CHECK(big.size() == 49);
}

TEST_CASE("enumeration lists every valid circuit exactly once") {
    const auto small = enumerate_circuits(1, 2, GateSet::s());
    REQUIRE(small.size() == 4);  // TT, TH, HT, HH
    std::set<std::vector<std::uint8_t>> keys;
    for (const Circuit& c : small) keys.insert(c.serialize());
    CHECK(keys.size() == 4);

    CHECK(BigUint(enumerate_circuits(3, 2, GateSet::s()).size()) ==
          count_circuits(3, 2, GateSet::s()));
    CHECK_THROWS_AS(enumerate_circuits(4, 10, GateSet::s()), EnsembleTooLarge);
}

TEST_CASE("sampler is deterministic and hits only valid configurations") {
    const Circuit a = sample_random_circuit(4, 6, GateSet::s(), 123, 77);
    const Circuit b = sample_random_circuit(4, 6, GateSet::s(), 123, 77);
    CHECK(a.serialize() == b.serialize());

    std::set<std::vector<std::uint8_t>> valid;
    for (const Circuit& c : enumerate_circuits(2, 1, GateSet::s())) valid.insert(c.serialize());
    for (std::uint64_t i = 0; i < 500; ++i) {
        const Circuit c = sample_random_circuit(2, 1, GateSet::s(), 5, i);
        REQUIRE(valid.count(c.serialize()) == 1);
    }
}

TEST_CASE("sampler is uniform over the full ensemble (multinomial 5 sigma)") {
    const std::uint64_t samples = 60000;
    for (const auto& [n, p] : {std::pair{2, 1}, std::pair{1, 2}}) {
        std::map<std::vector<std::uint8_t>, std::uint64_t> counts;
        for (const Circuit& c : enumerate_circuits(n, p, GateSet::s())) counts[c.serialize()] = 0;
        for (std::uint64_t i = 0; i < samples; ++i)
            counts.at(sample_random_circuit(n, p, GateSet::s(), 2024, i).serialize()) += 1;
        const double k = static_cast<double>(counts.size());
        const double expected = samples / k;
        const double sigma = std::sqrt(samples * (1.0 / k) * (1.0 - 1.0 / k));
        for (const auto& [key, observed] : counts)
            REQUIRE(std::abs(static_cast<double>(observed) - expected) <= 5.0 * sigma);
    }
}

TEST_CASE("row swaps are involutions that commute with encoding") {
    for (std::uint64_t index = 0; index < 50; ++index) {
        const Circuit c = sample_random_circuit(4, 4, GateSet::s(), 31, index);
        CHECK(swap_qubit_rows(c, 2, 2).serialize() == c.serialize());
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const Circuit once = swap_qubit_rows(c, i, j);
                CHECK(swap_qubit_rows(once, i, j).serialize() == c.serialize());
                CHECK(encode_one_hot(once).data ==
                      swap_qubit_rows(encode_one_hot(c), i, j).data);
            }
    }
    const Circuit c = sample_random_circuit(3, 2, GateSet::s(), 1, 1);
    CHECK_THROWS_AS(swap_qubit_rows(c, 0, 3), IndexOutOfRange);
    CHECK_THROWS_AS(swap_qubit_rows(encode_one_hot(c), -1, 0), IndexOutOfRange);
}

TEST_CASE("row swap moves z_j to row 0 (simulator cross-check)") {
    for (std::uint64_t index = 0; index < 100; ++index) {
        const Circuit c = sample_random_circuit(4, 5, GateSet::s(), 57, index);
        const auto base = expectations(run_circuit(c));
        for (int j = 1; j < 4; ++j) {
            const auto swapped = expectations(run_circuit(swap_qubit_rows(c, 0, j)));
            REQUIRE(std::abs(base.z[j] - swapped.z[0]) < 1e-10);
        }
    }
}

TEST_CASE("pair swap places (i, j) at rows (0, 1)") {
    const Circuit c = sample_random_circuit(5, 4, GateSet::s(), 8, 3);
    CHECK(swap_qubit_pair(c, 0, 1).serialize() == c.serialize());
    CHECK_THROWS_AS(swap_qubit_pair(c, 2, 2), DegeneratePair);
    CHECK_THROWS_AS(swap_qubit_pair(c, 0, 9), IndexOutOfRange);

    // Involution on pairs disjoint from rows (0, 1); with overlapping pairs
    // no placement of (i, j) at (0, 1) can be involutive.
    for (std::uint64_t index = 0; index < 20; ++index) {
        const Circuit r = sample_random_circuit(5, 4, GateSet::s(), 9, index);
        for (int i = 2; i < 5; ++i)
            for (int j = 2; j < 5; ++j) {
                if (i == j) continue;
                const Circuit once = swap_qubit_pair(r, i, j);
                CHECK(swap_qubit_pair(once, i, j).serialize() == r.serialize());
            }
    }

    // z_ij of the original equals z_01 of the swapped circuit.
    for (std::uint64_t index = 0; index < 100; ++index) {
        const Circuit r = sample_random_circuit(4, 5, GateSet::s(), 77, index);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                if (i == j) continue;
                const auto direct = expectations(run_circuit(r), std::make_pair(i, j));
                const auto moved =
                    expectations(run_circuit(swap_qubit_pair(r, i, j)), std::make_pair(0, 1));
                REQUIRE(std::abs(*direct.z12 - *moved.z12) < 1e-10);
            }
    }
}

TEST_CASE("pair swap on encodings matches pair swap on circuits") {
    for (std::uint64_t index = 0; index < 30; ++index) {
        const Circuit c = sample_random_circuit(5, 3, GateSet::s_star(), 13, index);
        for (const auto& [i, j] : {std::pair{2, 4}, std::pair{3, 2}, std::pair{1, 0}}) {
            CHECK(encode_one_hot(swap_qubit_pair(c, i, j)).data ==
                  swap_qubit_pair(encode_one_hot(c), i, j).data);
        }
    }
}

TEST_CASE("BV circuits have depth 6 + popcount and decode exactly") {
    // Paper example: w = 010 at N = 4 gives depth 7.
    CHECK(build_bv_circuit(4, BitString::from_string("010")).depth() == 7);

    // All-zero secret: depth 6, all data qubits stay |0>.
    const Circuit zero = build_bv_circuit(4, BitString::from_string("000"));
    CHECK(zero.depth() == 6);
    const auto z0 = expectations(run_circuit(zero)).z;
    for (int i = 0; i < 3; ++i) CHECK(z0[i] == doctest::Approx(0.0).epsilon(1e-12));

    // Two set bits at N = 10: depth 8.
    BitString w10;
    w10.bits.assign(9, 0);
    w10.bits[2] = w10.bits[5] = 1;
    const Circuit ten = build_bv_circuit(10, w10);
    CHECK(ten.depth() == 8);
    const auto z10 = expectations(run_circuit(ten)).z;
    for (int i = 0; i < 9; ++i) REQUIRE(std::abs(z10[i] - w10.bits[i]) < 1e-10);

    CHECK_THROWS_AS(build_bv_circuit(4, BitString::from_string("0110")), InvalidSecret);
    CHECK_THROWS_AS(build_bv_circuit(1, BitString{}), InvalidSecret);
}

TEST_CASE("BV circuits satisfy <Z_i> = 1 - 2 w_i for all N <= 10, popcount <= 3") {
    for (int n = 2; n <= 10; ++n) {
        std::vector<BitString> secrets;
        BitString zero;
        zero.bits.assign(n - 1, 0);
        secrets.push_back(zero);
        for (int b1 = 0; b1 < n - 1; ++b1) {
            BitString w1 = zero;
            w1.bits[b1] = 1;
            secrets.push_back(w1);
            for (int b2 = b1 + 1; b2 < n - 1; ++b2) {
                BitString w2 = w1;
                w2.bits[b2] = 1;
                secrets.push_back(w2);
                for (int b3 = b2 + 1; b3 < n - 1; ++b3) {
                    BitString w3 = w2;
                    w3.bits[b3] = 1;
                    secrets.push_back(w3);
                }
            }
        }
        for (const BitString& w : secrets) {
            const Circuit bv = build_bv_circuit(n, w);
            REQUIRE(bv.depth() == 6 + w.popcount());
            // One CX pair in each kickback layer, none elsewhere.
            for (int l = 0; l < bv.depth(); ++l) {
                const bool kickback = l >= 5 && l < 5 + w.popcount();
                REQUIRE(bv.layer(l).cx_pair().has_value() == kickback);
            }
            const auto rec = expectations(run_circuit(bv));
            for (int i = 0; i < n - 1; ++i)
                REQUIRE(std::abs(rec.raw_z[i] - (1.0 - 2.0 * w.bits[i])) < 1e-10);
        }
    }
}

TEST_CASE("canonical serialization layout is stable") {
    const Circuit cx = make_circuit(GateSet::s(), {{GateKind::CxControl, GateKind::CxTarget}});
    CHECK(cx.serialize() == std::vector<std::uint8_t>{'Q', 'C', 0, 2, 0, 1, 0, 2, 3});

    const Circuit star = make_circuit(GateSet::s_star(), {{GateKind::I, GateKind::H}});
    CHECK(star.serialize() == std::vector<std::uint8_t>{'Q', 'C', 1, 2, 0, 1, 0, 0, 2});

    for (std::uint64_t index = 0; index < 100; ++index) {
        const Circuit c = sample_random_circuit(3, 4, GateSet::s_star(), 3, index);
        const auto bytes = c.serialize();
        CHECK(Circuit::deserialize(bytes).serialize() == bytes);
        CHECK(c.hash64() == Circuit::deserialize(bytes).hash64());
    }

    std::vector<std::uint8_t> junk{'Q', 'X', 0, 1, 0, 1, 0, 0};
    CHECK_THROWS_AS(Circuit::deserialize(junk), MalformedEncoding);
}

TEST_SUITE_END();
