#include <cmath>

#include "doctest.h"
#include "qclearn/errors.hpp"
#include "qclearn/reconstruct.hpp"
#include "qclearn/rng.hpp"
#include "qclearn/simulator.hpp"
#include "test_util.hpp"

using namespace qclearn;
using qctest::make_circuit;

namespace {

ZzProvider fail_provider() {
    return [](int, int) -> double {
        throw InconsistentInput("ZZ should not be queried here");
    };
}

ZzProvider counting_provider(const BitString& a, const BitString& b, double p_a, int* calls) {
    return [&a, &b, p_a, calls](int i, int j) {
        ++*calls;
        return forward_zz(a, b, p_a, i, j);
    };
}

}  // namespace

TEST_SUITE_BEGIN("reconstruct");

TEST_CASE("forward expectations oracle") {
    const BitString a = BitString::from_string("10");
    const BitString b = BitString::from_string("01");
    const auto z = forward_expectations(a, b, 0.25);
    CHECK(z[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(z[1] == doctest::Approx(-0.5).epsilon(1e-15));

    // a = b: expectations are +/-1 regardless of p_a.
    const BitString same = BitString::from_string("011");
    for (double p : {0.0, 0.3, 1.0}) {
        const auto ze = forward_expectations(same, same, p);
        CHECK(ze[0] == 1.0);
        CHECK(ze[1] == -1.0);
        CHECK(ze[2] == -1.0);
    }

    CHECK(forward_zz(BitString::from_string("11"), BitString::from_string("00"), 0.5, 0, 1) ==
          doctest::Approx(1.0));
    CHECK_THROWS_AS(forward_expectations(a, BitString::from_string("011"), 0.5),
                    LengthMismatch);
    CHECK_THROWS_AS(forward_expectations(a, b, 1.5), InconsistentInput);
    CHECK_THROWS_AS(forward_zz(a, b, 0.5, 0, 5), IndexOutOfRange);
}

TEST_CASE("reconstruction case dispatch") {
    // All +1: single outcome 000.
    const auto trivial = reconstruct({1.0, 1.0, 1.0}, fail_provider());
    CHECK(trivial.a.to_string() == "000");
    CHECK(trivial.b.to_string() == "000");
    CHECK(trivial.p_a == 1.0);

    // Equal-probability support resolved through <Z_i Z_j>.
    const auto bell = reconstruct({0.0, 0.0}, [](int, int) { return 1.0; });
    CHECK(bell.a.to_string() == "11");
    CHECK(bell.b.to_string() == "00");
    CHECK(bell.p_a == doctest::Approx(0.5).epsilon(1e-15));

    // Distinct probabilities: single-qubit data suffices (case iv, p_a != p_b).
    const auto skew = reconstruct({0.5, -0.5}, fail_provider());
    CHECK(skew.a.to_string() == "10");
    CHECK(skew.b.to_string() == "01");
    CHECK(skew.p_a == doctest::Approx(0.25).epsilon(1e-15));

    // Mixed fixed bits around an interior pair.
    const auto mixed = reconstruct({1.0, 0.2, -1.0, -0.2}, fail_provider());
    CHECK(mixed.a.to_string() == "0110");
    CHECK(mixed.b.to_string() == "0011");
    CHECK(mixed.p_a == doctest::Approx(0.4).epsilon(1e-15));

    CHECK_THROWS_AS(reconstruct({0.5, 0.3}, fail_provider()), InconsistentInput);
    CHECK_THROWS_AS(reconstruct({1.5}, fail_provider()), InconsistentInput);
    CHECK_THROWS_AS(reconstruct({0.0, 0.0}, [](int, int) { return 0.2; }), InconsistentInput);
    CHECK_THROWS_AS(reconstruct({}, fail_provider()), InconsistentInput);
}

TEST_CASE("roundtrip over random two-outcome supports") {
    Rng rng = Rng::for_stream(777, 0);
    int checked = 0;
    while (checked < 200) {
        const int n = 2 + static_cast<int>(rng.next_below(11));
        BitString a, b;
        a.bits.resize(n);
        b.bits.resize(n);
        for (int i = 0; i < n; ++i) {
            a.bits[i] = static_cast<std::uint8_t>(rng.next_below(2));
            b.bits[i] = static_cast<std::uint8_t>(rng.next_below(2));
        }
        if (a == b) continue;
        // Half the cases exercise the equal-probability ZZ branch.
        const double p_a = (checked % 2 == 0) ? 0.5 : 0.05 + 0.9 * rng.next_double();
        ++checked;

        int zz_calls = 0;
        const auto z = forward_expectations(a, b, p_a);
        const auto res = reconstruct(z, counting_provider(a, b, p_a, &zz_calls));

        // Unordered support match with the case-iii labeling convention:
        // the first differing qubit carries a 1 in the reconstructed a.
        int first_diff = 0;
        while (a.bits[first_diff] == b.bits[first_diff]) ++first_diff;
        const bool a_is_a = a.bits[first_diff] == 1;
        const BitString& want_a = a_is_a ? a : b;
        const BitString& want_b = a_is_a ? b : a;
        const double want_pa = a_is_a ? p_a : 1.0 - p_a;
        REQUIRE(res.a == want_a);
        REQUIRE(res.b == want_b);
        REQUIRE(std::abs(res.p_a - want_pa) < 1e-12);

        if (std::abs(p_a - 0.5) > 1e-12) {
            REQUIRE(zz_calls == 0);
        } else {
            // ZZ queried exactly for the interior qubits after the first.
            int interior = 0;
            for (int i = 0; i < n; ++i) interior += a.bits[i] != b.bits[i];
            REQUIRE(zz_calls == interior - 1);
        }
    }
}

TEST_CASE("reconstruction agrees with statevector supports") {
    // GHZ-style chain: H on qubit 0, then CX down the line.
    const Circuit ghz = make_circuit(
        GateSet::s(),
        {{GateKind::H, GateKind::T, GateKind::T},
         {GateKind::CxControl, GateKind::CxTarget, GateKind::T},
         {GateKind::T, GateKind::CxControl, GateKind::CxTarget}});
    const StateVector state = run_circuit(ghz);

    // Support read directly off the amplitudes.
    std::vector<std::string> support;
    for (std::size_t x = 0; x < state.size(); ++x)
        if (std::norm(state.amp(x)) > 1e-10) {
            std::string bits;
            for (int q = 0; q < 3; ++q) bits += ((x >> (2 - q)) & 1) ? '1' : '0';
            support.push_back(bits);
        }
    REQUIRE(support.size() == 2);

    const auto rec = expectations(state);
    const auto res = reconstruct(rec.raw_z, [&](int i, int j) {
        return *expectations(state, std::make_pair(i, j)).raw_zz;
    }, ReconstructOptions{1e-9, false});
    CHECK(((res.a.to_string() == support[0] && res.b.to_string() == support[1]) ||
           (res.a.to_string() == support[1] && res.b.to_string() == support[0])));
    CHECK(res.p_a == doctest::Approx(0.5).epsilon(1e-9));

    // BV circuits have a single outcome; reconstruction returns a = b.
    BitString w;
    w.bits = {1, 0, 1, 0};
    const Circuit bv = build_bv_circuit(5, w);
    const auto bv_rec = expectations(run_circuit(bv));
    // The ancilla ends in an interior state, so restrict to the data qubits.
    const std::vector<double> data_z(bv_rec.raw_z.begin(), bv_rec.raw_z.end() - 1);
    const auto bv_res = reconstruct(data_z, fail_provider(), ReconstructOptions{1e-8, false});
    CHECK(bv_res.a.to_string() == "1010");
    CHECK(bv_res.b.to_string() == "1010");
    CHECK(bv_res.p_a == 1.0);
}

TEST_CASE("snap mode tolerates prediction noise") {
    Rng rng = Rng::for_stream(888, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const BitString a = BitString::from_string("1100101");
        const BitString b = BitString::from_string("0101101");
        const double p_a = 0.25;
        auto z = forward_expectations(a, b, p_a);
        for (double& v : z) v += 0.02 * (rng.next_double() - 0.5);
        const auto res = reconstruct(
            z, [&](int i, int j) { return forward_zz(a, b, p_a, i, j) +
                                          0.02 * (rng.next_double() - 0.5); },
            ReconstructOptions{1e-6, true});
        REQUIRE(res.a == a);
        REQUIRE(res.b == b);
        REQUIRE(std::abs(res.p_a - p_a) < 0.02);
    }
}

TEST_CASE("decode_bv thresholds rescaled predictions") {
    CHECK(decode_bv({0.9, 0.1, 0.6}).to_string() == "101");
    CHECK(decode_bv({0.0, 0.0, 0.0}).to_string() == "000");
    CHECK(decode_bv({0.4, 0.6}, 0.7).to_string() == "00");

    // Exhaustive correctness on exact labels for N <= 10, popcount <= 3.
    for (int n = 2; n <= 10; ++n) {
        for (int b1 = -1; b1 < n - 1; ++b1)
            for (int b2 = b1; b2 < n - 1; ++b2)
                for (int b3 = b2; b3 < n - 1; ++b3) {
                    BitString w;
                    w.bits.assign(n - 1, 0);
                    if (b1 >= 0) w.bits[b1] = 1;
                    if (b2 >= 0) w.bits[b2] = 1;
                    if (b3 >= 0) w.bits[b3] = 1;
                    const auto z = expectations(run_circuit(build_bv_circuit(n, w))).z;
                    const std::vector<double> data_z(z.begin(), z.end() - 1);
                    REQUIRE(decode_bv(data_z) == w);
                }
    }
}

TEST_SUITE_END();
