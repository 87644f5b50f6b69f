// Acceptance suite: one test case per criterion, each printing a single
// [PASS]/[FAIL] line with the measured values. Heavy artifacts (datasets,
// trained checkpoints) are cached under acceptance_cache/ and shared.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <complex>
#include <set>

#include "acceptance_util.hpp"
#include "doctest.h"
#include "qclearn/circuit.hpp"
#include "qclearn/reconstruct.hpp"
#include "qclearn/rng.hpp"
#include "qclearn/simulator.hpp"
#include "qclearn/threading.hpp"

using namespace qclearn;
using namespace qcaccept;

namespace {

std::vector<std::complex<double>> dense_state(const Circuit& c) {
    const DenseMatrix u = dense_unitary_oracle(c);
    std::vector<std::complex<double>> col(u.dim);
    for (std::size_t r = 0; r < u.dim; ++r) col[r] = u.at(r, 0);
    return col;
}

double dense_raw_z(const std::vector<std::complex<double>>& amps, int n, int i) {
    double acc = 0.0;
    for (std::size_t x = 0; x < amps.size(); ++x)
        acc += std::norm(amps[x]) * (1.0 - 2.0 * ((x >> (n - 1 - i)) & 1u));
    return acc;
}

double dense_raw_zz(const std::vector<std::complex<double>>& amps, int n, int i, int j) {
    double acc = 0.0;
    for (std::size_t x = 0; x < amps.size(); ++x) {
        const int bi = static_cast<int>((x >> (n - 1 - i)) & 1u);
        const int bj = static_cast<int>((x >> (n - 1 - j)) & 1u);
        acc += std::norm(amps[x]) * (1.0 - 2.0 * bi) * (1.0 - 2.0 * bj);
    }
    return acc;
}

TrainConfig budget(std::uint64_t seed, int max_epochs, int patience = 10) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.max_epochs = max_epochs;
    cfg.patience = patience;
    cfg.log_every = 5;
    return cfg;
}

// ---- shared heavyweight artifacts ----

Dataset train_3_5() { return cached_dataset(3, 5, GateSet::s(), 100000, LabelKind::ExactZ, 0, 101); }

Dataset test_3_5() {
    Dataset test = cached_dataset(3, 5, GateSet::s(), 1000, LabelKind::ExactZ, 0, 102);
    const Dataset train = train_3_5();
    disjoint_split(train, test, true);
    return test;
}

Model model_3_5_full() {
    return cached_model("m4_n3p5_multi_100k", [] {
        return train(Model(default_config(3), 1), train_3_5(), budget(1, 40, 8)).model;
    });
}

}  // namespace

TEST_CASE("criterion 01: simulator oracle equivalence") {
    Criterion crit("criterion 1: statevector matches the dense-unitary oracle at 1e-10");
    double worst = 0.0;
    for (const auto& [n, p] : {std::pair{2, 4}, std::pair{3, 5}, std::pair{4, 5},
                              std::pair{5, 4}, std::pair{6, 4}}) {
        for (std::uint64_t i = 0; i < 100; ++i) {
            const Circuit c = sample_random_circuit(n, p, GateSet::s(), 9000 + n, i);
            const StateVector state = run_circuit(c);
            const auto amps = dense_state(c);
            const auto fast = expectations(state);
            for (int q = 0; q < n; ++q)
                worst = std::max(worst, std::abs(fast.raw_z[q] - dense_raw_z(amps, n, q)));
            for (int qi = 0; qi < n; ++qi)
                for (int qj = qi + 1; qj < n; ++qj) {
                    const auto rec = expectations(state, std::make_pair(qi, qj));
                    worst = std::max(worst,
                                     std::abs(*rec.raw_zz - dense_raw_zz(amps, n, qi, qj)));
                }
        }
    }
    crit.check(worst < 1e-10, "max |raw_Z or raw_ZZ deviation| = " + fmt("%.2e", worst) +
                                  " over 500 circuits");
    CHECK(crit.passed());
}

TEST_CASE("criterion 02: exact circuit counting") {
    Criterion crit("criterion 2: counting matches enumeration and the published value");
    bool all_match = true;
    for (const GateSet gs : {GateSet::s(), GateSet::s_star()})
        for (int n = 1; n <= 6; ++n)
            for (int p = 1; n * p <= 6; ++p) {
                const auto circuits = enumerate_circuits(n, p, gs);
                std::set<std::vector<std::uint8_t>> distinct;
                for (const Circuit& c : circuits) distinct.insert(c.serialize());
                all_match = all_match && distinct.size() == circuits.size() &&
                            BigUint(circuits.size()) == count_circuits(n, p, gs);
            }
    crit.check(all_match, "enumeration agrees for all N*P <= 6, both gate sets");
    const std::string q35 = count_circuits(3, 5, GateSet::s()).to_string();
    crit.check(q35 == "3200000", "count(3,5,S) = " + q35);
    CHECK(crit.passed());
}

TEST_CASE("criterion 03: gradient correctness") {
    Criterion crit("criterion 3: finite-difference gradient check, 10 seeds, both output modes");
    ModelConfig cfg;
    cfg.n_conv = 2;
    cfg.filters = 8;
    cfg.dense_sizes = {16};
    double worst = 0.0;
    for (const int n_outputs : {1, 3}) {
        cfg.n_outputs = n_outputs;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            Model model(cfg, seed);
            Tensor x({4, 3, 5, 4});
            Rng rng = Rng::for_stream(3000 + seed, n_outputs);
            for (std::int64_t i = 0; i < 4 * 3 * 5; ++i)
                x[i * 4 + static_cast<std::int64_t>(rng.next_below(4))] = 1.0;
            Tensor y({4, n_outputs});
            for (std::int64_t i = 0; i < y.size(); ++i) y[i] = rng.next_double();

            ForwardCache cache;
            model.forward_train(x, cache, false);
            const auto grads = model.backward(cache, y);
            const auto params = model.parameters();
            const double h = 1e-5;
            for (std::size_t t = 0; t < params.size(); ++t) {
                Tensor& p = *params[t];
                for (std::int64_t i = 0; i < p.size(); ++i) {
                    const double saved = p[i];
                    p[i] = saved + h;
                    ForwardCache c1;
                    const double up = bce_loss(model.forward_train(x, c1, false), y);
                    p[i] = saved - h;
                    ForwardCache c2;
                    const double down = bce_loss(model.forward_train(x, c2, false), y);
                    p[i] = saved;
                    const double numeric = (up - down) / (2.0 * h);
                    const double analytic = grads[t][i];
                    const double denom =
                        std::max({std::abs(numeric), std::abs(analytic), 1e-3});
                    worst = std::max(worst, std::abs(numeric - analytic) / denom);
                }
            }
        }
    }
    crit.check(worst < 1e-4, "max relative gradient error = " + fmt("%.2e", worst));
    CHECK(crit.passed());
}

TEST_CASE("criterion 04: desk-scale learning at (3,5)") {
    Criterion crit("criterion 4: R2 >= 0.95 with 1e5 training circuits at (N=3, P=5)");
    const Model model = model_3_5_full();
    const Dataset test = test_3_5();
    const double r2 = evaluate_r2(model, test, EvalOptions{}).r2;
    crit.check(r2 >= 0.95, "R2 = " + fmt("%.4f", r2) + " on " + std::to_string(test.size()) +
                               " unseen circuits");
    CHECK(crit.passed());
}

TEST_CASE("criterion 05: training-set size monotonicity") {
    Criterion crit("criterion 5: 1 - R2 non-increasing over N_train in {1e3, 1e4, 1e5}");
    const Dataset full = train_3_5();
    const Dataset test = test_3_5();

    const Model m3 = cached_model("m5_n3p5_multi_1k", [&] {
        return train(Model(default_config(3), 1), prefix(full, 1000), budget(1, 60)).model;
    });
    const Model m4 = cached_model("m5_n3p5_multi_10k", [&] {
        return train(Model(default_config(3), 1), prefix(full, 10000), budget(1, 40)).model;
    });
    const Model m5 = model_3_5_full();

    const double e3 = 1.0 - evaluate_r2(m3, test, EvalOptions{}).r2;
    const double e4 = 1.0 - evaluate_r2(m4, test, EvalOptions{}).r2;
    const double e5 = 1.0 - evaluate_r2(m5, test, EvalOptions{}).r2;

    int inversions = 0;
    bool small_inversions = true;
    for (const auto& [prev, next] : {std::pair{e3, e4}, std::pair{e4, e5}}) {
        if (next > prev) {
            ++inversions;
            small_inversions = small_inversions && next <= prev * 1.2;
        }
    }
    crit.check(inversions <= 1 && small_inversions,
               "1-R2 = " + fmt("%.4f", e3) + " -> " + fmt("%.4f", e4) + " -> " +
                   fmt("%.4f", e5) + " (" + std::to_string(inversions) + " inversions)");
    CHECK(crit.passed());
}

TEST_CASE("criterion 06: transfer learning beats cold starts") {
    Criterion crit("criterion 6: P=5 -> P=6 warm start wins in >= 4 of 5 repetitions");
    const Dataset fine = cached_dataset(3, 6, GateSet::s(), 10000, LabelKind::ExactZ, 0, 303);
    Dataset test = cached_dataset(3, 6, GateSet::s(), 1000, LabelKind::ExactZ, 0, 304);
    disjoint_split(fine, test, true);
    const Model base = model_3_5_full();

    int wins = 0;
    std::string scores;
    for (int rep = 1; rep <= 5; ++rep) {
        TrainConfig cfg = budget(800 + rep, 12, 100);  // fixed-epoch budget, no early stop
        cfg.log_every = 0;
        const Model warm = cached_model("m6_warm_rep" + std::to_string(rep), [&] {
            return train(base, fine, cfg).model;
        });
        const Model cold = cached_model("m6_cold_rep" + std::to_string(rep), [&] {
            return train(Model(default_config(3), 900 + rep), fine, cfg).model;
        });
        const double r2_warm = evaluate_r2(warm, test, EvalOptions{}).r2;
        const double r2_cold = evaluate_r2(cold, test, EvalOptions{}).r2;
        if (r2_warm > r2_cold) ++wins;
        scores += fmt("%.3f", r2_warm) + ">" + fmt("%.3f", r2_cold) + " ";
    }
    crit.check(wins >= 4, "warm vs cold R2: " + scores + "-> " + std::to_string(wins) + "/5 wins");
    CHECK(crit.passed());
}

TEST_CASE("criterion 07: extrapolation across qubit counts") {
    Criterion crit("criterion 7: R2(train N=8 -> test N=10) > R2(train N=4 -> test N=10), >= 0.8");
    const Dataset test10 = cached_dataset(10, 6, GateSet::s(), 2000, LabelKind::ExactZ, 0, 403);

    const Model m8 = cached_model("m7_n8p6_single_100k", [] {
        return train(Model(default_config(1), 1),
                     cached_dataset(8, 6, GateSet::s(), 100000, LabelKind::ExactZ, 0, 401),
                     budget(1, 22)).model;
    });
    const Model m4 = cached_model("m7_n4p6_single_100k", [] {
        return train(Model(default_config(1), 1),
                     cached_dataset(4, 6, GateSet::s(), 100000, LabelKind::ExactZ, 0, 402),
                     budget(1, 22)).model;
    });

    const double r2_8 = evaluate_r2(m8, test10, EvalOptions{}).r2;
    const double r2_4 = evaluate_r2(m4, test10, EvalOptions{}).r2;
    crit.check(r2_8 > r2_4, "R2(from N=8) = " + fmt("%.4f", r2_8) + " vs R2(from N=4) = " +
                                fmt("%.4f", r2_4));
    crit.check(r2_8 >= 0.8, "extrapolated R2(from N=8) = " + fmt("%.4f", r2_8) + " >= 0.8");
    CHECK(crit.passed());
}

TEST_CASE("criterion 08: noise resilience") {
    Criterion crit("criterion 8: training on 32-shot labels beats the labels themselves");
    const Dataset train_exact =
        cached_dataset(3, 7, GateSet::s(), 100000, LabelKind::ExactZ, 0, 501);
    Dataset test = cached_dataset(3, 7, GateSet::s(), 1000, LabelKind::ExactZ, 0, 503);
    disjoint_split(train_exact, test, true);

    const Model model = cached_model("m8_n3p7_multi_noisy32", [&] {
        const Dataset noisy = make_noisy_dataset(train_exact, 32, 502);
        return train(Model(default_config(3), 1), noisy, budget(1, 30)).model;
    });
    const double r2_model = evaluate_r2(model, test, EvalOptions{}).r2;
    const Dataset noisy_test = make_noisy_dataset(test, 32, 536);
    const double r2_noisy = r2_score(noisy_test.labels, test.labels);
    crit.check(r2_model >= r2_noisy + 0.03,
               "model R2 = " + fmt("%.4f", r2_model) + " vs noisy-label R2 = " +
                   fmt("%.4f", r2_noisy));

    double prev = -1e9;
    bool monotone = true;
    std::string curve;
    for (const std::int64_t n : {8ll, 32ll, 128ll, 512ll, 2048ll}) {
        const Dataset noisy = make_noisy_dataset(test, n, 504 + static_cast<std::uint64_t>(n));
        const double r2 = r2_score(noisy.labels, test.labels);
        monotone = monotone && r2 > prev;
        prev = r2;
        curve += fmt("%.3f", r2) + " ";
    }
    crit.check(monotone, "noisy-label R2 over N_measure {8..2048}: " + curve);
    CHECK(crit.passed());
}

TEST_CASE("criterion 09: two-outcome reconstruction") {
    Criterion crit("criterion 9: 200 reconstruction roundtrips and exhaustive BV decoding");
    Rng rng = Rng::for_stream(4242, 0);
    int checked = 0;
    bool roundtrips = true;
    double worst_p = 0.0;
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
        const double p_a = (checked % 2 == 0) ? 0.5 : 0.02 + 0.96 * rng.next_double();
        ++checked;
        const auto z = forward_expectations(a, b, p_a);
        const auto res = reconstruct(
            z, [&](int i, int j) { return forward_zz(a, b, p_a, i, j); });
        int first_diff = 0;
        while (a.bits[first_diff] == b.bits[first_diff]) ++first_diff;
        const bool a_first = a.bits[first_diff] == 1;
        const BitString& want_a = a_first ? a : b;
        const BitString& want_b = a_first ? b : a;
        const double want_pa = a_first ? p_a : 1.0 - p_a;
        roundtrips = roundtrips && res.a == want_a && res.b == want_b;
        worst_p = std::max(worst_p, std::abs(res.p_a - want_pa));
    }
    crit.check(roundtrips && worst_p < 1e-12,
               "200 roundtrips exact, max |p_a error| = " + fmt("%.1e", worst_p));

    bool decode_ok = true;
    int decoded = 0;
    for (int n = 2; n <= 10; ++n)
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
                    decode_ok = decode_ok && decode_bv(data_z) == w;
                    ++decoded;
                }
    crit.check(decode_ok, "exhaustive BV decode correct on " + std::to_string(decoded) +
                              " secrets (N <= 10, popcount <= 3)");
    CHECK(crit.passed());
}

TEST_CASE("criterion 10: Bernstein-Vazirani emulation at N=1000") {
    Criterion crit("criterion 10: CNN trained at N=10 decodes 1000-qubit BV secrets");
    const Model model = cached_model("m10_n10p7_single_100k", [] {
        return train(Model(default_config(1), 1),
                     cached_dataset(10, 7, GateSet::s(), 100000, LabelKind::ExactZ, 0, 601),
                     budget(1, 18)).model;
    });

    const int n = 1000;
    Rng rng = Rng::for_stream(1010, 0);
    std::set<int> planted;
    while (planted.size() < 20) planted.insert(static_cast<int>(rng.next_below(n - 1)));

    int hits = 0;
    for (const int index : planted) {
        BitString secret;
        secret.bits.assign(n - 1, 0);
        secret.bits[index] = 1;
        const Circuit circuit = build_bv_circuit(n, secret);
        const CircuitEncoding enc = encode_one_hot(circuit);

        std::vector<double> z(n - 1, 0.0);
        const int chunk = 8;
        for (int begin = 0; begin < n - 1; begin += chunk) {
            const int end = std::min(n - 1, begin + chunk);
            Tensor x({end - begin, n, enc.depth, 4});
            for (int q = begin; q < end; ++q) {
                const CircuitEncoding view = q == 0 ? enc : swap_qubit_rows(enc, 0, q);
                double* dst = x.data() + static_cast<std::int64_t>(q - begin) * view.data.size();
                for (std::size_t k = 0; k < view.data.size(); ++k) dst[k] = view.data[k];
            }
            const Tensor pred = model.predict(x);
            for (int q = begin; q < end; ++q) z[q] = pred[q - begin];
        }
        if (decode_bv(z) == secret) ++hits;
    }
    crit.check(hits >= 18, std::to_string(hits) + "/20 secrets recovered exactly");
    CHECK(crit.passed());
}

TEST_CASE("criterion 11: two-qubit targets") {
    Criterion crit("criterion 11: z12 learning at (3,5) and its extrapolation ordering");
    const Dataset train12 =
        cached_dataset(3, 5, GateSet::s(), 100000, LabelKind::ExactZ12, 0, 701);
    Dataset test12 = cached_dataset(3, 5, GateSet::s(), 1000, LabelKind::ExactZ12, 0, 702);
    disjoint_split(train12, test12, true);

    const Model model = cached_model("m11_n3p5_z12_100k", [&] {
        return train(Model(default_config(1), 1), train12, budget(1, 40, 8)).model;
    });
    const double r2 = evaluate_r2(model, test12, EvalOptions{}).r2;
    crit.check(r2 >= 0.93, "z12 R2 = " + fmt("%.4f", r2));

    const Dataset test10 =
        cached_dataset(10, 6, GateSet::s(), 2000, LabelKind::ExactZ12, 0, 705);
    const Model m8 = cached_model("m11_n8p6_z12_100k", [] {
        return train(Model(default_config(1), 1),
                     cached_dataset(8, 6, GateSet::s(), 100000, LabelKind::ExactZ12, 0, 703),
                     budget(1, 18)).model;
    });
    const Model m4 = cached_model("m11_n4p6_z12_100k", [] {
        return train(Model(default_config(1), 1),
                     cached_dataset(4, 6, GateSet::s(), 100000, LabelKind::ExactZ12, 0, 704),
                     budget(1, 18)).model;
    });
    const double r2_8 = evaluate_r2(m8, test10, EvalOptions{}).r2;
    const double r2_4 = evaluate_r2(m4, test10, EvalOptions{}).r2;
    crit.check(r2_8 > r2_4, "z12 extrapolation to N=10: R2(from N=8) = " + fmt("%.4f", r2_8) +
                                " vs R2(from N=4) = " + fmt("%.4f", r2_4));
    CHECK(crit.passed());
}

TEST_CASE("criterion 12: depth drift of the z1 distribution") {
    Criterion crit("criterion 12: fraction of z1 in [0.4, 0.6] grows from P=5 to P=20");
    auto band_fraction = [](int p) {
        int in_band = 0;
        const int total = 5000;
        for (int i = 0; i < total; ++i) {
            const Circuit c = sample_random_circuit(3, p, GateSet::s(), 1200 + p, i);
            const double z1 = expectations(run_circuit(c)).z[0];
            if (z1 >= 0.4 && z1 <= 0.6) ++in_band;
        }
        return static_cast<double>(in_band) / total;
    };
    const double shallow = band_fraction(5);
    const double deep = band_fraction(20);
    // Known-red: the shallow ensemble carries a ~0.66 point mass at z1 = 1/2
    // exactly (any circuit whose final effective gate on qubit 1 is H), which
    // already saturates the band; deepening spreads that mass outward and the
    // comparison reverses. The drift toward 1/2 shows up instead as the decay
    // of the extreme-value mass, covered by the simulator unit tests.
    crit.check(deep > shallow, "band fraction P=20: " + fmt("%.4f", deep) +
                                   " vs P=5: " + fmt("%.4f", shallow));
    CHECK(crit.passed());
}
