// qclearn: constrained random quantum circuits, exact simulation labels,
// scalable CNN training, and the evaluation harnesses built on them.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qclearn/checkpoint.hpp"
#include "qclearn/circuit.hpp"
#include "qclearn/dataset.hpp"
#include "qclearn/io_util.hpp"
#include "qclearn/reconstruct.hpp"
#include "qclearn/rng.hpp"
#include "qclearn/simulator.hpp"
#include "qclearn/threading.hpp"
#include "qclearn/training.hpp"

namespace {

using nlohmann::json;
using namespace qclearn;

// ---- run manifests -------------------------------------------------------

class Manifest {
  public:
    Manifest(std::string command, int argc, char** argv) : command_(std::move(command)) {
        for (int i = 0; i < argc; ++i) argv_.push_back(argv[i]);
        start_ = std::chrono::steady_clock::now();
    }

    void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
    void input(const std::string& name, const std::string& path) { inputs_[name] = path; }
    void output(const std::string& name, const std::string& path) { outputs_[name] = path; }

    void write(const std::string& primary_output) const {
        json j;
        j["command"] = command_;
        j["argv"] = argv_;
        j["threads"] = threads();
        j["seeds"] = seeds_;
        j["inputs"] = hash_files(inputs_);
        j["outputs"] = hash_files(outputs_);
        j["duration_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        const std::string text = j.dump(2) + "\n";
        write_file(primary_output + ".manifest.json",
                   std::vector<std::uint8_t>(text.begin(), text.end()));
    }

  private:
    static json hash_files(const std::map<std::string, std::string>& files) {
        json out = json::object();
        for (const auto& [name, path] : files) {
            json entry;
            entry["path"] = path;
            try {
                const auto bytes = read_file(path);
                entry["crc32"] = crc32(bytes.data(), bytes.size());
                entry["bytes"] = bytes.size();
            } catch (const IoError&) {
                entry["crc32"] = nullptr;
            }
            out[name] = entry;
        }
        return out;
    }

    std::string command_;
    std::vector<std::string> argv_;
    std::map<std::string, std::uint64_t> seeds_;
    std::map<std::string, std::string> inputs_;
    std::map<std::string, std::string> outputs_;
    std::chrono::steady_clock::time_point start_;
};

void write_text(const std::string& path, const std::string& text) {
    write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

GateSet parse_gate_set(const std::string& name) {
    if (name == "s") return GateSet::s();
    if (name == "s-star") return GateSet::s_star();
    throw Error("unknown gate set: " + name);
}

json read_json(const std::string& path) {
    const auto bytes = read_file(path);
    return json::parse(std::string(bytes.begin(), bytes.end()));
}

// ---- subcommand state ----------------------------------------------------

struct GenerateArgs {
    int qubits = 3, depth = 5;
    std::string gate_set = "s", labels = "exact-z", out, jsonl;
    std::uint64_t count = 1000, seed = 1;
    std::int64_t measure = 32;
};

struct TrainArgs {
    std::string data, out, init, dense = "128,64,32", curve;
    bool multi_output = false;
    int label_index = -1, epochs = 100, batch = 256, patience = 10, conv_layers = 10,
        filters = 32, log_every = 0;
    double val_fraction = 0.05, lr = 1e-3;
    std::uint64_t seed = 1;
    bool no_lr_halving = false;
};

struct EvalArgs {
    std::string checkpoint, data, scatter, hist, report;
    int qubit = -1, label_index = -1, bins = 50;
    std::vector<int> pair;
};

struct ExtrapolateArgs {
    std::string checkpoint, out;
    std::vector<std::string> data;
    int qubit = -1;
};

struct BvArgs {
    std::string secret, checkpoint, out;
    int qubits = 0, secret_bits = -1, batch = 8;
    std::uint64_t seed = 1;
    double threshold = 0.5;
    bool exact = false;
};

struct ReconstructArgs {
    std::string input, out;
    double tol = 1e-6;
    bool snap = false;
};

struct DecodeArgs {
    std::string input, out;
    double threshold = 0.5;
};

// ---- command bodies ------------------------------------------------------

int cmd_generate(const GenerateArgs& a, Manifest& manifest) {
    const GateSet gs = parse_gate_set(a.gate_set);
    const LabelKind kind = label_kind_from_name(a.labels);
    manifest.seed("dataset", a.seed);
    Dataset ds = generate_dataset(a.qubits, a.depth, gs, a.count, kind, a.measure, a.seed);
    ds.save(a.out);
    manifest.output("dataset", a.out);
    if (!a.jsonl.empty()) {
        ds.export_jsonl(a.jsonl);
        manifest.output("jsonl", a.jsonl);
    }
    manifest.write(a.out);
    std::printf("wrote %zu records to %s\n", ds.size(), a.out.c_str());
    return 0;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        out.push_back(std::stoi(text.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

int cmd_train(const TrainArgs& a, Manifest& manifest) {
    const Dataset data = Dataset::load(a.data);
    manifest.input("dataset", a.data);
    manifest.seed("train", a.seed);

    Model model = [&] {
        if (!a.init.empty()) {
            manifest.input("init_checkpoint", a.init);
            return load_checkpoint(a.init);
        }
        ModelConfig cfg;
        cfg.n_conv = a.conv_layers;
        cfg.filters = a.filters;
        cfg.dense_sizes = parse_int_list(a.dense);
        cfg.n_outputs = a.multi_output ? data.header.n_qubits : 1;
        cfg.gate_channels = data.header.gate_set.channel_count();
        return Model(cfg, a.seed);
    }();

    TrainConfig cfg;
    cfg.batch_size = a.batch;
    cfg.max_epochs = a.epochs;
    cfg.val_fraction = a.val_fraction;
    cfg.patience = a.patience;
    cfg.seed = a.seed;
    cfg.adam.lr = a.lr;
    cfg.label_index = a.label_index;
    cfg.log_every = a.log_every;
    cfg.lr_halving = !a.no_lr_halving;

    TrainResult result = train(std::move(model), data, cfg);

    TrainMeta meta{a.seed, result.steps, result.loss_digest};
    save_checkpoint(result.model, a.out, meta);
    manifest.output("checkpoint", a.out);

    const std::string curve_path = a.curve.empty() ? a.out + ".loss.csv" : a.curve;
    std::string csv = "epoch,train_bce,val_bce\n";
    for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
        csv += std::to_string(e) + "," + std::to_string(result.train_loss[e]) + ",";
        csv += e < result.val_loss.size() ? std::to_string(result.val_loss[e]) : "";
        csv += "\n";
    }
    write_text(curve_path, csv);
    manifest.output("loss_curve", curve_path);
    manifest.write(a.out);
    std::printf("trained %lld steps, best epoch %d, checkpoint %s\n",
                static_cast<long long>(result.steps), result.best_epoch, a.out.c_str());
    return 0;
}

int cmd_eval(const EvalArgs& a, Manifest& manifest) {
    manifest.input("checkpoint", a.checkpoint);
    manifest.input("dataset", a.data);
    const Model model = load_checkpoint(a.checkpoint);
    const Dataset data = Dataset::load(a.data);

    EvalOptions options;
    options.qubit = a.qubit;
    options.label_index = a.label_index;
    if (!a.pair.empty()) {
        if (a.pair.size() != 2) throw Error("--pair needs exactly two indices");
        options.pair = std::make_pair(a.pair[0], a.pair[1]);
    }
    options.collect_scatter = !a.scatter.empty();
    options.histogram_bins = a.hist.empty() ? 0 : a.bins;

    const EvalReport report = evaluate_r2(model, data, options);

    json j;
    j["r2"] = report.r2;
    j["n_test"] = report.n_test;
    j["n_outputs"] = report.n_outputs;
    json stats = json::array();
    for (const OutputStats& s : report.per_output)
        stats.push_back({{"mean_abs_residual", s.mean_abs_residual},
                         {"max_abs_residual", s.max_abs_residual},
                         {"rmse", s.rmse}});
    j["per_output"] = stats;
    write_text(a.report, j.dump(2) + "\n");
    manifest.output("report", a.report);

    if (!a.scatter.empty()) {
        std::string csv = "target,prediction\n";
        for (const auto& [t, p] : report.scatter)
            csv += std::to_string(t) + "," + std::to_string(p) + "\n";
        write_text(a.scatter, csv);
        manifest.output("scatter", a.scatter);
    }
    if (!a.hist.empty()) {
        std::string csv = "bin_low,bin_high,count\n";
        for (std::size_t b = 0; b < report.histogram.size(); ++b) {
            const double lo = static_cast<double>(b) / a.bins;
            const double hi = static_cast<double>(b + 1) / a.bins;
            csv += std::to_string(lo) + "," + std::to_string(hi) + "," +
                   std::to_string(report.histogram[b]) + "\n";
        }
        write_text(a.hist, csv);
        manifest.output("histogram", a.hist);
    }
    manifest.write(a.report);
    std::printf("r2 = %.6f over %zu circuits\n", report.r2, report.n_test);
    return 0;
}

int cmd_extrapolate(const ExtrapolateArgs& a, Manifest& manifest) {
    manifest.input("checkpoint", a.checkpoint);
    const Model model = load_checkpoint(a.checkpoint);
    std::vector<Dataset> datasets;
    datasets.reserve(a.data.size());
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        manifest.input("dataset" + std::to_string(i), a.data[i]);
        datasets.push_back(Dataset::load(a.data[i]));
    }
    std::vector<const Dataset*> ptrs;
    for (const Dataset& d : datasets) ptrs.push_back(&d);
    EvalOptions options;
    options.qubit = a.qubit;
    const auto rows = extrapolate_eval(model, ptrs, options);
    std::string csv = "n_qubits,r2\n";
    for (const auto& [n, r2] : rows) {
        csv += std::to_string(n) + "," + std::to_string(r2) + "\n";
        std::printf("N = %3d  r2 = %.6f\n", n, r2);
    }
    write_text(a.out, csv);
    manifest.output("table", a.out);
    manifest.write(a.out);
    return 0;
}

int cmd_bv(const BvArgs& a, Manifest& manifest) {
    if (a.qubits < 2) throw InvalidSecret("--qubits must be at least 2");
    BitString secret;
    if (!a.secret.empty()) {
        secret = BitString::from_string(a.secret);
    } else {
        if (a.secret_bits < 0) throw Error("give either --secret or --secret-bits");
        secret.bits.assign(a.qubits - 1, 0);
        Rng rng = Rng::for_stream(a.seed, 0x6276);  // "bv"
        int placed = 0;
        while (placed < a.secret_bits) {
            const auto pos = rng.next_below(a.qubits - 1);
            if (!secret.bits[pos]) {
                secret.bits[pos] = 1;
                ++placed;
            }
        }
        manifest.seed("secret", a.seed);
    }
    const Circuit circuit = build_bv_circuit(a.qubits, secret);

    std::vector<double> z(a.qubits, 0.0);
    if (a.exact) {
        z = expectations(run_circuit(circuit)).z;
    } else {
        if (a.checkpoint.empty()) throw Error("give --checkpoint or --exact");
        manifest.input("checkpoint", a.checkpoint);
        const Model model = load_checkpoint(a.checkpoint);
        if (model.config().n_outputs != 1)
            throw ConfigMismatch("BV emulation needs a single-output model");
        const CircuitEncoding enc = encode_one_hot(circuit);
        const int n = enc.n_qubits, p = enc.depth, c = enc.gate_set.channel_count();
        for (int begin = 0; begin < a.qubits; begin += a.batch) {
            const int end = std::min(a.qubits, begin + a.batch);
            Tensor x({end - begin, n, p, c});
            for (int q = begin; q < end; ++q) {
                const CircuitEncoding view = q == 0 ? enc : swap_qubit_rows(enc, 0, q);
                double* dst = x.data() + static_cast<std::int64_t>(q - begin) * view.data.size();
                for (std::size_t k = 0; k < view.data.size(); ++k) dst[k] = view.data[k];
            }
            const Tensor pred = model.predict(x);
            for (int q = begin; q < end; ++q) z[q] = pred[q - begin];
        }
    }

    const std::vector<double> data_z(z.begin(), z.end() - 1);  // ancilla excluded
    const BitString decoded = decode_bv(data_z, a.threshold);

    std::string csv = "qubit,z\n";
    for (int q = 0; q < a.qubits; ++q) csv += std::to_string(q) + "," + std::to_string(z[q]) + "\n";
    const std::string z_path = a.out + ".z.csv";
    write_text(z_path, csv);
    manifest.output("z_values", z_path);

    json j;
    j["n_qubits"] = a.qubits;
    j["depth"] = circuit.depth();
    j["secret"] = secret.to_string();
    j["decoded"] = decoded.to_string();
    j["match"] = decoded == secret;
    json idx = json::array();
    for (int q = 0; q < decoded.size(); ++q)
        if (decoded.bits[q]) idx.push_back(q);
    j["decoded_indices"] = idx;
    j["threshold"] = a.threshold;
    const std::string decoded_path = a.out + ".decoded.json";
    write_text(decoded_path, j.dump(2) + "\n");
    manifest.output("decoded", decoded_path);
    manifest.write(decoded_path);
    std::printf("secret  %s\ndecoded %s  (%s)\n", secret.to_string().c_str(),
                decoded.to_string().c_str(), decoded == secret ? "match" : "MISMATCH");
    return 0;
}

int cmd_reconstruct(const ReconstructArgs& a, Manifest& manifest) {
    manifest.input("input", a.input);
    const json in = read_json(a.input);
    const std::vector<double> z_raw = in.at("z_raw").get<std::vector<double>>();
    std::map<std::pair<int, int>, double> zz;
    if (in.contains("zz"))
        for (const auto& row : in.at("zz")) {
            const int i = row.at(0).get<int>();
            const int j = row.at(1).get<int>();
            zz[{std::min(i, j), std::max(i, j)}] = row.at(2).get<double>();
        }
    const auto provider = [&zz](int i, int j) {
        const auto it = zz.find({std::min(i, j), std::max(i, j)});
        if (it == zz.end())
            throw IoError("missing <Z_i Z_j> input for pair (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
        return it->second;
    };
    ReconstructOptions options{a.tol, a.snap};
    const TwoOutcomeResult res = reconstruct(z_raw, provider, options);
    json j;
    j["a"] = res.a.to_string();
    j["b"] = res.b.to_string();
    j["p_a"] = res.p_a;
    j["p_b"] = res.p_b();
    write_text(a.out, j.dump(2) + "\n");
    manifest.output("result", a.out);
    manifest.write(a.out);
    std::printf("a = %s (p = %.6f), b = %s (p = %.6f)\n", res.a.to_string().c_str(), res.p_a,
                res.b.to_string().c_str(), res.p_b());
    return 0;
}

int cmd_decode_bv(const DecodeArgs& a, Manifest& manifest) {
    manifest.input("input", a.input);
    const json in = read_json(a.input);
    const std::vector<double> z = in.at("z_pred").get<std::vector<double>>();
    const BitString w = decode_bv(z, a.threshold);
    json j;
    j["w"] = w.to_string();
    write_text(a.out, j.dump(2) + "\n");
    manifest.output("result", a.out);
    manifest.write(a.out);
    std::printf("w = %s\n", w.to_string().c_str());
    return 0;
}

int classify_error(const std::exception& e) {
    if (dynamic_cast<const InconsistentInput*>(&e)) return 4;
    if (dynamic_cast<const Error*>(&e)) return 3;
    return 4;
}

void print_error_json(const std::exception& e) {
    const char* type = "Error";
    if (dynamic_cast<const InconsistentInput*>(&e)) type = "InconsistentInput";
    else if (dynamic_cast<const EnsembleExhausted*>(&e)) type = "EnsembleExhausted";
    else if (dynamic_cast<const EnsembleTooLarge*>(&e)) type = "EnsembleTooLarge";
    else if (dynamic_cast<const MalformedEncoding*>(&e)) type = "MalformedEncoding";
    else if (dynamic_cast<const VersionMismatch*>(&e)) type = "VersionMismatch";
    else if (dynamic_cast<const CorruptCheckpoint*>(&e)) type = "CorruptCheckpoint";
    else if (dynamic_cast<const ConfigMismatch*>(&e)) type = "ConfigMismatch";
    else if (dynamic_cast<const ShapeMismatch*>(&e)) type = "ShapeMismatch";
    else if (dynamic_cast<const OverlapDetected*>(&e)) type = "OverlapDetected";
    else if (dynamic_cast<const EmptyDataset*>(&e)) type = "EmptyDataset";
    else if (dynamic_cast<const InvalidSecret*>(&e)) type = "InvalidSecret";
    else if (dynamic_cast<const LengthMismatch*>(&e)) type = "LengthMismatch";
    else if (dynamic_cast<const IndexOutOfRange*>(&e)) type = "IndexOutOfRange";
    else if (dynamic_cast<const DegeneratePair*>(&e)) type = "DegeneratePair";
    else if (dynamic_cast<const TooManyQubits*>(&e)) type = "TooManyQubits";
    else if (dynamic_cast<const IoError*>(&e)) type = "IoError";
    json j;
    j["error"] = {{"type", type}, {"message", e.what()}};
    std::fprintf(stderr, "%s\n", j.dump().c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"surrogate learning of random quantum circuit expectation values"};
    app.require_subcommand(1);

    int thread_count = 0;
    app.add_option("--threads", thread_count, "worker threads (default: QCLEARN_THREADS or cores)")
        ->envname("QCLEARN_THREADS");

    GenerateArgs gen;
    auto* sc_gen = app.add_subcommand("generate", "sample circuits and label them");
    sc_gen->add_option("--qubits", gen.qubits)->required();
    sc_gen->add_option("--depth", gen.depth)->required();
    sc_gen->add_option("--gate-set", gen.gate_set)->check(CLI::IsMember({"s", "s-star"}));
    sc_gen->add_option("--count", gen.count)->required();
    sc_gen->add_option("--labels", gen.labels)
        ->check(CLI::IsMember({"exact-z", "exact-z12", "noisy-z"}));
    sc_gen->add_option("--measure", gen.measure, "shots per circuit for noisy-z");
    sc_gen->add_option("--seed", gen.seed);
    sc_gen->add_option("--out", gen.out)->required();
    sc_gen->add_option("--jsonl", gen.jsonl, "also export JSON-lines");

    TrainArgs tr;
    auto* sc_train = app.add_subcommand("train", "train a CNN on a dataset");
    sc_train->add_option("--data", tr.data)->required();
    sc_train->add_option("--out", tr.out)->required();
    sc_train->add_option("--init", tr.init, "checkpoint to warm start from");
    sc_train->add_flag("--multi-output", tr.multi_output, "one output per qubit");
    sc_train->add_option("--label-index", tr.label_index);
    sc_train->add_option("--epochs", tr.epochs);
    sc_train->add_option("--batch", tr.batch);
    sc_train->add_option("--val-fraction", tr.val_fraction);
    sc_train->add_option("--patience", tr.patience);
    sc_train->add_option("--seed", tr.seed);
    sc_train->add_option("--lr", tr.lr);
    sc_train->add_option("--conv-layers", tr.conv_layers);
    sc_train->add_option("--filters", tr.filters);
    sc_train->add_option("--dense", tr.dense, "comma-separated dense sizes");
    sc_train->add_option("--log-every", tr.log_every);
    sc_train->add_option("--curve", tr.curve, "loss curve CSV path");
    sc_train->add_flag("--no-lr-halving", tr.no_lr_halving);

    EvalArgs ev;
    auto* sc_eval = app.add_subcommand("eval", "R^2 of a checkpoint on a test set");
    sc_eval->add_option("--checkpoint", ev.checkpoint)->required();
    sc_eval->add_option("--data", ev.data)->required();
    sc_eval->add_option("--qubit", ev.qubit, "predict z_j via a row swap");
    sc_eval->add_option("--pair", ev.pair, "predict z_ij via a double row swap")->expected(2);
    sc_eval->add_option("--label-index", ev.label_index);
    sc_eval->add_option("--scatter", ev.scatter, "scatter CSV path");
    sc_eval->add_option("--hist", ev.hist, "target histogram CSV path");
    sc_eval->add_option("--bins", ev.bins);
    sc_eval->add_option("--report", ev.report)->required();

    ExtrapolateArgs ex;
    auto* sc_ex = app.add_subcommand("extrapolate", "R^2 across qubit counts");
    sc_ex->add_option("--checkpoint", ex.checkpoint)->required();
    sc_ex->add_option("--data", ex.data, "test datasets, one per size")->required();
    sc_ex->add_option("--qubit", ex.qubit);
    sc_ex->add_option("--out", ex.out)->required();

    BvArgs bv;
    auto* sc_bv = app.add_subcommand("bv", "build and decode a Bernstein-Vazirani circuit");
    sc_bv->add_option("--qubits", bv.qubits)->required();
    sc_bv->add_option("--secret", bv.secret, "explicit N-1 bit secret");
    sc_bv->add_option("--secret-bits", bv.secret_bits, "plant this many random one bits");
    sc_bv->add_option("--seed", bv.seed);
    sc_bv->add_option("--checkpoint", bv.checkpoint);
    sc_bv->add_flag("--exact", bv.exact, "use the exact simulator instead of a CNN");
    sc_bv->add_option("--threshold", bv.threshold);
    sc_bv->add_option("--batch", bv.batch, "inference batch across qubit swaps");
    sc_bv->add_option("--out", bv.out, "output prefix")->required();

    ReconstructArgs rc;
    auto* sc_rc = app.add_subcommand("reconstruct", "two-outcome support from expectations");
    sc_rc->add_option("--input", rc.input)->required();
    sc_rc->add_option("--out", rc.out)->required();
    sc_rc->add_option("--tol", rc.tol);
    sc_rc->add_flag("--snap", rc.snap);

    DecodeArgs dc;
    auto* sc_dc = app.add_subcommand("decode-bv", "threshold z predictions into a secret");
    sc_dc->add_option("--input", dc.input)->required();
    sc_dc->add_option("--out", dc.out)->required();
    sc_dc->add_option("--threshold", dc.threshold);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (thread_count > 0) set_threads(thread_count);

    try {
        if (sc_gen->parsed()) {
            Manifest m("generate", argc, argv);
            return cmd_generate(gen, m);
        }
        if (sc_train->parsed()) {
            Manifest m("train", argc, argv);
            return cmd_train(tr, m);
        }
        if (sc_eval->parsed()) {
            Manifest m("eval", argc, argv);
            return cmd_eval(ev, m);
        }
        if (sc_ex->parsed()) {
            Manifest m("extrapolate", argc, argv);
            return cmd_extrapolate(ex, m);
        }
        if (sc_bv->parsed()) {
            Manifest m("bv", argc, argv);
            return cmd_bv(bv, m);
        }
        if (sc_rc->parsed()) {
            Manifest m("reconstruct", argc, argv);
            return cmd_reconstruct(rc, m);
        }
        if (sc_dc->parsed()) {
            Manifest m("decode-bv", argc, argv);
            return cmd_decode_bv(dc, m);
        }
    } catch (const std::exception& e) {
        print_error_json(e);
        return classify_error(e);
    }
    return 2;
}
