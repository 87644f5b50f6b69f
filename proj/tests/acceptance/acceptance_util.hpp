#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "qclearn/checkpoint.hpp"
#include "qclearn/dataset.hpp"
#include "qclearn/training.hpp"

namespace qcaccept {

using namespace qclearn;

inline std::string cache_dir() {
    const char* env = std::getenv("QCLEARN_CACHE_DIR");
    const std::string dir = env ? env : "acceptance_cache";
    std::filesystem::create_directories(dir);
    return dir;
}

// Datasets and checkpoints are cached on disk so criteria sharing artifacts
// (and re-runs) do not retrain. Cache keys carry every generation parameter.
inline Dataset cached_dataset(int n, int p, GateSet gs, std::uint64_t count, LabelKind kind,
                              std::int64_t n_measure, std::uint64_t seed) {
    char name[160];
    std::snprintf(name, sizeof(name), "ds_n%d_p%d_%s_%s_m%lld_c%llu_s%llu.qcml", n, p,
                  gs.id == GateSetId::S ? "s" : "sstar", label_kind_name(kind).c_str(),
                  static_cast<long long>(n_measure), static_cast<unsigned long long>(count),
                  static_cast<unsigned long long>(seed));
    const std::string path = cache_dir() + "/" + name;
    if (std::filesystem::exists(path)) return Dataset::load(path);
    Dataset ds = generate_dataset(n, p, gs, count, kind, n_measure, seed);
    ds.save(path);
    return ds;
}

inline Model cached_model(const std::string& tag, const std::function<Model()>& build) {
    const std::string path = cache_dir() + "/ck_" + tag + ".qcnn";
    if (std::filesystem::exists(path)) return load_checkpoint(path);
    Model model = build();
    save_checkpoint(model, path);
    return model;
}

inline Dataset prefix(const Dataset& ds, std::size_t count) {
    Dataset out;
    out.header = ds.header;
    out.header.count = count;
    out.circuits.assign(ds.circuits.begin(), ds.circuits.begin() + count);
    out.labels.assign(ds.labels.begin(), ds.labels.begin() + count * ds.label_arity());
    return out;
}

inline ModelConfig default_config(int n_outputs, int gate_channels = 4) {
    ModelConfig cfg;  // Fig. 4 reference model
    cfg.n_outputs = n_outputs;
    cfg.gate_channels = gate_channels;
    return cfg;
}

// Collects sub-checks and prints the single pass/fail line the suite
// requires, with measured values inline.
class Criterion {
  public:
    explicit Criterion(std::string name) : name_(std::move(name)) {
        start_ = std::chrono::steady_clock::now();
    }

    void check(bool ok, const std::string& detail) {
        passed_ = passed_ && ok;
        if (!detail_.empty()) detail_ += "; ";
        detail_ += detail;
    }

    bool passed() const { return passed_; }

    ~Criterion() {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::printf("[%s] %s — %s (%.1fs)\n", passed_ ? "PASS" : "FAIL", name_.c_str(),
                    detail_.c_str(), secs);
        std::fflush(stdout);
    }

  private:
    std::string name_;
    std::string detail_;
    bool passed_ = true;
    std::chrono::steady_clock::time_point start_;
};

inline std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, v);
    return buf;
}

}  // namespace qcaccept
