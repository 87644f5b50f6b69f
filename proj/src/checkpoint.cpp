#include "qclearn/checkpoint.hpp"

#include <cstring>
#include <map>

#include "json.hpp"
#include "qclearn/io_util.hpp"

namespace qclearn {

using nlohmann::json;

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF64 = 0;
constexpr std::uint8_t kDtypeF32 = 1;

void write_tensor(ByteWriter& w, const std::string& name, const Tensor& t) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.str(name);
    w.u8(kDtypeF64);
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (int d = 0; d < t.rank(); ++d) w.u32(static_cast<std::uint32_t>(t.dim(d)));
    for (std::int64_t i = 0; i < t.size(); ++i) w.f64(t[i]);
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path, const TrainMeta& meta) {
    ByteWriter w;
    w.str("QCNN");
    w.u32(kVersion);

    json blob;
    blob["model"] = json::parse(model.config().to_json());
    blob["training"] = {{"seed", meta.seed},
                        {"steps", meta.steps},
                        {"loss_digest", meta.loss_digest}};
    const std::string cfg = blob.dump();
    w.u32(static_cast<std::uint32_t>(cfg.size()));
    w.str(cfg);

    const auto params = model.parameters();
    const auto names = model.parameter_names();
    for (std::size_t i = 0; i < params.size(); ++i) write_tensor(w, names[i], *params[i]);
    const auto stats = model.running_stats();
    const auto stat_names = model.running_stat_names();
    for (std::size_t i = 0; i < stats.size(); ++i) write_tensor(w, stat_names[i], *stats[i]);

    w.u32(crc32(w.bytes().data(), w.bytes().size()));
    write_file(path, w.bytes());
}

Model load_checkpoint(const std::string& path, TrainMeta* meta) {
    const auto bytes = read_file(path);
    if (bytes.size() < 12) throw CorruptCheckpoint("checkpoint file is too short");
    const std::uint32_t stored = crc32(bytes.data(), bytes.size() - 4);
    {
        ByteReader tail(bytes.data() + bytes.size() - 4, 4);
        if (tail.u32() != stored) throw CorruptCheckpoint("checkpoint CRC mismatch");
    }

    ByteReader r(bytes.data(), bytes.size() - 4);
    if (r.str(4) != "QCNN") throw CorruptCheckpoint("bad checkpoint magic");
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw VersionMismatch("unsupported checkpoint version " + std::to_string(version));

    ModelConfig config;
    TrainMeta parsed_meta;
    try {
        const std::uint32_t len = r.u32();
        json blob = json::parse(r.str(len));
        config = ModelConfig::from_json(blob.at("model").dump());
        const auto& tr = blob.at("training");
        parsed_meta.seed = tr.at("seed").get<std::uint64_t>();
        parsed_meta.steps = tr.at("steps").get<std::int64_t>();
        parsed_meta.loss_digest = tr.at("loss_digest").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw CorruptCheckpoint(std::string("bad checkpoint config blob: ") + e.what());
    }

    std::map<std::string, Tensor> tensors;
    try {
        while (r.remaining() > 0) {
            const std::uint16_t name_len = r.u16();
            const std::string name = r.str(name_len);
            const std::uint8_t dtype = r.u8();
            if (dtype != kDtypeF64 && dtype != kDtypeF32)
                throw CorruptCheckpoint("unknown tensor dtype in checkpoint");
            const std::uint8_t rank = r.u8();
            std::vector<std::int64_t> dims(rank);
            for (auto& d : dims) d = r.u32();
            Tensor t(dims);
            if (dtype == kDtypeF64) {
                for (std::int64_t i = 0; i < t.size(); ++i) t[i] = r.f64();
            } else {
                for (std::int64_t i = 0; i < t.size(); ++i) {
                    std::uint32_t bits = r.u32();
                    float f;
                    std::memcpy(&f, &bits, sizeof(f));
                    t[i] = static_cast<double>(f);
                }
            }
            tensors.emplace(name, std::move(t));
        }
    } catch (const IoError&) {
        throw CorruptCheckpoint("truncated tensor record in checkpoint");
    }

    Model model(config, 0);
    auto fill = [&tensors](const std::vector<std::string>& names,
                           const std::vector<Tensor*>& dests) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            auto it = tensors.find(names[i]);
            if (it == tensors.end())
                throw CorruptCheckpoint("checkpoint is missing tensor " + names[i]);
            if (it->second.shape() != dests[i]->shape())
                throw CorruptCheckpoint("checkpoint tensor has wrong shape: " + names[i]);
            *dests[i] = std::move(it->second);
        }
    };
    fill(model.parameter_names(), model.parameters());
    fill(model.running_stat_names(), model.running_stats());
    if (meta) *meta = parsed_meta;
    return model;
}

}  // namespace qclearn
