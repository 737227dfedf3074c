#include "msmseg/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

namespace msmseg {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'M', 'S', 'M', 'S', 'E', 'G', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("truncated checkpoint");
    return v;
}

}  // namespace

std::string config_to_json(const ModelConfig& cfg) {
    json j;
    j["H"] = cfg.H;
    j["W"] = cfg.W;
    j["levels"] = cfg.levels;
    j["C"] = cfg.C;
    j["D"] = cfg.D;
    j["heads"] = cfg.heads;
    j["M"] = cfg.M;
    j["k"] = cfg.k;
    j["n"] = cfg.n;
    j["num_classes"] = cfg.num_classes;
    j["num_queries"] = cfg.num_queries;
    j["seed"] = cfg.seed;
    j["per_voxel_fusion"] = cfg.per_voxel_fusion;
    return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError("bad config json: " + std::string(e.what()));
    }
    ModelConfig cfg;
    cfg.H = j.value("H", cfg.H);
    cfg.W = j.value("W", cfg.W);
    cfg.levels = j.value("levels", cfg.levels);
    cfg.C = j.value("C", cfg.C);
    cfg.D = j.value("D", cfg.D);
    cfg.heads = j.value("heads", cfg.heads);
    cfg.M = j.value("M", cfg.M);
    cfg.k = j.value("k", cfg.k);
    cfg.n = j.value("n", cfg.n);
    cfg.num_classes = j.value("num_classes", cfg.num_classes);
    cfg.num_queries = j.value("num_queries", cfg.num_queries);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.per_voxel_fusion = j.value("per_voxel_fusion", cfg.per_voxel_fusion);
    return validate_config(cfg);
}

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg,
                     const ModelWeights& weights) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kVersion);
    const std::string cfg_json = config_to_json(cfg);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg_json.size()));
    out.write(cfg_json.data(), static_cast<std::streamsize>(cfg_json.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(weights.all().size()));
    for (const auto& [name, var] : weights.all()) {
        put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint8_t>(out, 0);  // dtype tag 0 = f8
        const Tensor& t = var.value();
        put<std::uint8_t>(out, static_cast<std::uint8_t>(t.ndim()));
        for (int d : t.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing checkpoint " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("not a checkpoint file: " + path.string());
    const auto version = get<std::uint32_t>(in);
    if (version != kVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    const auto cfg_len = get<std::uint32_t>(in);
    std::string cfg_json(cfg_len, '\0');
    in.read(cfg_json.data(), cfg_len);
    if (!in) throw IoError("truncated checkpoint");

    LoadedModel lm;
    lm.cfg = config_from_json(cfg_json);
    lm.weights = std::make_shared<ModelWeights>(ModelWeights::init(lm.cfg));

    std::map<std::string, Var> by_name;
    for (const auto& [name, var] : lm.weights->all()) by_name.emplace(name, var);

    const auto count = get<std::uint32_t>(in);
    std::size_t applied = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = get<std::uint16_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto dtype = get<std::uint8_t>(in);
        if (dtype != 0) throw IoError("unknown tensor dtype tag in checkpoint");
        const auto ndim = get<std::uint8_t>(in);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(get<std::uint32_t>(in));
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!in) throw IoError("truncated checkpoint tensor " + name);
        auto it = by_name.find(name);
        if (it == by_name.end()) continue;  // forward-compatible: ignore extras
        if (it->second.value().shape() != shape)
            throw IoError("checkpoint tensor " + name + " has shape " +
                          Tensor::shape_str(shape) + ", model expects " +
                          Tensor::shape_str(it->second.value().shape()));
        it->second.value_mut() = std::move(t);
        ++applied;
    }
    if (applied != by_name.size())
        throw IoError("checkpoint is missing " + std::to_string(by_name.size() - applied) +
                      " model parameters");
    return lm;
}

}  // namespace msmseg
